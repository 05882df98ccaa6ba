#include <cmath>
#include <numbers>

#include "veal/trainkit/trainkit.hpp"

namespace veal::trainkit {

double cosine_lr(std::size_t step, std::size_t total_steps, const TrainConfig& config) {
  if (total_steps == 0 || step >= total_steps) return 0.0;
  const auto warmup =
      static_cast<std::size_t>(std::ceil(config.warmup_ratio * static_cast<double>(total_steps)));
  if (step < warmup) {
    return config.peak_lr * static_cast<double>(step) / static_cast<double>(warmup);
  }
  const double progress =
      static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
  return config.peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

std::size_t steps_per_epoch(std::size_t records, std::size_t batch_size) {
  return (records + batch_size - 1) / batch_size;
}

}  // namespace veal::trainkit
