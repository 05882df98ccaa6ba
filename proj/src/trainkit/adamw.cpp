#include <cmath>

#include "veal/errors.hpp"
#include "veal/trainkit/trainkit.hpp"

namespace veal::trainkit {

void TrainConfig::validate() const {
  auto fail = [](const char* field, const char* what) {
    throw ConfigError(std::string("field '") + field + "': " + what);
  };
  if (batch_size < 1) fail("batch_size", "must be at least 1");
  if (!(peak_lr >= 0.0)) fail("peak_lr", "must be >= 0");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) fail("warmup_ratio", "must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) fail("weight_decay", "must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) fail("beta1", "must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) fail("beta2", "must lie in [0, 1)");
  if (!(eps > 0.0)) fail("eps", "must be positive");
  weights.validate();
}

void adamw_step(std::span<Tensor> params, AdamWState& state, double lr, const TrainConfig& config,
                std::size_t step) {
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), {});
    state.v.assign(params.size(), {});
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].size(), 0.0);
      state.v[i].assign(params[i].size(), 0.0);
    }
  }
  for (const Tensor& p : params) {
    if (!p.requires_grad() || !p.has_grad()) continue;
    for (double g : p.grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient at step " + std::to_string(step));
      }
    }
  }
  state.t += 1;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  const double decay = lr * config.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    if (!p.requires_grad() || !p.has_grad()) continue;
    auto g = p.grad();
    auto x = p.mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < x.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      if (config.weight_decay != 0.0) x[k] -= decay * x[k];
      x[k] -= lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

}  // namespace veal::trainkit
