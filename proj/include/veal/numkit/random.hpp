#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace veal::numkit {

// Seeded generator with portable derived distributions. std::mt19937_64's raw
// output is fixed by the standard, but the <random> distributions are not, so
// uniform/normal/integer draws are derived here to keep seeded runs
// bit-reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), unbiased by rejection. n must be > 0.
  std::uint64_t below(std::uint64_t n);

  // Standard normal (Box-Muller, one value per call).
  double normal();

  // Index drawn with probability proportional to weights (all >= 0, sum > 0).
  std::size_t weighted(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer, used to derive independent per-item seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace veal::numkit
