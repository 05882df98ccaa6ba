#include "veal/synthland/split.hpp"

#include <algorithm>
#include <cmath>

#include "veal/errors.hpp"
#include "veal/numkit/random.hpp"

namespace veal::synthland {

Split holdout_split(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ConfigError("field 'test_fraction': must lie in [0, 1)");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  numkit::Rng rng(numkit::mix_seed(seed, 0x5b117));
  rng.shuffle(order);
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  Split s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

}  // namespace veal::synthland
