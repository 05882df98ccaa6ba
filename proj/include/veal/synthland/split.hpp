#pragma once

#include <cstdint>
#include <vector>

namespace veal::synthland {

struct Split {
  std::vector<std::size_t> train;  // ascending record indices
  std::vector<std::size_t> test;   // ascending record indices
};

// Seeded hold-out: round(n * test_fraction) records go to test. Throws
// ConfigError unless 0 <= test_fraction < 1.
Split holdout_split(std::size_t n, double test_fraction, std::uint64_t seed);

}  // namespace veal::synthland
