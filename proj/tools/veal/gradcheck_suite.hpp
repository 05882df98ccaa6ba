#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace veal::cli {

struct GradcheckEntry {
  std::string name;   // parameter tensor
  std::string group;  // parameter group
  std::size_t size = 0;
  double max_rel_error = 0.0;
};

// Finite-difference check of the combined objective (all three losses, default
// loss weights, tau = 1) on a two-record batch with E = 2, N_q = 3, C = 8.
// Every parameter is redrawn at random first so no gradient is trivially
// zero. Entity table and token embedding are checked as trainable.
std::vector<GradcheckEntry> run_gradcheck_suite(std::uint64_t seed = 7);

}  // namespace veal::cli
