#pragma once

#include <functional>

#include "veal/numkit/tensor.hpp"

namespace veal::numkit {

// Compares the analytic gradient of f with respect to `params` against central
// differences with step h. Returns
//   max_i |analytic_i - cd_i| / max(|analytic_i|, |cd_i|, 1e-8).
// `params` must be a requires_grad leaf; its grad is cleared on return. Other
// leaves reached by f accumulate gradient and are left for the caller.
double finite_diff_check(const std::function<Tensor()>& f, Tensor params, double h = 1e-6);

}  // namespace veal::numkit
