#include "veal/numkit/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "veal/errors.hpp"

namespace veal::numkit {

namespace {

double evaluate(const std::function<Tensor()>& f) {
  const Tensor out = f();
  if (out.size() != 1) throw DimensionError("finite_diff_check: f must return a scalar");
  const double v = out.item();
  if (!std::isfinite(v)) throw NumericError("finite_diff_check: f returned a non-finite value");
  return v;
}

}  // namespace

double finite_diff_check(const std::function<Tensor()>& f, Tensor params, double h) {
  if (!params.is_leaf() || !params.requires_grad()) {
    throw Error("finite_diff_check: params must be a requires_grad leaf");
  }
  params.zero_grad();
  const Tensor loss = f();
  if (loss.size() != 1) throw DimensionError("finite_diff_check: f must return a scalar");
  if (!std::isfinite(loss.item())) {
    throw NumericError("finite_diff_check: f returned a non-finite value");
  }
  loss.backward(BackwardMode::kAccumulate);
  // A parameter f never touches has an all-zero analytic gradient.
  std::vector<double> analytic = params.has_grad()
                                     ? std::vector<double>(params.grad().begin(), params.grad().end())
                                     : std::vector<double>(params.size(), 0.0);
  params.zero_grad();

  auto values = params.mutable_data();
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + h;
    const double up = evaluate(f);
    values[i] = saved - h;
    const double down = evaluate(f);
    values[i] = saved;
    const double cd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(cd), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - cd) / denom);
  }
  return worst;
}

}  // namespace veal::numkit
