#include <algorithm>
#include <cmath>

#include "veal/errors.hpp"
#include "veal/numkit/ops.hpp"
#include "veal/objectives/objectives.hpp"

namespace veal::objectives {

namespace {

struct RowInfo {
  std::size_t lo = 0, hi = 0;  // first argmin / argmax
  double span = 0.0;
};

}  // namespace

Tensor sparse_minmax_weights(const Tensor& sims, double theta) {
  if (sims.rank() != 2) {
    throw DimensionError("similarity matrix must be rank 2, got " +
                         numkit::shape_string(sims.shape()));
  }
  const std::size_t E = sims.rows(), N = sims.cols();
  if (E == 0 || N == 0) throw DimensionError("empty similarity matrix");
  auto s = sims.data();
  for (double x : s) {
    if (!std::isfinite(x)) throw NumericError("non-finite entity similarity");
  }

  std::vector<double> norm(E * N, 0.0);  // min-max value where kept, else 0
  std::vector<double> w(E * N, 0.0);
  std::vector<double> mass(E, 0.0);
  std::vector<RowInfo> info(E);
  for (std::size_t j = 0; j < E; ++j) {
    auto row = s.subspan(j * N, N);
    RowInfo& r = info[j];
    for (std::size_t v = 1; v < N; ++v) {
      if (row[v] < row[r.lo]) r.lo = v;
      if (row[v] > row[r.hi]) r.hi = v;
    }
    r.span = row[r.hi] - row[r.lo];
    if (!(r.span > 0.0)) {
      for (std::size_t v = 0; v < N; ++v) w[j * N + v] = 1.0 / static_cast<double>(N);
      continue;
    }
    double z = 0.0;
    for (std::size_t v = 0; v < N; ++v) {
      const double n = (row[v] - row[r.lo]) / r.span;
      if (n >= theta) {
        norm[j * N + v] = n;
        z += n;
      }
    }
    mass[j] = z;
    for (std::size_t v = 0; v < N; ++v) w[j * N + v] = norm[j * N + v] / z;
  }

  std::vector<double> weights = w;
  return Tensor::make_result(
      sims.shape(), std::move(weights), {sims},
      [E, N, norm, w, mass, info](const numkit::BackwardContext& ctx) {
        for (std::size_t j = 0; j < E; ++j) {
          const RowInfo& r = info[j];
          if (!(r.span > 0.0)) continue;
          auto gw = ctx.out_grad.subspan(j * N, N);
          auto gs = ctx.in_grads[0].subspan(j * N, N);
          double gw_dot_w = 0.0;
          for (std::size_t v = 0; v < N; ++v) gw_dot_w += gw[v] * w[j * N + v];
          // Dropped entries (and a kept exact minimum) have no effect on w.
          double to_lo = 0.0, to_hi = 0.0;
          for (std::size_t v = 0; v < N; ++v) {
            const double n = norm[j * N + v];
            if (n == 0.0) continue;
            const double dn = (gw[v] - gw_dot_w) / mass[j];
            gs[v] += dn / r.span;
            to_lo += dn * (n - 1.0) / r.span;
            to_hi -= dn * n / r.span;
          }
          gs[r.lo] += to_lo;
          gs[r.hi] += to_hi;
        }
      });
}

EntityGrouping entity_group(const Tensor& high_tokens, const Tensor& entity_embs, double theta) {
  if (high_tokens.rank() != 2 || entity_embs.rank() != 2 ||
      high_tokens.cols() != entity_embs.cols()) {
    throw DimensionError("entity_group: tokens " + numkit::shape_string(high_tokens.shape()) +
                         " vs entities " + numkit::shape_string(entity_embs.shape()));
  }
  if (entity_embs.rows() == 0 || high_tokens.rows() == 0) {
    throw DimensionError("entity_group needs at least one entity and one token");
  }
  const Tensor sims = numkit::matmul(entity_embs, numkit::transpose(high_tokens));
  EntityGrouping out;
  out.weights = sparse_minmax_weights(sims, theta);
  out.grouped = numkit::matmul(out.weights, high_tokens);
  return out;
}

}  // namespace veal::objectives
