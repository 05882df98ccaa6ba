#include "veal/numkit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "veal/errors.hpp"

namespace veal::numkit {

namespace {

void require_matrix(const Tensor& x, const char* op) {
  if (x.rank() > 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         shape_string(x.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

void require_finite(std::span<const double> values, const char* op) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite input");
  }
}

Shape mat_shape(std::size_t m, std::size_t n) { return Shape{m, n}; }

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  std::vector<double> out(x.size());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  return Tensor::make_result(x.shape(), std::move(out), {x},
                             [x, deriv](const BackwardContext& ctx) {
                               auto in = x.data();
                               for (std::size_t i = 0; i < in.size(); ++i) {
                                 ctx.in_grads[0][i] += ctx.out_grad[i] * deriv(in[i]);
                               }
                             });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  auto A = a.data();
  auto B = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
    }
  }
  return Tensor::make_result(mat_shape(m, n), std::move(out), {a, b},
                             [a, b, m, k, n](const BackwardContext& ctx) {
                               auto A = a.data();
                               auto B = b.data();
                               auto G = ctx.out_grad;
                               if (ctx.needs(0)) {
                                 auto dA = ctx.in_grads[0];
                                 for (std::size_t i = 0; i < m; ++i)
                                   for (std::size_t p = 0; p < k; ++p) {
                                     double acc = 0.0;
                                     for (std::size_t j = 0; j < n; ++j)
                                       acc += G[i * n + j] * B[p * n + j];
                                     dA[i * k + p] += acc;
                                   }
                               }
                               if (ctx.needs(1)) {
                                 auto dB = ctx.in_grads[1];
                                 for (std::size_t i = 0; i < m; ++i)
                                   for (std::size_t p = 0; p < k; ++p) {
                                     const double aip = A[i * k + p];
                                     for (std::size_t j = 0; j < n; ++j)
                                       dB[p * n + j] += aip * G[i * n + j];
                                   }
                               }
                             });
}

Tensor transpose(const Tensor& x) {
  require_matrix(x, "transpose");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  auto X = x.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = X[i * n + j];
  return Tensor::make_result(mat_shape(n, m), std::move(out), {x},
                             [m, n](const BackwardContext& ctx) {
                               for (std::size_t i = 0; i < m; ++i)
                                 for (std::size_t j = 0; j < n; ++j)
                                   ctx.in_grads[0][i * n + j] += ctx.out_grad[j * m + i];
                             });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b},
                             [](const BackwardContext& ctx) {
                               for (std::size_t s = 0; s < 2; ++s) {
                                 if (!ctx.needs(s)) continue;
                                 for (std::size_t i = 0; i < ctx.out_grad.size(); ++i)
                                   ctx.in_grads[s][i] += ctx.out_grad[i];
                               }
                             });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b},
                             [](const BackwardContext& ctx) {
                               for (std::size_t i = 0; i < ctx.out_grad.size(); ++i) {
                                 if (ctx.needs(0)) ctx.in_grads[0][i] += ctx.out_grad[i];
                                 if (ctx.needs(1)) ctx.in_grads[1][i] -= ctx.out_grad[i];
                               }
                             });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b},
                             [a, b](const BackwardContext& ctx) {
                               for (std::size_t i = 0; i < ctx.out_grad.size(); ++i) {
                                 if (ctx.needs(0)) ctx.in_grads[0][i] += ctx.out_grad[i] * b.data()[i];
                                 if (ctx.needs(1)) ctx.in_grads[1][i] += ctx.out_grad[i] * a.data()[i];
                               }
                             });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * factor;
  return Tensor::make_result(x.shape(), std::move(out), {x},
                             [factor](const BackwardContext& ctx) {
                               for (std::size_t i = 0; i < ctx.out_grad.size(); ++i)
                                 ctx.in_grads[0][i] += ctx.out_grad[i] * factor;
                             });
}

Tensor mul_scalar(const Tensor& x, const Tensor& s) {
  if (s.size() != 1) {
    throw DimensionError("mul_scalar: expected a one-element factor, got " +
                         shape_string(s.shape()));
  }
  const double f = s.item();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * f;
  return Tensor::make_result(x.shape(), std::move(out), {x, s},
                             [x, f](const BackwardContext& ctx) {
                               double acc = 0.0;
                               for (std::size_t i = 0; i < ctx.out_grad.size(); ++i) {
                                 if (ctx.needs(0)) ctx.in_grads[0][i] += ctx.out_grad[i] * f;
                                 acc += ctx.out_grad[i] * x.data()[i];
                               }
                               if (ctx.needs(1)) ctx.in_grads[1][0] += acc;
                             });
}

Tensor exp(const Tensor& x) {
  return unary(x, [](double v) { return std::exp(v); },
               [](double v) { return std::exp(v); });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw NumericError("log: non-positive input " + std::to_string(v));
  }
  return unary(x, [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

Tensor gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return unary(
      x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [](double v) {
        const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
        return cdf + v * pdf;
      });
}

Tensor row_softmax(const Tensor& x) {
  require_matrix(x, "row_softmax");
  require_finite(x.data(), "row_softmax");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  auto X = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = X.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (out[i * n + j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= z;
  }
  auto y = std::make_shared<std::vector<double>>(out);
  return Tensor::make_result(x.shape(), std::move(out), {x},
                             [y, m, n](const BackwardContext& ctx) {
                               const auto& Y = *y;
                               for (std::size_t i = 0; i < m; ++i) {
                                 double dot = 0.0;
                                 for (std::size_t j = 0; j < n; ++j)
                                   dot += ctx.out_grad[i * n + j] * Y[i * n + j];
                                 for (std::size_t j = 0; j < n; ++j)
                                   ctx.in_grads[0][i * n + j] +=
                                       Y[i * n + j] * (ctx.out_grad[i * n + j] - dot);
                               }
                             });
}

Tensor row_log_softmax(const Tensor& x) {
  require_matrix(x, "row_log_softmax");
  require_finite(x.data(), "row_log_softmax");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  auto X = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = X.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(row[j] - mx);
    const double lz = mx + std::log(z);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = row[j] - lz;
  }
  auto y = std::make_shared<std::vector<double>>(out);
  return Tensor::make_result(x.shape(), std::move(out), {x},
                             [y, m, n](const BackwardContext& ctx) {
                               const auto& Y = *y;
                               for (std::size_t i = 0; i < m; ++i) {
                                 double total = 0.0;
                                 for (std::size_t j = 0; j < n; ++j)
                                   total += ctx.out_grad[i * n + j];
                                 for (std::size_t j = 0; j < n; ++j)
                                   ctx.in_grads[0][i * n + j] +=
                                       ctx.out_grad[i * n + j] - std::exp(Y[i * n + j]) * total;
                               }
                             });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return Tensor::make_result(Shape{}, {acc}, {x}, [](const BackwardContext& ctx) {
    const double g = ctx.out_grad[0];
    for (double& d : ctx.in_grads[0]) d += g;
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor mean_rows(const Tensor& x) {
  require_matrix(x, "mean_rows");
  const std::size_t m = x.rows(), n = x.cols();
  if (m == 0) throw DimensionError("mean_rows of a tensor with no rows");
  std::vector<double> out(n, 0.0);
  auto X = x.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += X[i * n + j];
  const double inv = 1.0 / static_cast<double>(m);
  for (double& v : out) v *= inv;
  return Tensor::make_result(mat_shape(1, n), std::move(out), {x},
                             [m, n, inv](const BackwardContext& ctx) {
                               for (std::size_t i = 0; i < m; ++i)
                                 for (std::size_t j = 0; j < n; ++j)
                                   ctx.in_grads[0][i * n + j] += ctx.out_grad[j] * inv;
                             });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows of nothing");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  for (const auto& p : parts) {
    require_matrix(p, "concat_rows");
    if (p.cols() != n) {
      throw DimensionError("concat_rows: column mismatch " + shape_string(parts[0].shape()) +
                           " vs " + shape_string(p.shape()));
    }
    m += p.rows();
  }
  std::vector<double> out;
  out.reserve(m * n);
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return Tensor::make_result(mat_shape(m, n), std::move(out), inputs,
                             [offsets](const BackwardContext& ctx) {
                               for (std::size_t s = 0; s < ctx.in_grads.size(); ++s) {
                                 if (!ctx.needs(s)) continue;
                                 auto dst = ctx.in_grads[s];
                                 for (std::size_t i = 0; i < dst.size(); ++i)
                                   dst[i] += ctx.out_grad[offsets[s] + i];
                               }
                             });
}

Tensor concat_rows(std::initializer_list<Tensor> parts) {
  return concat_rows(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_rows");
  const std::size_t n = x.cols();
  if (begin > end || end > x.rows()) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") outside " + shape_string(x.shape()));
  }
  std::vector<double> out(x.data().begin() + begin * n, x.data().begin() + end * n);
  return Tensor::make_result(mat_shape(end - begin, n), std::move(out), {x},
                             [begin, n](const BackwardContext& ctx) {
                               for (std::size_t i = 0; i < ctx.out_grad.size(); ++i)
                                 ctx.in_grads[0][begin * n + i] += ctx.out_grad[i];
                             });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  const std::size_t m = parts[0].rows();
  std::size_t n = 0;
  std::vector<std::size_t> offsets, widths;
  for (const auto& p : parts) {
    require_matrix(p, "concat_cols");
    if (p.rows() != m) {
      throw DimensionError("concat_cols: row mismatch " + shape_string(parts[0].shape()) +
                           " vs " + shape_string(p.shape()));
    }
    offsets.push_back(n);
    widths.push_back(p.cols());
    n += p.cols();
  }
  std::vector<double> out(m * n);
  for (std::size_t s = 0; s < parts.size(); ++s) {
    auto P = parts[s].data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < widths[s]; ++j) out[i * n + offsets[s] + j] = P[i * widths[s] + j];
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return Tensor::make_result(mat_shape(m, n), std::move(out), inputs,
                             [offsets, widths, m, n](const BackwardContext& ctx) {
                               for (std::size_t s = 0; s < ctx.in_grads.size(); ++s) {
                                 if (!ctx.needs(s)) continue;
                                 for (std::size_t i = 0; i < m; ++i)
                                   for (std::size_t j = 0; j < widths[s]; ++j)
                                     ctx.in_grads[s][i * widths[s] + j] +=
                                         ctx.out_grad[i * n + offsets[s] + j];
                               }
                             });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_cols");
  const std::size_t m = x.rows(), n = x.cols();
  if (begin > end || end > n) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") outside " + shape_string(x.shape()));
  }
  const std::size_t w = end - begin;
  std::vector<double> out(m * w);
  auto X = x.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = X[i * n + begin + j];
  return Tensor::make_result(mat_shape(m, w), std::move(out), {x},
                             [m, n, w, begin](const BackwardContext& ctx) {
                               for (std::size_t i = 0; i < m; ++i)
                                 for (std::size_t j = 0; j < w; ++j)
                                   ctx.in_grads[0][i * n + begin + j] += ctx.out_grad[i * w + j];
                             });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  require_matrix(table, "gather_rows");
  const std::size_t v = table.rows(), n = table.cols();
  std::vector<double> out;
  out.reserve(ids.size() * n);
  for (std::size_t id : ids) {
    if (id >= v) {
      throw LookupError("gather_rows: id " + std::to_string(id) + " outside table " +
                        shape_string(table.shape()));
    }
    out.insert(out.end(), table.data().begin() + id * n, table.data().begin() + (id + 1) * n);
  }
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return Tensor::make_result(mat_shape(ids.size(), n), std::move(out), {table},
                             [idx, n](const BackwardContext& ctx) {
                               for (std::size_t r = 0; r < idx.size(); ++r)
                                 for (std::size_t j = 0; j < n; ++j)
                                   ctx.in_grads[0][idx[r] * n + j] += ctx.out_grad[r * n + j];
                             });
}

Tensor repeat_rows(const Tensor& row, std::size_t m) {
  if (row.rows() != 1) {
    throw DimensionError("repeat_rows: expected a single row, got " + shape_string(row.shape()));
  }
  const std::size_t n = row.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    std::copy(row.data().begin(), row.data().end(), out.begin() + i * n);
  return Tensor::make_result(mat_shape(m, n), std::move(out), {row},
                             [m, n](const BackwardContext& ctx) {
                               for (std::size_t i = 0; i < m; ++i)
                                 for (std::size_t j = 0; j < n; ++j)
                                   ctx.in_grads[0][j] += ctx.out_grad[i * n + j];
                             });
}

Tensor add_rowwise(const Tensor& x, const Tensor& row) {
  if (x.rank() != 2 || row.rows() != 1 || row.cols() != x.cols()) {
    throw DimensionError("add_rowwise: bias " + shape_string(row.shape()) +
                         " does not fit " + shape_string(x.shape()));
  }
  return add(x, repeat_rows(row, x.rows()));
}

Tensor pick(const Tensor& x, std::span<const std::size_t> cols) {
  require_matrix(x, "pick");
  const std::size_t m = x.rows(), n = x.cols();
  if (cols.size() != m) {
    throw DimensionError("pick: " + std::to_string(cols.size()) + " indices for " +
                         shape_string(x.shape()));
  }
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (cols[i] >= n) throw LookupError("pick: column " + std::to_string(cols[i]) + " out of range");
    out[i] = x.data()[i * n + cols[i]];
  }
  std::vector<std::size_t> idx(cols.begin(), cols.end());
  return Tensor::make_result(mat_shape(m, 1), std::move(out), {x},
                             [idx, n](const BackwardContext& ctx) {
                               for (std::size_t i = 0; i < idx.size(); ++i)
                                 ctx.in_grads[0][i * n + idx[i]] += ctx.out_grad[i];
                             });
}

Tensor normalize_rows(const Tensor& x) {
  require_matrix(x, "normalize_rows");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n), norms(m);
  auto X = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += X[i * n + j] * X[i * n + j];
    norms[i] = std::sqrt(s);
    if (!(norms[i] > 0.0)) {
      throw DegenerateVectorError("normalize_rows: row " + std::to_string(i) + " has zero norm");
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = X[i * n + j] / norms[i];
  }
  auto y = std::make_shared<std::vector<double>>(out);
  return Tensor::make_result(x.shape(), std::move(out), {x},
                             [y, norms, m, n](const BackwardContext& ctx) {
                               const auto& Y = *y;
                               for (std::size_t i = 0; i < m; ++i) {
                                 double dot = 0.0;
                                 for (std::size_t j = 0; j < n; ++j)
                                   dot += ctx.out_grad[i * n + j] * Y[i * n + j];
                                 for (std::size_t j = 0; j < n; ++j)
                                   ctx.in_grads[0][i * n + j] +=
                                       (ctx.out_grad[i * n + j] - Y[i * n + j] * dot) / norms[i];
                               }
                             });
}

Tensor cosine(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine: size mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  auto A = a.data();
  auto B = b.data();
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) {
    dot += A[i] * B[i];
    na += A[i] * A[i];
    nb += B[i] * B[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (!(na > 0.0) || !(nb > 0.0)) throw DegenerateVectorError("cosine: zero-norm input");
  const double c = std::clamp(dot / (na * nb), -1.0, 1.0);
  return Tensor::make_result(Shape{}, {c}, {a, b},
                             [a, b, na, nb, c](const BackwardContext& ctx) {
                               const double g = ctx.out_grad[0];
                               auto A = a.data();
                               auto B = b.data();
                               for (std::size_t i = 0; i < A.size(); ++i) {
                                 if (ctx.needs(0))
                                   ctx.in_grads[0][i] += g * (B[i] / (na * nb) - c * A[i] / (na * na));
                                 if (ctx.needs(1))
                                   ctx.in_grads[1][i] += g * (A[i] / (na * nb) - c * B[i] / (nb * nb));
                               }
                             });
}

}  // namespace veal::numkit
