#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "veal/numkit/tensor.hpp"

// Differentiable primitives. Matrix ops take rank-2 tensors (a rank-1 tensor
// is read as one row); shape mismatches raise DimensionError naming both
// shapes. Broadcasting is limited to tensor-with-scalar; row biases go
// through repeat_rows / add_rowwise.
namespace veal::numkit {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
// x times a one-element tensor.
Tensor mul_scalar(const Tensor& x, const Tensor& s);

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
// Exact (erf) GELU.
Tensor gelu(const Tensor& x);

// Max-subtracted softmax / log-softmax along each row.
Tensor row_softmax(const Tensor& x);
Tensor row_log_softmax(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Mean over rows: [m x n] -> [1 x n].
Tensor mean_rows(const Tensor& x);

Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_rows(std::initializer_list<Tensor> parts);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);

// Embedding lookup: rows of `table` at `ids`.
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);
// [1 x n] -> [m x n].
Tensor repeat_rows(const Tensor& row, std::size_t m);
Tensor add_rowwise(const Tensor& x, const Tensor& row);
// out[i] = x[i, cols[i]], shape [m x 1].
Tensor pick(const Tensor& x, std::span<const std::size_t> cols);

// Each row scaled to unit L2 norm; a zero row raises DegenerateVectorError.
Tensor normalize_rows(const Tensor& x);
// a.b / (|a||b|) over the flattened values.
Tensor cosine(const Tensor& a, const Tensor& b);

}  // namespace veal::numkit
