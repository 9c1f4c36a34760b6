#pragma once

#include <span>
#include <vector>

#include "delan/numerics/matrix.hpp"

namespace delan {

/// Softmax restricted to the valid positions of `mask`; invalid positions
/// get exactly 0. Throws std::invalid_argument("empty softmax support")
/// when no position is valid.
std::vector<double> masked_softmax(std::span<const double> v, const Mask& mask);

/// Standard product. Each output entry accumulates over the inner index
/// left to right.
Matrix matmul(const Matrix& a, const Matrix& b);

/// a * b^T without materialising the transpose.
Matrix matmul_bt(const Matrix& a, const Matrix& b);

/// Mean of the rows flagged valid in `row_mask`.
std::vector<double> mean_pool(const Matrix& m, const Mask& row_mask);

double dot(std::span<const double> a, std::span<const double> b);

/// Rows of `m` selected by `mask`, in order.
Matrix compact_rows(const Matrix& m, const Mask& mask);

Matrix concat_rows(std::span<const Matrix> parts);

}  // namespace delan
