#pragma once

#include <span>
#include <vector>

#include "delan/numerics/matrix.hpp"
#include "delan/numerics/tape.hpp"

namespace delan::alignment {

/// Softmax-weighted mean of `values`: sum_i softmax(v)_i * v_i.
/// `derivative[i]` holds d(pool)/d(v_i) = s_i * (1 + v_i - pool).
struct AttentionPool {
  double value = 0.0;
  std::vector<double> derivative;
};
AttentionPool attention_pool(std::span<const double> values);

/// Two-stage attention reduction of a similarity matrix to a scalar.
///
/// Columns are first pooled over the valid rows (giving one value per
/// column) and rows over the valid columns (one value per row); each of the
/// two resulting vectors is pooled again and the two scalars are averaged.
/// Invalid rows and columns take part in no softmax and no sum, so the
/// result over a padded matrix equals the result over its compacted valid
/// submatrix bit for bit.
///
/// Throws std::invalid_argument when either mask has no valid entry.
double reduce_similarity(const Matrix& m, const Mask& row_mask, const Mask& col_mask);
double reduce_similarity(const Matrix& m);

/// Gradient of reduce_similarity w.r.t. every entry of m (zero at masked entries).
Matrix reduce_similarity_gradient(const Matrix& m, const Mask& row_mask, const Mask& col_mask);

/// Tape op wrapping the closed-form value and gradient above.
ad::Var reduce_similarity(ad::Var m, const Mask& row_mask, const Mask& col_mask);

}  // namespace delan::alignment
