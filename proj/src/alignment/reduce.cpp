#include "delan/alignment/reduce.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace delan::alignment {

AttentionPool attention_pool(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("empty softmax support");
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  AttentionPool out;
  out.derivative.resize(values.size());
  double z = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = std::exp(values[i] - hi);
    out.derivative[i] = w;
    z += w;
    weighted += w * values[i];
  }
  out.value = weighted / z;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double s = out.derivative[i] / z;
    out.derivative[i] = s * (1.0 + values[i] - out.value);
  }
  return out;
}

namespace {

struct Reduction {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  std::vector<AttentionPool> per_col;  // pooled over rows, one per valid column
  std::vector<AttentionPool> per_row;  // pooled over columns, one per valid row
  AttentionPool outer_col;             // pool of the per-column values
  AttentionPool outer_row;             // pool of the per-row values
};

Reduction run_reduction(const Matrix& m, const Mask& row_mask, const Mask& col_mask) {
  if (row_mask.length() != m.rows() || col_mask.length() != m.cols())
    throw std::invalid_argument("reduce_similarity: mask length mismatch");
  Reduction r;
  r.rows = row_mask.valid_indices();
  r.cols = col_mask.valid_indices();
  if (r.rows.empty() || r.cols.empty()) throw std::invalid_argument("empty softmax support");

  std::vector<double> buf;
  std::vector<double> col_values;
  col_values.reserve(r.cols.size());
  for (std::size_t j : r.cols) {
    buf.clear();
    for (std::size_t i : r.rows) buf.push_back(m(i, j));
    r.per_col.push_back(attention_pool(buf));
    col_values.push_back(r.per_col.back().value);
  }
  std::vector<double> row_values;
  row_values.reserve(r.rows.size());
  for (std::size_t i : r.rows) {
    buf.clear();
    for (std::size_t j : r.cols) buf.push_back(m(i, j));
    r.per_row.push_back(attention_pool(buf));
    row_values.push_back(r.per_row.back().value);
  }
  r.outer_col = attention_pool(col_values);
  r.outer_row = attention_pool(row_values);
  return r;
}

}  // namespace

double reduce_similarity(const Matrix& m, const Mask& row_mask, const Mask& col_mask) {
  const Reduction r = run_reduction(m, row_mask, col_mask);
  return (r.outer_col.value + r.outer_row.value) / 2.0;
}

double reduce_similarity(const Matrix& m) {
  return reduce_similarity(m, Mask::all(m.rows()), Mask::all(m.cols()));
}

Matrix reduce_similarity_gradient(const Matrix& m, const Mask& row_mask, const Mask& col_mask) {
  const Reduction r = run_reduction(m, row_mask, col_mask);
  Matrix grad(m.rows(), m.cols());
  for (std::size_t b = 0; b < r.cols.size(); ++b)
    for (std::size_t a = 0; a < r.rows.size(); ++a)
      grad(r.rows[a], r.cols[b]) += 0.5 * r.outer_col.derivative[b] * r.per_col[b].derivative[a];
  for (std::size_t a = 0; a < r.rows.size(); ++a)
    for (std::size_t b = 0; b < r.cols.size(); ++b)
      grad(r.rows[a], r.cols[b]) += 0.5 * r.outer_row.derivative[a] * r.per_row[a].derivative[b];
  return grad;
}

ad::Var reduce_similarity(ad::Var m, const Mask& row_mask, const Mask& col_mask) {
  const double value = reduce_similarity(m.value(), row_mask, col_mask);
  return m.tape()->record(Matrix(1, 1, value), m.requires_grad(),
                          [m, row_mask, col_mask](ad::Tape& tp, const Matrix& g, const Matrix&) {
                            Matrix gm = reduce_similarity_gradient(m.value(), row_mask, col_mask);
                            for (double& v : gm.data()) v *= g(0, 0);
                            tp.accumulate(m, gm);
                          });
}

}  // namespace delan::alignment
