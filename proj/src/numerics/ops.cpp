#include "delan/numerics/ops.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace delan {

std::vector<double> masked_softmax(std::span<const double> v, const Mask& mask) {
  if (mask.length() != v.size()) throw std::invalid_argument("masked_softmax: mask length mismatch");
  constexpr double kMasked = -std::numeric_limits<double>::infinity();
  double hi = kMasked;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (mask[i] && v[i] > hi) hi = v[i];
  if (hi == kMasked) throw std::invalid_argument("empty softmax support");

  std::vector<double> out(v.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!mask[i]) continue;
    out[i] = std::exp(v[i] - hi);
    z += out[i];
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] /= z;
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
  Matrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_bt: shape mismatch");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  return out;
}

std::vector<double> mean_pool(const Matrix& m, const Mask& row_mask) {
  if (row_mask.length() != m.rows()) throw std::invalid_argument("mean_pool: mask length mismatch");
  const std::size_t n = row_mask.count();
  if (n == 0) throw std::invalid_argument("mean_pool: no valid rows");
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (!row_mask[r]) continue;
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += m(r, c);
  }
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Matrix compact_rows(const Matrix& m, const Mask& mask) {
  if (mask.length() != m.rows()) throw std::invalid_argument("compact_rows: mask length mismatch");
  std::vector<double> data;
  std::size_t rows = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (!mask[r]) continue;
    data.insert(data.end(), m.row(r).begin(), m.row(r).end());
    ++rows;
  }
  return Matrix(rows, m.cols(), std::move(data));
}

Matrix concat_rows(std::span<const Matrix> parts) {
  if (parts.empty()) return {};
  const std::size_t cols = parts.front().cols();
  std::vector<double> data;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    data.insert(data.end(), p.data().begin(), p.data().end());
    rows += p.rows();
  }
  return Matrix(rows, cols, std::move(data));
}

}  // namespace delan
