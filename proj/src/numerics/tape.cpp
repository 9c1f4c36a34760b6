#include "delan/numerics/tape.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "delan/numerics/ops.hpp"

namespace delan::ad {

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw std::invalid_argument("autodiff: uninitialised Var");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) throw std::invalid_argument("autodiff: Vars from different tapes");
  return tape_of(a);
}

// a^T * g
Matrix matmul_at(const Matrix& a, const Matrix& g) {
  Matrix out(a.cols(), g.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* grow = g.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < g.cols(); ++j) o[j] += aki * grow[j];
    }
  }
  return out;
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw std::logic_error("Var::scalar on non-1x1 node");
  return v(0, 0);
}

Var Tape::constant(Matrix value) { return record(std::move(value), false, nullptr); }

Var Tape::leaf(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, true, nullptr});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::record(Matrix value, bool requires_grad, Backward backward) {
  if (!requires_grad) backward = nullptr;
  nodes_.push_back(Node{std::move(value), {}, requires_grad, std::move(backward)});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Matrix Tape::grad_or_zero(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.empty()) return Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  check_same_shape(n.value, g, "accumulate");
  if (n.grad.empty()) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var root) {
  if (root.value().size() != 1) throw std::invalid_argument("backward: root must be 1x1");
  accumulate(root, Matrix(1, 1, 1.0));
  propagate();
}

void Tape::propagate() {
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad, n.value);
  }
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  return t.record(delan::matmul(a.value(), b.value()), a.requires_grad() || b.requires_grad(),
                  [a, b](Tape& tp, const Matrix& g, const Matrix&) {
                    if (a.requires_grad()) tp.accumulate(a, delan::matmul_bt(g, b.value()));
                    if (b.requires_grad()) tp.accumulate(b, matmul_at(a.value(), g));
                  });
}

Var matmul_bt(Var a, Var b) {
  Tape& t = tape_of(a, b);
  return t.record(delan::matmul_bt(a.value(), b.value()), a.requires_grad() || b.requires_grad(),
                  [a, b](Tape& tp, const Matrix& g, const Matrix&) {
                    if (a.requires_grad()) tp.accumulate(a, delan::matmul(g, b.value()));
                    if (b.requires_grad()) tp.accumulate(b, matmul_at(g, a.value()));
                  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  return t.record(a.value().transposed(), a.requires_grad(),
                  [a](Tape& tp, const Matrix& g, const Matrix&) { tp.accumulate(a, g.transposed()); });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  out += b.value();
  return t.record(std::move(out), a.requires_grad() || b.requires_grad(),
                  [a, b](Tape& tp, const Matrix& g, const Matrix&) {
                    tp.accumulate(a, g);
                    tp.accumulate(b, g);
                  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] -= bd[i];
  return t.record(std::move(out), a.requires_grad() || b.requires_grad(),
                  [a, b](Tape& tp, const Matrix& g, const Matrix&) {
                    tp.accumulate(a, g);
                    if (b.requires_grad()) {
                      Matrix ng = g;
                      for (double& v : ng.data()) v = -v;
                      tp.accumulate(b, ng);
                    }
                  });
}

Var hadamard(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same_shape(a.value(), b.value(), "hadamard");
  Matrix out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= bd[i];
  return t.record(std::move(out), a.requires_grad() || b.requires_grad(),
                  [a, b](Tape& tp, const Matrix& g, const Matrix&) {
                    auto gd = g.data();
                    if (a.requires_grad()) {
                      Matrix ga = g;
                      auto bd2 = b.value().data();
                      auto gad = ga.data();
                      for (std::size_t i = 0; i < gd.size(); ++i) gad[i] = gd[i] * bd2[i];
                      tp.accumulate(a, ga);
                    }
                    if (b.requires_grad()) {
                      Matrix gb = g;
                      auto ad2 = a.value().data();
                      auto gbd = gb.data();
                      for (std::size_t i = 0; i < gd.size(); ++i) gbd[i] = gd[i] * ad2[i];
                      tp.accumulate(b, gb);
                    }
                  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  Matrix out = a.value();
  for (double& v : out.data()) v *= s;
  return t.record(std::move(out), a.requires_grad(), [a, s](Tape& tp, const Matrix& g, const Matrix&) {
    Matrix ga = g;
    for (double& v : ga.data()) v *= s;
    tp.accumulate(a, ga);
  });
}

Var add_row(Var a, Var row) {
  Tape& t = tape_of(a, row);
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) throw std::invalid_argument("add_row: shape mismatch");
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += rv(0, c);
  return t.record(std::move(out), a.requires_grad() || row.requires_grad(),
                  [a, row](Tape& tp, const Matrix& g, const Matrix&) {
                    tp.accumulate(a, g);
                    if (row.requires_grad()) {
                      Matrix gr(1, g.cols());
                      for (std::size_t r = 0; r < g.rows(); ++r)
                        for (std::size_t c = 0; c < g.cols(); ++c) gr(0, c) += g(r, c);
                      tp.accumulate(row, gr);
                    }
                  });
}

Var relu(Var a) {
  Tape& t = tape_of(a);
  Matrix out = a.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return t.record(std::move(out), a.requires_grad(), [a](Tape& tp, const Matrix& g, const Matrix&) {
    Matrix ga = g;
    auto x = a.value().data();
    auto gd = ga.data();
    for (std::size_t i = 0; i < gd.size(); ++i)
      if (x[i] <= 0.0) gd[i] = 0.0;
    tp.accumulate(a, ga);
  });
}

Var gelu(Var a) {
  Tape& t = tape_of(a);
  Matrix out = a.value();
  for (double& v : out.data()) {
    const double x = v;
    v = 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
  }
  return t.record(std::move(out), a.requires_grad(), [a](Tape& tp, const Matrix& g, const Matrix&) {
    Matrix ga = g;
    auto x = a.value().data();
    auto gd = ga.data();
    for (std::size_t i = 0; i < gd.size(); ++i) {
      const double xi = x[i];
      const double th = std::tanh(kGeluC * (xi + kGeluA * xi * xi * xi));
      const double dth = (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * xi * xi);
      gd[i] *= 0.5 * (1.0 + th) + 0.5 * xi * dth;
    }
    tp.accumulate(a, ga);
  });
}

Var tanh(Var a) {
  Tape& t = tape_of(a);
  Matrix out = a.value();
  for (double& v : out.data()) v = std::tanh(v);
  return t.record(std::move(out), a.requires_grad(), [a](Tape& tp, const Matrix& g, const Matrix& y) {
    Matrix ga = g;
    auto yd = y.data();
    auto gd = ga.data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= 1.0 - yd[i] * yd[i];
    tp.accumulate(a, ga);
  });
}

Var layer_norm(Var a, Var gain, Var bias, double eps) {
  Tape& t = tape_of(a, gain);
  const Matrix& x = a.value();
  const std::size_t n = x.cols();
  if (gain.value().rows() != 1 || gain.value().cols() != n || !gain.value().same_shape(bias.value()))
    throw std::invalid_argument("layer_norm: parameter shape mismatch");
  Matrix xhat(x.rows(), n);
  std::vector<double> inv_std(x.rows());
  Matrix out(x.rows(), n);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < n; ++c) mu += x(r, c);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (x(r, c) - mu) * (x(r, c) - mu);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      xhat(r, c) = (x(r, c) - mu) * inv_std[r];
      out(r, c) = xhat(r, c) * gain.value()(0, c) + bias.value()(0, c);
    }
  }
  const bool rg = a.requires_grad() || gain.requires_grad() || bias.requires_grad();
  return t.record(std::move(out), rg,
                  [a, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                      Tape& tp, const Matrix& g, const Matrix&) {
                    const std::size_t rows = g.rows();
                    const std::size_t cols = g.cols();
                    if (gain.requires_grad() || bias.requires_grad()) {
                      Matrix gg(1, cols), gb(1, cols);
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < cols; ++c) {
                          gg(0, c) += g(r, c) * xhat(r, c);
                          gb(0, c) += g(r, c);
                        }
                      tp.accumulate(gain, gg);
                      tp.accumulate(bias, gb);
                    }
                    if (!a.requires_grad()) return;
                    Matrix ga(rows, cols);
                    const Matrix& gv = gain.value();
                    for (std::size_t r = 0; r < rows; ++r) {
                      double m1 = 0.0, m2 = 0.0;
                      for (std::size_t c = 0; c < cols; ++c) {
                        const double dxh = g(r, c) * gv(0, c);
                        m1 += dxh;
                        m2 += dxh * xhat(r, c);
                      }
                      m1 /= static_cast<double>(cols);
                      m2 /= static_cast<double>(cols);
                      for (std::size_t c = 0; c < cols; ++c) {
                        const double dxh = g(r, c) * gv(0, c);
                        ga(r, c) = inv_std[r] * (dxh - m1 - xhat(r, c) * m2);
                      }
                    }
                    tp.accumulate(a, ga);
                  });
}

Var softmax_rows(Var a, std::span<const std::uint8_t> allowed) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  if (!allowed.empty() && allowed.size() != x.size())
    throw std::invalid_argument("softmax_rows: mask size mismatch");
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < x.cols(); ++c)
      if ((allowed.empty() || allowed[r * x.cols() + c]) && x(r, c) > hi) hi = x(r, c);
    if (hi == -std::numeric_limits<double>::infinity())
      throw std::invalid_argument("empty softmax support");
    double z = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (!allowed.empty() && !allowed[r * x.cols() + c]) continue;
      out(r, c) = std::exp(x(r, c) - hi);
      z += out(r, c);
    }
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) /= z;
  }
  return t.record(std::move(out), a.requires_grad(), [a](Tape& tp, const Matrix& g, const Matrix& s) {
    Matrix ga(g.rows(), g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double inner = 0.0;
      for (std::size_t c = 0; c < g.cols(); ++c) inner += g(r, c) * s(r, c);
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) = s(r, c) * (g(r, c) - inner);
    }
    tp.accumulate(a, ga);
  });
}

Var log_softmax_rows(Var a) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  Matrix probs(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < x.cols(); ++c) hi = std::max(hi, x(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) z += std::exp(x(r, c) - hi);
    const double lz = std::log(z);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out(r, c) = x(r, c) - hi - lz;
      probs(r, c) = std::exp(out(r, c));
    }
  }
  return t.record(std::move(out), a.requires_grad(),
                  [a, probs = std::move(probs)](Tape& tp, const Matrix& g, const Matrix&) {
                    Matrix ga(g.rows(), g.cols());
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                      double total = 0.0;
                      for (std::size_t c = 0; c < g.cols(); ++c) total += g(r, c);
                      for (std::size_t c = 0; c < g.cols(); ++c)
                        ga(r, c) = g(r, c) - probs(r, c) * total;
                    }
                    tp.accumulate(a, ga);
                  });
}

Var gather_rows(Var table, std::span<const int> indices) {
  Tape& t = tape_of(table);
  const Matrix& tv = table.value();
  Matrix out(indices.size(), tv.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || static_cast<std::size_t>(idx) >= tv.rows())
      throw std::out_of_range("gather_rows: index out of range");
    std::copy(tv.row(idx).begin(), tv.row(idx).end(), out.row(i).begin());
  }
  std::vector<int> idx(indices.begin(), indices.end());
  return t.record(std::move(out), table.requires_grad(),
                  [table, idx = std::move(idx)](Tape& tp, const Matrix& g, const Matrix&) {
                    Matrix gt(table.value().rows(), table.value().cols());
                    for (std::size_t i = 0; i < idx.size(); ++i)
                      for (std::size_t c = 0; c < g.cols(); ++c) gt(idx[i], c) += g(i, c);
                    tp.accumulate(table, gt);
                  });
}

Var bag_rows(Var table, const std::vector<std::vector<int>>& groups) {
  Tape& t = tape_of(table);
  const Matrix& tv = table.value();
  Matrix out(groups.size(), tv.cols());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (int idx : groups[g]) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= tv.rows())
        throw std::out_of_range("bag_rows: index out of range");
      for (std::size_t c = 0; c < tv.cols(); ++c) out(g, c) += tv(idx, c);
    }
  }
  return t.record(std::move(out), table.requires_grad(), [table, groups](Tape& tp, const Matrix& g, const Matrix&) {
    Matrix gt(table.value().rows(), table.value().cols());
    for (std::size_t i = 0; i < groups.size(); ++i)
      for (int idx : groups[i])
        for (std::size_t c = 0; c < g.cols(); ++c) gt(idx, c) += g(i, c);
    tp.accumulate(table, gt);
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  if (begin + count > x.rows()) throw std::out_of_range("slice_rows: range out of bounds");
  Matrix out(count, x.cols());
  for (std::size_t r = 0; r < count; ++r)
    std::copy(x.row(begin + r).begin(), x.row(begin + r).end(), out.row(r).begin());
  return t.record(std::move(out), a.requires_grad(), [a, begin](Tape& tp, const Matrix& g, const Matrix&) {
    Matrix ga(a.value().rows(), a.value().cols());
    for (std::size_t r = 0; r < g.rows(); ++r)
      std::copy(g.row(r).begin(), g.row(r).end(), ga.row(begin + r).begin());
    tp.accumulate(a, ga);
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  if (begin + count > x.cols()) throw std::out_of_range("slice_cols: range out of bounds");
  Matrix out(x.rows(), count);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = x(r, begin + c);
  return t.record(std::move(out), a.requires_grad(), [a, begin](Tape& tp, const Matrix& g, const Matrix&) {
    Matrix ga(a.value().rows(), a.value().cols());
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, begin + c) = g(r, c);
    tp.accumulate(a, ga);
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  Tape& t = tape_of(parts.front());
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  bool rg = false;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw std::invalid_argument("concat_rows: Vars from different tapes");
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.rows();
    rg = rg || p.requires_grad();
  }
  Matrix out(rows, cols);
  std::size_t at = 0;
  for (const Var& p : parts) {
    const auto src = p.value().data();
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(at * cols));
    at += p.rows();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return t.record(std::move(out), rg, [ins = std::move(ins)](Tape& tp, const Matrix& g, const Matrix&) {
    std::size_t row = 0;
    for (const Var& p : ins) {
      const std::size_t n = p.value().rows();
      if (p.requires_grad()) {
        Matrix gp(n, g.cols());
        const auto src = g.data().subspan(row * g.cols(), n * g.cols());
        std::copy(src.begin(), src.end(), gp.data().begin());
        tp.accumulate(p, gp);
      }
      row += n;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  Tape& t = tape_of(parts.front());
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  bool rg = false;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw std::invalid_argument("concat_cols: Vars from different tapes");
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
    rg = rg || p.requires_grad();
  }
  Matrix out(rows, cols);
  std::size_t at = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, at + c) = v(r, c);
    at += v.cols();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return t.record(std::move(out), rg, [ins = std::move(ins)](Tape& tp, const Matrix& g, const Matrix&) {
    std::size_t col = 0;
    for (const Var& p : ins) {
      const std::size_t n = p.value().cols();
      if (p.requires_grad()) {
        Matrix gp(g.rows(), n);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < n; ++c) gp(r, c) = g(r, col + c);
        tp.accumulate(p, gp);
      }
      col += n;
    }
  });
}

Var mean_rows(Var a, const Mask& mask) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  const Mask m = mask.length() == 0 ? Mask::all(x.rows()) : mask;
  const auto pooled = delan::mean_pool(x, m);
  const double inv = 1.0 / static_cast<double>(m.count());
  return t.record(Matrix::row_vector(pooled), a.requires_grad(), [a, m, inv](Tape& tp, const Matrix& g, const Matrix&) {
    Matrix ga(a.value().rows(), a.value().cols());
    for (std::size_t r = 0; r < ga.rows(); ++r) {
      if (!m[r]) continue;
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) = g(0, c) * inv;
    }
    tp.accumulate(a, ga);
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return t.record(Matrix(1, 1, s), a.requires_grad(), [a](Tape& tp, const Matrix& g, const Matrix&) {
    tp.accumulate(a, Matrix(a.value().rows(), a.value().cols(), g(0, 0)));
  });
}

Var element(Var a, std::size_t r, std::size_t c) {
  Tape& t = tape_of(a);
  if (r >= a.rows() || c >= a.cols()) throw std::out_of_range("element: index out of range");
  return t.record(Matrix(1, 1, a.value()(r, c)), a.requires_grad(), [a, r, c](Tape& tp, const Matrix& g, const Matrix&) {
    Matrix ga(a.value().rows(), a.value().cols());
    ga(r, c) = g(0, 0);
    tp.accumulate(a, ga);
  });
}

Var stack_scalars(std::span<const Var> scalars, std::size_t rows, std::size_t cols) {
  if (scalars.size() != rows * cols || scalars.empty())
    throw std::invalid_argument("stack_scalars: count mismatch");
  Tape& t = tape_of(scalars.front());
  Matrix out(rows, cols);
  bool rg = false;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    out.data()[i] = scalars[i].scalar();
    rg = rg || scalars[i].requires_grad();
  }
  std::vector<Var> ins(scalars.begin(), scalars.end());
  return t.record(std::move(out), rg, [ins = std::move(ins)](Tape& tp, const Matrix& g, const Matrix&) {
    for (std::size_t i = 0; i < ins.size(); ++i)
      if (ins[i].requires_grad()) tp.accumulate(ins[i], Matrix(1, 1, g.data()[i]));
  });
}

Var normalize_rows(Var a, double eps) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  std::vector<double> norms(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    norms[r] = std::sqrt(delan::dot(x.row(r), x.row(r)) + eps);
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = x(r, c) / norms[r];
  }
  return t.record(std::move(out), a.requires_grad(),
                  [a, norms = std::move(norms)](Tape& tp, const Matrix& g, const Matrix& y) {
                    Matrix ga(g.rows(), g.cols());
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                      const double proj = delan::dot(y.row(r), g.row(r));
                      for (std::size_t c = 0; c < g.cols(); ++c)
                        ga(r, c) = (g(r, c) - y(r, c) * proj) / norms[r];
                    }
                    tp.accumulate(a, ga);
                  });
}

Var dropout(Var a, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return a;
  if (p >= 1.0) throw std::invalid_argument("dropout: p must be < 1");
  Tape& t = tape_of(a);
  const double keep_scale = 1.0 / (1.0 - p);
  Matrix mask(a.rows(), a.cols());
  for (double& m : mask.data()) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u >= p ? keep_scale : 0.0;
  }
  Matrix out = a.value();
  auto od = out.data();
  auto md = mask.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= md[i];
  return t.record(std::move(out), a.requires_grad(), [a, mask = std::move(mask)](Tape& tp, const Matrix& g, const Matrix&) {
    Matrix ga = g;
    auto gd = ga.data();
    auto md2 = mask.data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= md2[i];
    tp.accumulate(a, ga);
  });
}

}  // namespace delan::ad
