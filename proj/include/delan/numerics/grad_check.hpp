#pragma once

#include <cstddef>
#include <functional>
#include <utility>

#include "delan/numerics/matrix.hpp"

namespace delan {

struct GradientReport {
  double max_relative_error = 0.0;
  std::pair<std::size_t, std::size_t> worst_coordinate{0, 0};
  bool passed = true;
};

/// A scalar function of a matrix together with its claimed gradient.
struct Differentiable {
  std::function<double(const Matrix&)> value;
  std::function<Matrix(const Matrix&)> gradient;
};

/// Compares f.gradient(x) against central differences (f(x+h)-f(x-h))/2h
/// coordinate by coordinate. Relative error per coordinate is
/// |g - fd| / max(|g|, |fd|, floor). Throws std::domain_error if f is
/// non-finite at any probe.
GradientReport grad_check(const Differentiable& f, const Matrix& x, double step, double tol,
                          double floor = 1e-6);

}  // namespace delan
