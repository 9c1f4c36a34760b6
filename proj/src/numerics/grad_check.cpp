#include "delan/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace delan {

GradientReport grad_check(const Differentiable& f, const Matrix& x, double step, double tol, double floor) {
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");
  const auto probe = [&](const Matrix& at) {
    const double v = f.value(at);
    if (!std::isfinite(v)) throw std::domain_error("grad_check: non-finite function value");
    return v;
  };
  probe(x);
  const Matrix analytic = f.gradient(x);
  if (!analytic.same_shape(x)) throw std::invalid_argument("grad_check: gradient shape mismatch");

  GradientReport report;
  Matrix work = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double orig = work(r, c);
      work(r, c) = orig + step;
      const double up = probe(work);
      work(r, c) = orig - step;
      const double down = probe(work);
      work(r, c) = orig;
      const double fd = (up - down) / (2.0 * step);
      const double g = analytic(r, c);
      const double denom = std::max({std::abs(g), std::abs(fd), floor});
      const double rel = std::abs(g - fd) / denom;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_coordinate = {r, c};
      }
    }
  }
  report.passed = report.max_relative_error <= tol;
  return report;
}

}  // namespace delan
