#include "delan/alignment/contrastive.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace delan::alignment {

namespace {

std::vector<std::size_t> resolve_positives(const Matrix& scores, double tau,
                                           std::span<const std::size_t> positives) {
  if (!(tau > 0.0)) throw std::invalid_argument("contrastive loss: tau must be positive");
  if (scores.rows() == 0) throw std::invalid_argument("contrastive loss: empty score matrix");
  std::vector<std::size_t> pos;
  if (positives.empty()) {
    pos.resize(scores.rows());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
  } else {
    if (positives.size() != scores.rows())
      throw std::invalid_argument("contrastive loss: one positive index per row required");
    pos.assign(positives.begin(), positives.end());
  }
  for (std::size_t p : pos)
    if (p >= scores.cols())
      throw std::invalid_argument("contrastive loss: invalid positive index " + std::to_string(p));
  return pos;
}

// Row softmax of scores / tau; also returns the per-row losses.
Matrix scaled_softmax(const Matrix& scores, double tau, std::span<const std::size_t> pos,
                      std::vector<double>& losses) {
  Matrix probs(scores.rows(), scores.cols());
  losses.assign(scores.rows(), 0.0);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < scores.cols(); ++j) hi = std::max(hi, scores(i, j) / tau);
    double z = 0.0;
    for (std::size_t j = 0; j < scores.cols(); ++j) {
      probs(i, j) = std::exp(scores(i, j) / tau - hi);
      z += probs(i, j);
    }
    for (std::size_t j = 0; j < scores.cols(); ++j) probs(i, j) /= z;
    losses[i] = -(scores(i, pos[i]) / tau - hi - std::log(z));
  }
  return probs;
}

}  // namespace

std::vector<double> contrastive_row_losses(const Matrix& scores, double tau,
                                           std::span<const std::size_t> positives) {
  const auto pos = resolve_positives(scores, tau, positives);
  std::vector<double> losses;
  scaled_softmax(scores, tau, pos, losses);
  return losses;
}

double directional_contrastive_loss(const Matrix& scores, double tau,
                                    std::span<const std::size_t> positives) {
  const auto rows = contrastive_row_losses(scores, tau, positives);
  double total = 0.0;
  for (double v : rows) total += v;
  return total / static_cast<double>(rows.size());
}

double contrastive_loss(const Matrix& scores, double tau) {
  if (scores.cols() != scores.rows())
    throw std::invalid_argument("contrastive_loss: square score matrix required");
  return contrastive_loss(scores, scores.transposed(), tau);
}

double contrastive_loss(const Matrix& text_to_visual, const Matrix& visual_to_text, double tau) {
  return directional_contrastive_loss(text_to_visual, tau) +
         directional_contrastive_loss(visual_to_text, tau);
}

ad::Var contrastive_row_losses(ad::Var scores, double tau, std::span<const std::size_t> positives) {
  const Matrix& s = scores.value();
  auto pos = resolve_positives(s, tau, positives);
  std::vector<double> losses;
  Matrix probs = scaled_softmax(s, tau, pos, losses);
  Matrix out(s.rows(), 1);
  for (std::size_t i = 0; i < losses.size(); ++i) out(i, 0) = losses[i];
  return scores.tape()->record(
      std::move(out), scores.requires_grad(),
      [scores, tau, pos = std::move(pos), probs = std::move(probs)](ad::Tape& tp, const Matrix& g,
                                                                     const Matrix&) {
        Matrix gs(probs.rows(), probs.cols());
        for (std::size_t i = 0; i < probs.rows(); ++i) {
          for (std::size_t j = 0; j < probs.cols(); ++j) gs(i, j) = g(i, 0) * probs(i, j) / tau;
          gs(i, pos[i]) -= g(i, 0) / tau;
        }
        tp.accumulate(scores, gs);
      });
}

ad::Var directional_contrastive_loss(ad::Var scores, double tau, std::span<const std::size_t> positives) {
  ad::Var rows = contrastive_row_losses(scores, tau, positives);
  return ad::scale(ad::sum(rows), 1.0 / static_cast<double>(rows.rows()));
}

}  // namespace delan::alignment
