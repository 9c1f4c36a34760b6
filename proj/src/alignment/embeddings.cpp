#include "delan/alignment/embeddings.hpp"

#include <stdexcept>
#include <string>

#include "delan/alignment/memory_bank.hpp"
#include "delan/numerics/ops.hpp"

namespace delan::alignment {

InstanceEmbeddings InstanceEmbeddings::make(Matrix instruction, Matrix words, Matrix landmarks,
                                            Matrix history, std::vector<Matrix> observations) {
  InstanceEmbeddings e;
  e.word_mask = Mask::all(words.rows());
  e.landmark_mask = Mask::all(landmarks.rows());
  e.step_mask = Mask::all(history.rows());
  if (history.rows() > 0) e.trajectory = Matrix::row_vector(mean_pool(history, e.step_mask));
  for (const auto& o : observations) e.view_masks.push_back(Mask::all(o.rows()));
  e.instruction = std::move(instruction);
  e.words = std::move(words);
  e.landmarks = std::move(landmarks);
  e.history = std::move(history);
  e.observations = std::move(observations);
  return e;
}

void InstanceEmbeddings::validate() const {
  const std::size_t d = dim();
  if (d == 0 || instruction.rows() != 1) throw std::invalid_argument("InstanceEmbeddings: instruction must be 1 x d");
  const auto check = [d](const Matrix& m, const Mask& mask, const char* what) {
    if (m.empty()) return;
    if (m.cols() != d) throw std::invalid_argument(std::string("InstanceEmbeddings: ") + what + " width != d");
    if (mask.length() != m.rows())
      throw std::invalid_argument(std::string("InstanceEmbeddings: ") + what + " mask length mismatch");
  };
  check(words, word_mask, "words");
  check(landmarks, landmark_mask, "landmarks");
  check(history, step_mask, "history");
  if (!trajectory.empty() && (trajectory.rows() != 1 || trajectory.cols() != d))
    throw std::invalid_argument("InstanceEmbeddings: trajectory must be 1 x d");
  if (observations.size() != view_masks.size())
    throw std::invalid_argument("InstanceEmbeddings: one view mask per step required");
  for (std::size_t t = 0; t < observations.size(); ++t) check(observations[t], view_masks[t], "observation");
}

InstanceGradients InstanceGradients::zeros_like(const InstanceEmbeddings& e) {
  InstanceGradients g;
  g.instruction = Matrix(e.instruction.rows(), e.instruction.cols());
  g.words = Matrix(e.words.rows(), e.words.cols());
  g.landmarks = Matrix(e.landmarks.rows(), e.landmarks.cols());
  g.history = Matrix(e.history.rows(), e.history.cols());
  g.trajectory = Matrix(e.trajectory.rows(), e.trajectory.cols());
  for (const auto& o : e.observations) g.observations.emplace_back(o.rows(), o.cols());
  return g;
}

void ContrastConfig::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("ContrastConfig: tau must be positive");
  if (lambda_ih < 0.0 || lambda_lo < 0.0) throw std::invalid_argument("ContrastConfig: negative loss weight");
}

void MemoryBank::push(std::span<const InstanceEmbeddings> items) {
  if (capacity_ == 0) return;
  for (const auto& item : items) {
    entries_.push_back(item);
    if (entries_.size() > capacity_) entries_.pop_front();
  }
}

MemoryBank bank_push(MemoryBank bank, std::span<const InstanceEmbeddings> items) {
  bank.push(items);
  return bank;
}

}  // namespace delan::alignment
