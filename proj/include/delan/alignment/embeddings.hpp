#pragma once

#include <cstddef>
#include <vector>

#include "delan/numerics/matrix.hpp"

namespace delan::alignment {

/// Unimodal embeddings of one episode, as consumed by the alignment losses.
/// Every matrix has the same column count d. Token matrices may be padded;
/// the masks say which rows are real.
struct InstanceEmbeddings {
  Matrix instruction;              // 1 x d, the [CLS] output
  Matrix words;                    // m x d
  Mask word_mask;
  Matrix landmarks;                // n x d
  Mask landmark_mask;
  Matrix history;                  // T x d, one row per visited viewpoint
  Mask step_mask;
  Matrix trajectory;               // 1 x d, mean of the valid history rows
  std::vector<Matrix> observations;  // per step, k x d panorama views
  std::vector<Mask> view_masks;

  /// Builds an instance with all-valid masks and trajectory = mean(history).
  /// Empty matrices are allowed for parts a loss does not read.
  static InstanceEmbeddings make(Matrix instruction, Matrix words, Matrix landmarks, Matrix history,
                                 std::vector<Matrix> observations);

  std::size_t dim() const { return instruction.cols(); }
  std::size_t steps() const { return observations.size(); }

  /// Shape and mask consistency; throws std::invalid_argument.
  void validate() const;
};

/// Gradients w.r.t. each field of an InstanceEmbeddings (same shapes).
struct InstanceGradients {
  Matrix instruction;
  Matrix words;
  Matrix landmarks;
  Matrix history;
  Matrix trajectory;
  std::vector<Matrix> observations;

  static InstanceGradients zeros_like(const InstanceEmbeddings& e);
};

/// Raw score tensors between a text-side and a visual-side instance.
struct SimilarityBundle {
  double instruction_trajectory = 0.0;  // 1 x 1
  Matrix word_trajectory;               // 1 x m
  Matrix instruction_viewpoint;         // T x 1
  Matrix word_viewpoint;                // T x m
  std::vector<Matrix> landmark_observation;  // per step, k x n
};

struct ComponentFlags {
  bool instruction_trajectory = true;
  bool word_trajectory = true;
  bool instruction_viewpoint = true;
  bool word_viewpoint = true;
  bool landmark_observation = true;

  std::size_t history_components() const {
    return static_cast<std::size_t>(instruction_trajectory) + word_trajectory +
           instruction_viewpoint + word_viewpoint;
  }
};

enum class LevelMode { dual, single };

struct ContrastConfig {
  double tau = 1.0;
  double lambda_ih = 0.01;
  double lambda_lo = 0.1;
  ComponentFlags flags;
  LevelMode level = LevelMode::dual;
  bool bank_enabled = true;
  std::size_t bank_capacity = 480;
  /// Per-step banked observations as extra landmark-observation negatives.
  bool landmark_bank = false;
  /// Unit-normalise rows before every dot product.
  bool cosine = false;

  void validate() const;
};

}  // namespace delan::alignment
