#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "delan/numerics/matrix.hpp"
#include "delan/numerics/tape.hpp"

namespace delan::alignment {

/// Per-row InfoNCE terms: -log softmax(S_i / tau)[positives[i]].
/// An empty `positives` means the diagonal. Columns past the positive set
/// (memory-bank negatives) only enlarge the denominators.
///
/// Throws std::invalid_argument for tau <= 0 or a positive index outside
/// the row.
std::vector<double> contrastive_row_losses(const Matrix& scores, double tau,
                                           std::span<const std::size_t> positives = {});

/// One direction: mean of the per-row terms.
double directional_contrastive_loss(const Matrix& scores, double tau,
                                    std::span<const std::size_t> positives = {});

/// Both directions of a pair score matrix: rows give text-to-visual and the
/// transposed matrix gives visual-to-text.
double contrastive_loss(const Matrix& scores, double tau);

/// Both directions when each has its own score matrix (different negatives).
double contrastive_loss(const Matrix& text_to_visual, const Matrix& visual_to_text, double tau);

/// Tape op: rows x 1 column of per-row terms.
ad::Var contrastive_row_losses(ad::Var scores, double tau, std::span<const std::size_t> positives = {});

/// Tape op: mean of the per-row terms.
ad::Var directional_contrastive_loss(ad::Var scores, double tau,
                                     std::span<const std::size_t> positives = {});

}  // namespace delan::alignment
