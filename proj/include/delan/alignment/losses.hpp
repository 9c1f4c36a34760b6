#pragma once

#include <span>
#include <vector>

#include "delan/alignment/embeddings.hpp"
#include "delan/alignment/memory_bank.hpp"

namespace delan::alignment {

/// Loss value plus the gradient w.r.t. every batch instance. Bank entries
/// are constants and have no gradient slot.
struct LossResult {
  double value = 0.0;
  std::vector<InstanceGradients> gradients;
};

/// All raw score tensors between `text` (instruction/words/landmarks side)
/// and `visual` (trajectory/history/observation side).
SimilarityBundle similarity_bundle(const InstanceEmbeddings& text, const InstanceEmbeddings& visual,
                                   bool cosine = false);

/// Mean of the enabled instruction-history granularities:
/// trajectory.instruction, R(words.trajectory), R(history.instruction),
/// R(history.words^T). Throws when no granularity is enabled.
double instruction_history_sim(const InstanceEmbeddings& text, const InstanceEmbeddings& visual,
                               const ComponentFlags& flags, bool cosine = false);

/// R(observations[step] . landmarks^T). Throws "empty landmark set" when
/// `text` has no valid landmark.
double landmark_observation_sim(const InstanceEmbeddings& text, const InstanceEmbeddings& visual,
                                std::size_t step, bool cosine = false);

/// Bidirectional contrastive loss over instruction/history pairs of a batch.
/// Bank entries (when cfg.bank_enabled and bank != nullptr) add history-side
/// negatives to the text-to-visual rows and instruction-side negatives to
/// the visual-to-text rows.
LossResult level_loss_ih(std::span<const InstanceEmbeddings> batch, const MemoryBank* bank,
                         const ContrastConfig& cfg);

/// Landmark-observation loss. At step t the episodes with more than t steps
/// form a group scored with a bidirectional contrastive loss; each episode's
/// per-step terms are averaged over its own step count and the result is
/// averaged over the batch. Singleton groups contribute zero unless
/// cfg.landmark_bank supplies banked negatives.
LossResult level_loss_lo(std::span<const InstanceEmbeddings> batch, const MemoryBank* bank,
                         const ContrastConfig& cfg);

/// Single-level ablation: history rows and every per-step observation row
/// are stacked into one visual token matrix and aligned with the
/// instruction using the instruction-history granularities.
LossResult single_level_loss(std::span<const InstanceEmbeddings> batch, const MemoryBank* bank,
                             const ContrastConfig& cfg);

}  // namespace delan::alignment
