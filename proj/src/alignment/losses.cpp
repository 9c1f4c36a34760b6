#include "delan/alignment/losses.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>

#include "delan/alignment/contrastive.hpp"
#include "delan/alignment/reduce.hpp"
#include "delan/numerics/ops.hpp"
#include "delan/numerics/tape.hpp"

namespace delan::alignment {

namespace {

using ad::Tape;
using ad::Var;

// Tape leaves for one instance plus the (optionally normalised) views the
// similarity code reads.
struct Bound {
  const InstanceEmbeddings* src = nullptr;
  Var instruction_leaf, words_leaf, landmarks_leaf, history_leaf, trajectory_leaf;
  std::vector<Var> observation_leaves;

  Var instruction, words, landmarks, history, trajectory;
  std::vector<Var> observations;
};

Var put(Tape& t, const Matrix& m, bool grad) { return grad ? t.leaf(m) : t.constant(m); }

Var view(Var leaf, bool cosine) {
  if (!cosine || leaf.value().empty()) return leaf;
  return ad::normalize_rows(leaf);
}

Bound bind(Tape& t, const InstanceEmbeddings& e, bool grad, bool cosine) {
  e.validate();
  Bound b;
  b.src = &e;
  b.instruction_leaf = put(t, e.instruction, grad);
  b.words_leaf = put(t, e.words, grad);
  b.landmarks_leaf = put(t, e.landmarks, grad);
  b.history_leaf = put(t, e.history, grad);
  b.trajectory_leaf = put(t, e.trajectory, grad);
  b.instruction = view(b.instruction_leaf, cosine);
  b.words = view(b.words_leaf, cosine);
  b.landmarks = view(b.landmarks_leaf, cosine);
  b.history = view(b.history_leaf, cosine);
  b.trajectory = view(b.trajectory_leaf, cosine);
  for (const auto& o : e.observations) {
    b.observation_leaves.push_back(put(t, o, grad));
    b.observations.push_back(view(b.observation_leaves.back(), cosine));
  }
  return b;
}

InstanceGradients harvest(const Tape& t, const Bound& b) {
  InstanceGradients g;
  g.instruction = t.grad_or_zero(b.instruction_leaf);
  g.words = t.grad_or_zero(b.words_leaf);
  g.landmarks = t.grad_or_zero(b.landmarks_leaf);
  g.history = t.grad_or_zero(b.history_leaf);
  g.trajectory = t.grad_or_zero(b.trajectory_leaf);
  for (Var o : b.observation_leaves) g.observations.push_back(t.grad_or_zero(o));
  return g;
}

struct TextSide {
  Var instruction;
  Var words;
  Mask word_mask;
};

struct VisualSide {
  Var tokens;
  Mask token_mask;
  Var pooled;
};

TextSide text_side(const Bound& b) {
  if (b.src->words.empty() || b.src->word_mask.count() == 0)
    throw std::invalid_argument("instruction-history alignment: empty word set");
  return {b.instruction, b.words, b.src->word_mask};
}

VisualSide history_side(const Bound& b) {
  if (b.src->history.empty() || b.src->step_mask.count() == 0)
    throw std::invalid_argument("instruction-history alignment: empty history");
  if (b.src->trajectory.empty())
    throw std::invalid_argument("instruction-history alignment: missing trajectory embedding");
  return {b.history, b.src->step_mask, b.trajectory};
}

// History rows followed by every per-step observation row.
VisualSide concatenated_side(const Bound& b, bool cosine) {
  std::vector<Var> parts;
  std::vector<std::uint8_t> mask;
  const auto append = [&](Var v, const Mask& m) {
    if (v.value().empty()) return;
    parts.push_back(v);
    for (std::size_t i = 0; i < m.length(); ++i) mask.push_back(m[i] ? 1 : 0);
  };
  append(b.history, b.src->step_mask);
  for (std::size_t t = 0; t < b.observations.size(); ++t) append(b.observations[t], b.src->view_masks[t]);
  Mask token_mask(std::move(mask));
  if (parts.empty() || token_mask.count() == 0)
    throw std::invalid_argument("single-level alignment: empty visual support");
  Var tokens = ad::concat_rows(parts);
  Var pooled = ad::mean_rows(tokens, token_mask);
  if (cosine) pooled = ad::normalize_rows(pooled);
  return {tokens, token_mask, pooled};
}

const Mask kOne = Mask{1};

Var granularity_sim(const TextSide& x, const VisualSide& v, const ComponentFlags& flags) {
  const std::size_t enabled = flags.history_components();
  if (enabled == 0) throw std::invalid_argument("instruction-history alignment: no enabled component");
  std::optional<Var> total;
  const auto add = [&](Var part) { total = total ? ad::add(*total, part) : part; };
  if (flags.instruction_trajectory) add(ad::matmul_bt(v.pooled, x.instruction));
  if (flags.word_trajectory)
    add(reduce_similarity(ad::matmul_bt(v.pooled, x.words), kOne, x.word_mask));
  if (flags.instruction_viewpoint)
    add(reduce_similarity(ad::matmul_bt(v.tokens, x.instruction), v.token_mask, kOne));
  if (flags.word_viewpoint)
    add(reduce_similarity(ad::matmul_bt(v.tokens, x.words), v.token_mask, x.word_mask));
  return enabled == 1 ? *total : ad::scale(*total, 1.0 / static_cast<double>(enabled));
}

Var landmark_sim(const Bound& text, const Bound& visual, std::size_t step) {
  if (text.src->landmarks.empty() || text.src->landmark_mask.count() == 0)
    throw std::invalid_argument("empty landmark set");
  if (step >= visual.observations.size())
    throw std::out_of_range("landmark-observation alignment: step beyond trajectory");
  return reduce_similarity(ad::matmul_bt(visual.observations[step], text.landmarks),
                           visual.src->view_masks[step], text.src->landmark_mask);
}

LossResult finish(Tape& t, Var loss, const std::vector<Bound>& batch) {
  LossResult r;
  r.value = loss.scalar();
  t.backward(loss);
  for (const auto& b : batch) r.gradients.push_back(harvest(t, b));
  return r;
}

LossResult zero_result(std::span<const InstanceEmbeddings> batch) {
  LossResult r;
  for (const auto& e : batch) r.gradients.push_back(InstanceGradients::zeros_like(e));
  return r;
}

using VisualBuilder = VisualSide (*)(const Bound&, bool);

VisualSide history_builder(const Bound& b, bool) { return history_side(b); }

// Shared by the dual instruction-history level and the single-level ablation.
LossResult pairwise_text_visual_loss(std::span<const InstanceEmbeddings> batch, const MemoryBank* bank,
                                     const ContrastConfig& cfg, VisualBuilder visual_of) {
  cfg.validate();
  if (cfg.flags.history_components() == 0)
    throw std::invalid_argument("instruction-history alignment: no enabled component");
  if (batch.empty()) throw std::invalid_argument("alignment loss: empty batch");

  Tape t;
  std::vector<Bound> bound;
  bound.reserve(batch.size());
  for (const auto& e : batch) bound.push_back(bind(t, e, true, cfg.cosine));
  std::vector<TextSide> texts;
  std::vector<VisualSide> visuals;
  for (const auto& b : bound) {
    texts.push_back(text_side(b));
    visuals.push_back(visual_of(b, cfg.cosine));
  }

  std::vector<Bound> banked;
  std::vector<TextSide> bank_texts;
  std::vector<VisualSide> bank_visuals;
  if (cfg.bank_enabled && bank != nullptr) {
    banked.reserve(bank->size());
    for (const auto& e : *bank) {
      banked.push_back(bind(t, e, false, cfg.cosine));
      bank_texts.push_back(text_side(banked.back()));
      bank_visuals.push_back(visual_of(banked.back(), cfg.cosine));
    }
  }

  const std::size_t n = batch.size();
  const std::size_t cols = n + banked.size();
  std::vector<Var> in_batch(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) in_batch[i * n + j] = granularity_sim(texts[i], visuals[j], cfg.flags);

  std::vector<Var> text_to_visual, visual_to_text;
  text_to_visual.reserve(n * cols);
  visual_to_text.reserve(n * cols);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) text_to_visual.push_back(in_batch[i * n + j]);
    for (const auto& bv : bank_visuals) text_to_visual.push_back(granularity_sim(texts[i], bv, cfg.flags));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) visual_to_text.push_back(in_batch[j * n + i]);
    for (const auto& bt : bank_texts) visual_to_text.push_back(granularity_sim(bt, visuals[i], cfg.flags));
  }
  Var s_tv = ad::stack_scalars(text_to_visual, n, cols);
  Var s_vt = ad::stack_scalars(visual_to_text, n, cols);
  Var loss = ad::add(directional_contrastive_loss(s_tv, cfg.tau), directional_contrastive_loss(s_vt, cfg.tau));
  return finish(t, loss, bound);
}

}  // namespace

SimilarityBundle similarity_bundle(const InstanceEmbeddings& text, const InstanceEmbeddings& visual, bool cosine) {
  Tape t;
  const Bound x = bind(t, text, false, cosine);
  const Bound v = bind(t, visual, false, cosine);
  SimilarityBundle s;
  if (!text.words.empty() && !visual.history.empty()) {
    s.instruction_trajectory = ad::matmul_bt(v.trajectory, x.instruction).scalar();
    s.word_trajectory = ad::matmul_bt(v.trajectory, x.words).value();
    s.instruction_viewpoint = ad::matmul_bt(v.history, x.instruction).value();
    s.word_viewpoint = ad::matmul_bt(v.history, x.words).value();
  }
  if (!text.landmarks.empty())
    for (Var o : v.observations) s.landmark_observation.push_back(ad::matmul_bt(o, x.landmarks).value());
  return s;
}

double instruction_history_sim(const InstanceEmbeddings& text, const InstanceEmbeddings& visual,
                               const ComponentFlags& flags, bool cosine) {
  Tape t;
  const Bound x = bind(t, text, false, cosine);
  const Bound v = bind(t, visual, false, cosine);
  return granularity_sim(text_side(x), history_side(v), flags).scalar();
}

double landmark_observation_sim(const InstanceEmbeddings& text, const InstanceEmbeddings& visual,
                                std::size_t step, bool cosine) {
  Tape t;
  const Bound x = bind(t, text, false, cosine);
  const Bound v = bind(t, visual, false, cosine);
  return landmark_sim(x, v, step).scalar();
}

LossResult level_loss_ih(std::span<const InstanceEmbeddings> batch, const MemoryBank* bank,
                         const ContrastConfig& cfg) {
  return pairwise_text_visual_loss(batch, bank, cfg, &history_builder);
}

LossResult single_level_loss(std::span<const InstanceEmbeddings> batch, const MemoryBank* bank,
                             const ContrastConfig& cfg) {
  if (cfg.level != LevelMode::single)
    throw std::invalid_argument("single_level_loss: config level mode must be single");
  return pairwise_text_visual_loss(batch, bank, cfg, &concatenated_side);
}

LossResult level_loss_lo(std::span<const InstanceEmbeddings> batch, const MemoryBank* bank,
                         const ContrastConfig& cfg) {
  cfg.validate();
  if (batch.empty()) throw std::invalid_argument("alignment loss: empty batch");
  std::size_t max_steps = 0;
  for (const auto& e : batch) {
    if (e.steps() == 0) throw std::invalid_argument("landmark-observation alignment: instance without steps");
    if (e.landmarks.empty() || e.landmark_mask.count() == 0) throw std::invalid_argument("empty landmark set");
    max_steps = std::max(max_steps, e.steps());
  }
  const bool use_bank = cfg.landmark_bank && bank != nullptr && !bank->empty();
  if (batch.size() == 1 && !use_bank) return zero_result(batch);

  Tape t;
  std::vector<Bound> bound;
  for (const auto& e : batch) bound.push_back(bind(t, e, true, cfg.cosine));
  std::vector<Bound> banked;
  if (use_bank)
    for (const auto& e : *bank) banked.push_back(bind(t, e, false, cfg.cosine));

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  std::optional<Var> total;
  for (std::size_t step = 0; step < max_steps; ++step) {
    std::vector<std::size_t> group;
    for (std::size_t i = 0; i < bound.size(); ++i)
      if (batch[i].steps() > step) group.push_back(i);
    std::vector<const Bound*> bank_obs, bank_text;
    for (const auto& b : banked) {
      if (b.src->steps() > step) bank_obs.push_back(&b);
      if (!b.src->landmarks.empty() && b.src->landmark_mask.count() > 0) bank_text.push_back(&b);
    }
    if (group.size() < 2 && bank_obs.empty() && bank_text.empty()) continue;

    const std::size_t g = group.size();
    std::vector<Var> land_to_obs, obs_to_land;
    for (std::size_t a : group) {
      for (std::size_t b : group) land_to_obs.push_back(landmark_sim(bound[a], bound[b], step));
      for (const Bound* bb : bank_obs) land_to_obs.push_back(landmark_sim(bound[a], *bb, step));
    }
    for (std::size_t a : group) {
      for (std::size_t b : group) obs_to_land.push_back(landmark_sim(bound[b], bound[a], step));
      for (const Bound* bb : bank_text) obs_to_land.push_back(landmark_sim(*bb, bound[a], step));
    }
    Var rows = ad::add(
        contrastive_row_losses(ad::stack_scalars(land_to_obs, g, g + bank_obs.size()), cfg.tau),
        contrastive_row_losses(ad::stack_scalars(obs_to_land, g, g + bank_text.size()), cfg.tau));
    Matrix weights(g, 1);
    for (std::size_t a = 0; a < g; ++a)
      weights(a, 0) = inv_batch / static_cast<double>(batch[group[a]].steps());
    Var step_loss = ad::sum(ad::hadamard(rows, t.constant(std::move(weights))));
    total = total ? ad::add(*total, step_loss) : step_loss;
  }
  if (!total) return zero_result(batch);
  return finish(t, *total, bound);
}

}  // namespace delan::alignment
