#include "delan/training/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace delan::training {

namespace {

double log_prob(std::span<const double> logits, std::size_t index) {
  const double hi = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - hi);
  return logits[index] - hi - std::log(z);
}

void check_batch(std::size_t records, std::size_t graphs) {
  if (records == 0) throw std::invalid_argument("loss: empty batch");
  if (graphs != records) throw std::invalid_argument("loss: records and graphs differ in length");
}

/// Clamped log-probability on the tape; gradient stops where the clamp binds.
ad::Var clamped_log_prob(ad::Var logits, std::size_t index) {
  const ad::Var lp = ad::element(ad::log_softmax_rows(logits), 0, index);
  if (lp.scalar() < std::log(kLogClamp)) return logits.tape()->constant(Matrix{{std::log(kLogClamp)}});
  return lp;
}

}  // namespace

double il_loss(std::span<const RolloutRecord> records) {
  if (records.empty()) throw std::invalid_argument("il_loss: empty batch");
  double total = 0.0;
  for (const auto& r : records) {
    double ep = 0.0;
    for (const auto& s : r.steps) ep -= std::max(log_prob(s.logits, s.teacher), std::log(kLogClamp));
    total += ep / static_cast<double>(r.steps.size());
  }
  return total / static_cast<double>(records.size());
}

double rl_policy_loss(std::span<const RolloutRecord> records) {
  if (records.empty()) throw std::invalid_argument("rl_loss: empty batch");
  double total = 0.0;
  for (const auto& r : records) {
    double ep = 0.0;
    for (const auto& s : r.steps) ep -= std::max(log_prob(s.logits, s.action), std::log(kLogClamp)) * s.advantage;
    total += ep / static_cast<double>(r.steps.size());
  }
  return total / static_cast<double>(records.size());
}

double rl_loss(std::span<const RolloutRecord> records) {
  double value_term = 0.0;
  for (const auto& r : records) {
    double ep = 0.0;
    for (const auto& s : r.steps) ep += (s.value - s.ret) * (s.value - s.ret);
    value_term += ep / static_cast<double>(r.steps.size());
  }
  return rl_policy_loss(records) + 0.5 * value_term / static_cast<double>(records.size());
}

ad::Var il_loss(std::span<const RolloutRecord> records, std::span<const RolloutGraph> graphs) {
  check_batch(records.size(), graphs.size());
  std::vector<ad::Var> per_episode;
  for (std::size_t b = 0; b < records.size(); ++b) {
    std::vector<ad::Var> terms;
    for (std::size_t t = 0; t < records[b].steps.size(); ++t)
      terms.push_back(clamped_log_prob(graphs[b].logits[t], records[b].steps[t].teacher));
    per_episode.push_back(
        ad::scale(ad::sum(ad::concat_rows(terms)), -1.0 / static_cast<double>(records[b].steps.size())));
  }
  return ad::scale(ad::sum(ad::concat_rows(per_episode)), 1.0 / static_cast<double>(records.size()));
}

ad::Var rl_loss(std::span<const RolloutRecord> records, std::span<const RolloutGraph> graphs) {
  check_batch(records.size(), graphs.size());
  std::vector<ad::Var> per_episode;
  for (std::size_t b = 0; b < records.size(); ++b) {
    const auto& steps = records[b].steps;
    std::vector<ad::Var> terms;
    for (std::size_t t = 0; t < steps.size(); ++t) {
      const ad::Var policy = ad::scale(clamped_log_prob(graphs[b].logits[t], steps[t].action), -steps[t].advantage);
      const ad::Var err = ad::add(graphs[b].values[t], graphs[b].values[t].tape()->constant(Matrix{{-steps[t].ret}}));
      terms.push_back(ad::add(policy, ad::scale(ad::hadamard(err, err), 0.5)));
    }
    per_episode.push_back(ad::scale(ad::sum(ad::concat_rows(terms)), 1.0 / static_cast<double>(steps.size())));
  }
  return ad::scale(ad::sum(ad::concat_rows(per_episode)), 1.0 / static_cast<double>(records.size()));
}

double total_loss(double l_rl, double l_il, double l_ih, double l_lo, const TrainConfig& cfg) {
  return cfg.lambda1 * l_rl + cfg.lambda2 * l_il + cfg.lambda3 * l_ih + cfg.lambda4 * l_lo;
}

}  // namespace delan::training
