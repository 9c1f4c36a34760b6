#pragma once

#include <span>

#include "delan/numerics/tape.hpp"
#include "delan/training/config.hpp"
#include "delan/training/rollout.hpp"

namespace delan::training {

inline constexpr double kLogClamp = 1e-12;

/// Mean over the batch of -(1/T) sum_t log max(p_t[teacher], 1e-12).
double il_loss(std::span<const RolloutRecord> records);
/// Mean over the batch of (1/T) sum_t [-log p_t[action] * A_t + 0.5 (V_t - G_t)^2].
double rl_loss(std::span<const RolloutRecord> records);
/// Policy part of rl_loss only.
double rl_policy_loss(std::span<const RolloutRecord> records);

ad::Var il_loss(std::span<const RolloutRecord> records, std::span<const RolloutGraph> graphs);
/// Advantages and returns enter as constants.
ad::Var rl_loss(std::span<const RolloutRecord> records, std::span<const RolloutGraph> graphs);

double total_loss(double l_rl, double l_il, double l_ih, double l_lo, const TrainConfig& cfg);

}  // namespace delan::training
