#pragma once

#include <cstddef>
#include <cstdint>

#include "json.hpp"

#include "delan/agent/config.hpp"
#include "delan/alignment/embeddings.hpp"

namespace delan::training {

struct TrainConfig {
  double lambda1 = 1.0;   ///< RL
  double lambda2 = 0.2;   ///< IL
  double lambda3 = 0.01;  ///< instruction-history (or single-level) alignment
  double lambda4 = 0.1;   ///< landmark-observation alignment
  std::size_t batch = 8;
  double lr = 1e-3;
  double weight_decay = 0.01;
  std::size_t iterations = 100;
  /// Greedy validation every this many iterations; 0 = only after the last.
  std::size_t eval_interval = 0;
  std::uint64_t seed = 0;
  double gamma = 0.9;
  int max_steps = 15;
  double success_radius = 0.0;
  /// Compute alignment losses at all. When false the build behaves as if
  /// the alignment module were absent.
  bool alignment = true;
  /// Align the sampled rollout's embeddings instead of the teacher-forced one.
  bool align_on_sampled = false;
  alignment::ContrastConfig contrast;
  agent::ModelConfig model = agent::default_model_config();

  void validate() const;
  /// contrast with lambda_ih/lambda_lo taken from lambda3/lambda4.
  alignment::ContrastConfig contrast_config() const;
};

nlohmann::json to_json(const TrainConfig& c);
/// Missing keys keep `base` values; unknown keys throw.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

nlohmann::json to_json(const alignment::ContrastConfig& c);
alignment::ContrastConfig contrast_config_from_json(const nlohmann::json& j, alignment::ContrastConfig base = {});

}  // namespace delan::training
