#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "delan/agent/params.hpp"
#include "delan/alignment/memory_bank.hpp"
#include "delan/metrics/metrics.hpp"
#include "delan/training/config.hpp"
#include "delan/training/optimizer.hpp"
#include "delan/training/rollout.hpp"
#include "delan/worldsim/episode.hpp"

namespace delan::training {

struct EpisodeRef {
  std::size_t world = 0;
  world::Episode episode;
};

/// Worlds plus the episodes generated on them.
struct EnvPool {
  std::vector<world::World> worlds;
  std::vector<EpisodeRef> episodes;
};

/// World i uses seed mix(seed, i); its episode j uses seed mix(world seed, j).
EnvPool make_pool(const world::WorldSpec& spec, std::size_t worlds, std::size_t episodes_per_world,
                  std::uint64_t seed, const world::EpisodeSpec& episode_spec = {});

struct EvalResult {
  std::vector<std::string> ids;
  std::vector<metrics::MetricReport> rows;
  std::vector<RolloutRecord> rollouts;
  metrics::MetricReport mean;
};

/// Greedy (or teacher) rollouts without dropout, scored against each
/// episode's reference path.
EvalResult evaluate_policy(const agent::AgentParams& params, const EnvPool& pool, RolloutMode mode,
                           int max_steps = 15, double success_radius = 0.0);

struct IterationLog {
  std::size_t iter = 0;
  double l_il = 0.0, l_rl = 0.0, l_ih = 0.0, l_lo = 0.0, total = 0.0;
  std::optional<metrics::MetricReport> val;
};

class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kLogHeader = "iter,L_IL,L_RL,L_IH,L_LO,total,val_SR,val_SPL,val_nDTW";
std::string log_row(const IterationLog& log);

class Trainer {
 public:
  Trainer(TrainConfig cfg, const EnvPool& train, const EnvPool& val);

  /// Runs one iteration and returns its log (with validation when due).
  IterationLog step();
  /// Runs until cfg.iterations, writing header (unless resuming) and rows.
  void run(std::ostream* csv, const std::function<void(const IterationLog&)>& on_iter = {});

  std::size_t iteration() const { return iter_; }
  const agent::AgentParams& params() const { return params_; }
  agent::AgentParams& params() { return params_; }
  const alignment::MemoryBank& bank() const { return bank_; }
  const TrainConfig& config() const { return cfg_; }

  struct Objective {
    agent::Gradients gradients;
    IterationLog log;
    std::vector<RolloutRecord> sampled;
  };
  /// One iteration's weighted loss and gradients at the current parameters,
  /// without stepping. With `replay`, the sampled rollouts re-execute those
  /// records' actions with their advantages frozen.
  Objective objective(std::size_t iter, const std::vector<RolloutRecord>* replay = nullptr);

  /// Params, optimizer moments, memory banks, iteration counter and config.
  /// Restoring and continuing reproduces an uninterrupted run exactly.
  nlohmann::json checkpoint() const;
  void restore(const nlohmann::json& j);

 private:
  agent::Gradients compute(std::size_t iter, IterationLog& log, const std::vector<RolloutRecord>* replay = nullptr,
                           std::vector<RolloutRecord>* sampled_out = nullptr);

  TrainConfig cfg_;
  const EnvPool& train_;
  const EnvPool& val_;
  agent::AgentParams params_;
  AdamW adam_;
  alignment::MemoryBank bank_;
  alignment::MemoryBank landmark_bank_;
  std::vector<alignment::InstanceEmbeddings> pending_, pending_landmark_;
  std::size_t iter_ = 0;
};

}  // namespace delan::training
