#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "delan/agent/model.hpp"
#include "delan/alignment/embeddings.hpp"
#include "delan/worldsim/episode.hpp"
#include "delan/worldsim/world.hpp"

namespace delan::training {

enum class RolloutMode { teacher, sampled, greedy, replay };

struct StepRecord {
  std::vector<double> logits;
  std::size_t action = 0;
  std::size_t teacher = 0;
  bool sampled = false;
  double reward = 0.0;
  double value = 0.0;
  double ret = 0.0;
  double advantage = 0.0;
};

struct RolloutRecord {
  std::string episode_id;
  std::vector<StepRecord> steps;
  std::vector<int> trajectory;
  bool success = false;
};

/// Tape handles matching a RolloutRecord step for step.
struct RolloutGraph {
  std::vector<ad::Var> logits;
  std::vector<ad::Var> values;
  std::vector<agent::HistoryStep> history;
};

struct RolloutOptions {
  int max_steps = 15;
  double gamma = 0.9;
  double success_radius = 0.0;
  /// Action sampling (sampled mode).
  std::mt19937_64* rng = nullptr;
  /// Actions and frozen advantages to reproduce (replay mode).
  const RolloutRecord* replay = nullptr;
};

struct Rollout {
  RolloutRecord record;
  RolloutGraph graph;
};

/// Step reward: decrease in geodesic distance to the goal; the final step
/// adds +2 on success and -2 otherwise.
inline constexpr double kTerminalReward = 2.0;

/// Runs one episode to termination on g's tape. `text` must come from the
/// same graph. Teacher mode executes teacher actions, sampled mode draws
/// from softmax(logits), greedy takes the argmax (first on ties), replay
/// executes the recorded actions and keeps their advantages.
Rollout rollout(agent::Graph& g, const agent::TextEncoding& text, const world::World& world,
                const world::Episode& episode, RolloutMode mode, const RolloutOptions& opt = {});

/// Encodes the episode's instruction (landmarks by lexicon extraction) and
/// runs the rollout.
Rollout rollout(agent::Graph& g, const world::World& world, const world::Episode& episode, RolloutMode mode,
                const RolloutOptions& opt = {});

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);
/// Fills ret and advantage = ret - value from rewards and value estimates.
void assign_returns(RolloutRecord& record, double gamma);

/// Embedding handles of one rollout for the alignment losses: x_cls, X, L,
/// the full-trajectory history H (T x d), its mean, and per-step views.
struct AlignmentHandles {
  ad::Var instruction, words, landmarks, history, trajectory;
  std::vector<ad::Var> observations;
  bool has_words = false;
  bool has_landmarks = false;
};

AlignmentHandles alignment_handles(agent::Graph& g, const agent::TextEncoding& text, const RolloutGraph& graph);
alignment::InstanceEmbeddings detach(const AlignmentHandles& h);
/// Adds weight * grads into the handles' tape gradients.
void inject(ad::Tape& tape, const AlignmentHandles& h, const alignment::InstanceGradients& grads, double weight);

}  // namespace delan::training
