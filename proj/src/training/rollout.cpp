#include "delan/training/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "delan/numerics/random.hpp"
#include "delan/worldsim/navigation.hpp"

namespace delan::training {

namespace {

std::size_t sample_index(std::span<const double> logits, std::mt19937_64& rng) {
  const double hi = *std::max_element(logits.begin(), logits.end());
  std::vector<double> w(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) z += w[i] = std::exp(logits[i] - hi);
  double u = unit_uniform(rng) * z;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (u < w[i]) return i;
    u -= w[i];
  }
  return w.size() - 1;
}

std::size_t argmax(std::span<const double> logits) {
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

Matrix scaled(const Matrix& m, double w) {
  Matrix out = m;
  for (double& v : out.data()) v *= w;
  return out;
}

}  // namespace

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) out[i] = acc = rewards[i] + gamma * acc;
  return out;
}

void assign_returns(RolloutRecord& record, double gamma) {
  std::vector<double> rewards;
  for (const auto& s : record.steps) rewards.push_back(s.reward);
  const auto returns = discounted_returns(rewards, gamma);
  for (std::size_t i = 0; i < record.steps.size(); ++i) {
    record.steps[i].ret = returns[i];
    record.steps[i].advantage = returns[i] - record.steps[i].value;
  }
}

Rollout rollout(agent::Graph& g, const agent::TextEncoding& text, const world::World& w, const world::Episode& ep,
                RolloutMode mode, const RolloutOptions& opt) {
  if (mode == RolloutMode::sampled && opt.rng == nullptr) throw std::invalid_argument("rollout: sampled mode needs an rng");
  if (mode == RolloutMode::replay && opt.replay == nullptr) throw std::invalid_argument("rollout: replay mode needs a record");

  world::NavState s = world::initial_state(ep, opt.max_steps);
  Rollout out;
  out.record.episode_id = ep.id;
  while (!s.done) {
    const world::Observation obs = world::observe(w, s);
    const agent::VisualEncoding vis = agent::encode_observation(g, obs);
    const ad::Var hist = agent::encode_history(g, out.graph.history);
    const agent::Scores scores = agent::fuse_and_score(g, text, hist, vis);

    StepRecord r;
    const auto row = scores.logits.value().row(0);
    r.logits.assign(row.begin(), row.end());
    r.value = scores.value.scalar();
    r.teacher = world::teacher_action(w, s, obs, ep.goal);
    switch (mode) {
      case RolloutMode::teacher: r.action = r.teacher; break;
      case RolloutMode::sampled:
        r.action = sample_index(r.logits, *opt.rng);
        r.sampled = true;
        break;
      case RolloutMode::greedy: r.action = argmax(r.logits); break;
      case RolloutMode::replay: {
        const std::size_t i = out.record.steps.size();
        if (i >= opt.replay->steps.size()) throw std::runtime_error("rollout: replay record too short");
        r.action = opt.replay->steps[i].action;
        r.sampled = opt.replay->steps[i].sampled;
        break;
      }
    }
    const double before = w.geodesic(s.node, ep.goal);
    s = world::step(w, std::move(s), obs, r.action);
    r.reward = before - w.geodesic(s.node, ep.goal);
    out.graph.history.push_back({vis.views, s.history.back().turn});
    out.graph.logits.push_back(scores.logits);
    out.graph.values.push_back(scores.value);
    out.record.steps.push_back(std::move(r));
  }
  out.record.success = world::succeeded(w, s, ep.goal, opt.success_radius);
  out.record.steps.back().reward += out.record.success ? kTerminalReward : -kTerminalReward;
  out.record.trajectory = s.trajectory;
  assign_returns(out.record, opt.gamma);
  if (mode == RolloutMode::replay) {
    if (opt.replay->steps.size() != out.record.steps.size()) throw std::runtime_error("rollout: replay length mismatch");
    for (std::size_t i = 0; i < out.record.steps.size(); ++i)
      out.record.steps[i].advantage = opt.replay->steps[i].advantage;
  }
  return out;
}

Rollout rollout(agent::Graph& g, const world::World& w, const world::Episode& ep, RolloutMode mode,
                const RolloutOptions& opt) {
  static const auto lexicon = agent::standard_lexicon();
  const auto landmarks = agent::extract_landmarks(ep.instruction, lexicon);
  const agent::TextEncoding text = agent::encode_dual_instruction(g, ep.instruction, landmarks);
  return rollout(g, text, w, ep, mode, opt);
}

AlignmentHandles alignment_handles(agent::Graph& g, const agent::TextEncoding& text, const RolloutGraph& graph) {
  if (graph.history.empty()) throw std::invalid_argument("alignment_handles: empty rollout");
  AlignmentHandles h;
  h.instruction = text.cls;
  h.has_words = text.m > 0;
  h.has_landmarks = text.n > 0;
  if (h.has_words) h.words = text.words;
  if (h.has_landmarks) h.landmarks = text.landmarks;
  h.history = agent::encode_history(g, graph.history);
  h.trajectory = ad::mean_rows(h.history);
  for (const auto& step : graph.history) h.observations.push_back(step.views);
  return h;
}

alignment::InstanceEmbeddings detach(const AlignmentHandles& h) {
  std::vector<Matrix> obs;
  for (const auto& o : h.observations) obs.push_back(o.value());
  auto e = alignment::InstanceEmbeddings::make(h.instruction.value(), h.has_words ? h.words.value() : Matrix(),
                                               h.has_landmarks ? h.landmarks.value() : Matrix(), h.history.value(),
                                               std::move(obs));
  e.trajectory = h.trajectory.value();
  return e;
}

void inject(ad::Tape& tape, const AlignmentHandles& h, const alignment::InstanceGradients& g, double weight) {
  const auto add = [&](ad::Var v, const Matrix& grad) {
    if (v.valid() && !grad.empty()) tape.accumulate(v, scaled(grad, weight));
  };
  add(h.instruction, g.instruction);
  if (h.has_words) add(h.words, g.words);
  if (h.has_landmarks) add(h.landmarks, g.landmarks);
  add(h.history, g.history);
  add(h.trajectory, g.trajectory);
  for (std::size_t t = 0; t < h.observations.size() && t < g.observations.size(); ++t)
    add(h.observations[t], g.observations[t]);
}

}  // namespace delan::training
