#include "delan/training/trainer.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "delan/agent/checkpoint.hpp"
#include "delan/alignment/losses.hpp"
#include "delan/numerics/random.hpp"
#include "delan/training/losses.hpp"

namespace delan::training {

namespace {

enum Stream : std::uint64_t { kBatch = 0, kDropout = 1, kActions = 2 };

std::uint64_t stream(std::uint64_t seed, std::size_t iter, Stream s) { return mix_seed(mix_seed(seed, iter), s); }

std::vector<std::size_t> draw_batch(std::size_t pool, std::size_t batch, std::mt19937_64& rng) {
  if (batch > pool) throw std::invalid_argument("Trainer: batch larger than the training pool");
  std::vector<std::size_t> idx(pool);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < batch; ++i) std::swap(idx[i], idx[i + uniform_below(rng, pool - i)]);
  idx.resize(batch);
  return idx;
}

std::string cell(const std::optional<metrics::MetricReport>& v, double metrics::MetricReport::*field) {
  return v ? fmt::format("{}", (*v).*field) : std::string();
}

nlohmann::json matrix_json(const Matrix& m) {
  return {{"shape", {m.rows(), m.cols()}}, {"values", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from(const nlohmann::json& j) {
  const auto shape = j.at("shape").get<std::vector<std::size_t>>();
  if (shape.size() != 2) throw std::invalid_argument("checkpoint: bad matrix shape");
  return Matrix(shape[0], shape[1], j.at("values").get<std::vector<double>>());
}

nlohmann::json mask_json(const Mask& m) {
  std::vector<int> v(m.length());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = m[i];
  return v;
}

Mask mask_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<int>>();
  return Mask(std::vector<std::uint8_t>(v.begin(), v.end()));
}

nlohmann::json bank_json(const alignment::MemoryBank& bank) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : bank) {
    nlohmann::json obs = nlohmann::json::array(), views = nlohmann::json::array();
    for (const Matrix& o : e.observations) obs.push_back(matrix_json(o));
    for (const Mask& m : e.view_masks) views.push_back(mask_json(m));
    out.push_back({{"instruction", matrix_json(e.instruction)},
                   {"words", matrix_json(e.words)},
                   {"word_mask", mask_json(e.word_mask)},
                   {"landmarks", matrix_json(e.landmarks)},
                   {"landmark_mask", mask_json(e.landmark_mask)},
                   {"history", matrix_json(e.history)},
                   {"step_mask", mask_json(e.step_mask)},
                   {"trajectory", matrix_json(e.trajectory)},
                   {"observations", obs},
                   {"view_masks", views}});
  }
  return out;
}

void load_bank(alignment::MemoryBank& bank, const nlohmann::json& j) {
  std::vector<alignment::InstanceEmbeddings> items;
  for (const auto& e : j) {
    alignment::InstanceEmbeddings x;
    x.instruction = matrix_from(e.at("instruction"));
    x.words = matrix_from(e.at("words"));
    x.word_mask = mask_from(e.at("word_mask"));
    x.landmarks = matrix_from(e.at("landmarks"));
    x.landmark_mask = mask_from(e.at("landmark_mask"));
    x.history = matrix_from(e.at("history"));
    x.step_mask = mask_from(e.at("step_mask"));
    x.trajectory = matrix_from(e.at("trajectory"));
    for (const auto& o : e.at("observations")) x.observations.push_back(matrix_from(o));
    for (const auto& m : e.at("view_masks")) x.view_masks.push_back(mask_from(m));
    x.validate();
    items.push_back(std::move(x));
  }
  bank.clear();
  bank.push(items);
}

}  // namespace

EnvPool make_pool(const world::WorldSpec& spec, std::size_t worlds, std::size_t episodes_per_world, std::uint64_t seed,
                  const world::EpisodeSpec& episode_spec) {
  EnvPool pool;
  for (std::size_t i = 0; i < worlds; ++i) {
    world::WorldSpec s = spec;
    s.seed = mix_seed(seed, i);
    pool.worlds.push_back(world::generate_world(s));
    for (std::size_t j = 0; j < episodes_per_world; ++j) {
      world::Episode ep = world::generate_episode(pool.worlds.back(), mix_seed(s.seed, j), episode_spec);
      ep.id = fmt::format("w{}e{}", i, j);
      pool.episodes.push_back({i, std::move(ep)});
    }
  }
  return pool;
}

EvalResult evaluate_policy(const agent::AgentParams& params, const EnvPool& pool, RolloutMode mode, int max_steps,
                           double success_radius) {
  if (mode != RolloutMode::greedy && mode != RolloutMode::teacher)
    throw std::invalid_argument("evaluate_policy: mode must be greedy or teacher");
  EvalResult out;
  RolloutOptions opt;
  opt.max_steps = max_steps;
  opt.success_radius = success_radius;
  for (const EpisodeRef& ref : pool.episodes) {
    const world::World& w = pool.worlds.at(ref.world);
    ad::Tape tape;
    agent::Graph g(tape, params);
    Rollout r = rollout(g, w, ref.episode, mode, opt);
    out.ids.push_back(ref.episode.id);
    out.rows.push_back(metrics::evaluate({r.record.trajectory, ref.episode.path, &w, success_radius}));
    out.rollouts.push_back(std::move(r.record));
  }
  out.mean = metrics::aggregate(out.rows);
  return out;
}

std::string log_row(const IterationLog& l) {
  using R = metrics::MetricReport;
  return fmt::format("{},{},{},{},{},{},{},{},{}", l.iter, l.l_il, l.l_rl, l.l_ih, l.l_lo, l.total,
                     cell(l.val, &R::sr), cell(l.val, &R::spl), cell(l.val, &R::ndtw));
}

Trainer::Trainer(TrainConfig cfg, const EnvPool& train, const EnvPool& val)
    : cfg_((cfg.validate(), cfg)),
      train_(train),
      val_(val),
      params_(cfg_.model, cfg_.seed),
      adam_(cfg_.lr, cfg_.weight_decay),
      bank_(cfg_.contrast.bank_enabled ? cfg_.contrast.bank_capacity : 0, alignment::BankLevel::instruction_history),
      landmark_bank_(cfg_.contrast.landmark_bank ? cfg_.contrast.bank_capacity : 0,
                     alignment::BankLevel::landmark_observation) {
  if (train_.episodes.empty()) throw std::invalid_argument("Trainer: empty training pool");
}

agent::Gradients Trainer::compute(std::size_t iter, IterationLog& log, const std::vector<RolloutRecord>* replay,
                                  std::vector<RolloutRecord>* sampled_out) {
  std::mt19937_64 batch_rng(stream(cfg_.seed, iter, kBatch));
  std::mt19937_64 dropout_rng(stream(cfg_.seed, iter, kDropout));
  std::mt19937_64 action_rng(stream(cfg_.seed, iter, kActions));
  const auto batch = draw_batch(train_.episodes.size(), cfg_.batch, batch_rng);

  ad::Tape tape;
  agent::Graph g(tape, params_, true, cfg_.model.dropout > 0.0 ? &dropout_rng : nullptr);
  static const auto lexicon = agent::standard_lexicon();

  RolloutOptions opt;
  opt.max_steps = cfg_.max_steps;
  opt.gamma = cfg_.gamma;
  opt.success_radius = cfg_.success_radius;
  opt.rng = &action_rng;

  std::vector<agent::TextEncoding> texts;
  std::vector<RolloutRecord> teacher_rec, sampled_rec;
  std::vector<RolloutGraph> teacher_graph, sampled_graph;
  if (replay && replay->size() != batch.size()) throw std::invalid_argument("Trainer: replay batch size mismatch");
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const EpisodeRef& ref = train_.episodes[batch[b]];
    const world::World& w = train_.worlds.at(ref.world);
    const auto landmarks = agent::extract_landmarks(ref.episode.instruction, lexicon);
    texts.push_back(agent::encode_dual_instruction(g, ref.episode.instruction, landmarks));
    Rollout t = rollout(g, texts.back(), w, ref.episode, RolloutMode::teacher, opt);
    RolloutOptions sopt = opt;
    if (replay) sopt.replay = &(*replay)[b];
    Rollout s = rollout(g, texts.back(), w, ref.episode, replay ? RolloutMode::replay : RolloutMode::sampled, sopt);
    teacher_rec.push_back(std::move(t.record));
    teacher_graph.push_back(std::move(t.graph));
    sampled_rec.push_back(std::move(s.record));
    sampled_graph.push_back(std::move(s.graph));
  }

  const ad::Var l_il = il_loss(teacher_rec, teacher_graph);
  const ad::Var l_rl = rl_loss(sampled_rec, sampled_graph);
  log.iter = iter;
  log.l_il = l_il.scalar();
  log.l_rl = l_rl.scalar();
  tape.accumulate(ad::add(ad::scale(l_rl, cfg_.lambda1), ad::scale(l_il, cfg_.lambda2)), Matrix{{1.0}});

  pending_.clear();
  pending_landmark_.clear();
  if (cfg_.alignment) {
    const auto& graphs = cfg_.align_on_sampled ? sampled_graph : teacher_graph;
    std::vector<AlignmentHandles> handles;
    std::vector<alignment::InstanceEmbeddings> emb;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      handles.push_back(alignment_handles(g, texts[b], graphs[b]));
      emb.push_back(detach(handles.back()));
    }
    const alignment::ContrastConfig contrast = cfg_.contrast_config();
    if (contrast.level == alignment::LevelMode::single) {
      const auto r = alignment::single_level_loss(emb, &bank_, contrast);
      log.l_ih = r.value;
      if (cfg_.lambda3 > 0.0)
        for (std::size_t b = 0; b < handles.size(); ++b) inject(tape, handles[b], r.gradients[b], cfg_.lambda3);
    } else {
      if (contrast.flags.history_components() > 0) {
        const auto r = alignment::level_loss_ih(emb, &bank_, contrast);
        log.l_ih = r.value;
        if (cfg_.lambda3 > 0.0)
          for (std::size_t b = 0; b < handles.size(); ++b) inject(tape, handles[b], r.gradients[b], cfg_.lambda3);
      }
      if (contrast.flags.landmark_observation) {
        std::vector<std::size_t> with;
        std::vector<alignment::InstanceEmbeddings> sub;
        for (std::size_t b = 0; b < emb.size(); ++b)
          if (handles[b].has_landmarks) {
            with.push_back(b);
            sub.push_back(emb[b]);
          }
        if (!sub.empty()) {
          const auto r = alignment::level_loss_lo(sub, &landmark_bank_, contrast);
          log.l_lo = r.value;
          if (cfg_.lambda4 > 0.0)
            for (std::size_t i = 0; i < with.size(); ++i) inject(tape, handles[with[i]], r.gradients[i], cfg_.lambda4);
          pending_landmark_ = std::move(sub);
        }
      }
    }
    pending_ = std::move(emb);
  }
  log.total = total_loss(log.l_rl, log.l_il, log.l_ih, log.l_lo, cfg_);
  if (!std::isfinite(log.total))
    throw TrainingAborted(fmt::format("non-finite loss at iteration {}: L_IL={} L_RL={} L_IH={} L_LO={}", iter,
                                      log.l_il, log.l_rl, log.l_ih, log.l_lo));
  tape.propagate();
  if (sampled_out) *sampled_out = std::move(sampled_rec);
  return g.gradients();
}

Trainer::Objective Trainer::objective(std::size_t iter, const std::vector<RolloutRecord>* replay) {
  Objective out;
  out.gradients = compute(iter, out.log, replay, &out.sampled);
  pending_.clear();
  pending_landmark_.clear();
  return out;
}

IterationLog Trainer::step() {
  IterationLog log;
  const agent::Gradients grads = compute(iter_ + 1, log);
  for (const auto& [name, g] : grads)
    if (!g.all_finite()) throw TrainingAborted(fmt::format("non-finite gradient for '{}' at iteration {}", name, iter_ + 1));
  adam_.step(params_, grads);
  bank_.push(pending_);
  landmark_bank_.push(pending_landmark_);
  pending_.clear();
  pending_landmark_.clear();
  ++iter_;
  const bool due = cfg_.eval_interval > 0 ? iter_ % cfg_.eval_interval == 0 : iter_ == cfg_.iterations;
  if (due && !val_.episodes.empty())
    log.val = evaluate_policy(params_, val_, RolloutMode::greedy, cfg_.max_steps, cfg_.success_radius).mean;
  return log;
}

void Trainer::run(std::ostream* csv, const std::function<void(const IterationLog&)>& on_iter) {
  if (csv && iter_ == 0) *csv << kLogHeader << '\n';
  while (iter_ < cfg_.iterations) {
    const IterationLog log = step();
    if (csv) *csv << log_row(log) << '\n' << std::flush;
    if (on_iter) on_iter(log);
  }
}

nlohmann::json Trainer::checkpoint() const {
  return {{"version", 1},
          {"iteration", iter_},
          {"config", to_json(cfg_)},
          {"params", agent::to_json(params_)},
          {"adam", adam_.state()},
          {"bank", bank_json(bank_)},
          {"landmark_bank", bank_json(landmark_bank_)}};
}

void Trainer::restore(const nlohmann::json& j) {
  if (j.at("version").get<int>() != 1) throw std::invalid_argument("checkpoint: unsupported version");
  agent::AgentParams loaded = agent::params_from_json(j.at("params"));
  if (!(loaded.config() == cfg_.model)) throw std::invalid_argument("checkpoint: model config differs from run config");
  params_ = std::move(loaded);
  adam_ = AdamW(cfg_.lr, cfg_.weight_decay);
  adam_.load_state(j.at("adam"), params_);
  iter_ = j.at("iteration").get<std::size_t>();
  load_bank(bank_, j.value("bank", nlohmann::json::array()));
  load_bank(landmark_bank_, j.value("landmark_bank", nlohmann::json::array()));
}

}  // namespace delan::training
