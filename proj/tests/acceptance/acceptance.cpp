// Acceptance suite. Prints one PASS/FAIL line per criterion; exits nonzero
// if any selected criterion fails. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "alignment_fixtures.hpp"
#include "delan/alignment/contrastive.hpp"
#include "delan/alignment/losses.hpp"
#include "delan/alignment/reduce.hpp"
#include "delan/cli/experiment.hpp"
#include "delan/metrics/metrics.hpp"
#include "delan/training/losses.hpp"
#include "delan/worldsim/navigation.hpp"
#include "metrics_oracle.hpp"

using namespace delan;
namespace fs = std::filesystem;
namespace t = delan::testing;

namespace {

// ---- pinned tolerances and budgets ----------------------------------------
constexpr double kShiftTol = 1e-10;
constexpr double kPermTol = 1e-12;
constexpr double kReduceGolden = 0.73106;
constexpr double kGoldenTol = 1e-5;
constexpr double kUniformTol = 1e-10;
constexpr double kContrastGolden = 0.62652;
constexpr double kFdStep = 1e-5;
constexpr double kFdTol = 1e-4;
constexpr double kOracleTol = 1e-8;
constexpr double kReduceBudget = 10.0;     // seconds
constexpr double kGradientBudget = 120.0;  // seconds
constexpr double kDirectionalBudget = 1800.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects failures; keeps the first few messages.
struct Tally {
  std::size_t checks = 0, failures = 0;
  std::string first;
  void expect(bool ok, const std::string& what) {
    ++checks;
    if (ok) return;
    if (failures++ < 3) first += (first.empty() ? "" : "; ") + what;
  }
  Outcome outcome(const std::string& ok_detail) const {
    if (failures == 0) return {true, ok_detail};
    return {false, fmt::format("{} of {} checks failed: {} | {}", failures, checks, first, ok_detail)};
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1 ---------------------------------------------------------------------

Outcome reduce_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  Tally tally;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t p = t::uniform_int(rng, 1, 12), q = t::uniform_int(rng, 1, 12);
    const Matrix m = t::random_matrix(rng, p, q, -5.0, 5.0);
    const double r = alignment::reduce_similarity(m);
    const auto [lo, hi] = std::minmax_element(m.data().begin(), m.data().end());
    tally.expect(*lo <= r && r <= *hi, fmt::format("bounds trial {}", trial));

    const double c = t::uniform(rng, -10.0, 10.0);
    Matrix shifted = m;
    for (double& v : shifted.data()) v += c;
    tally.expect(std::abs(alignment::reduce_similarity(shifted) - r - c) < kShiftTol, fmt::format("shift trial {}", trial));

    std::vector<std::size_t> rp(p), cp(q);
    std::iota(rp.begin(), rp.end(), 0);
    std::iota(cp.begin(), cp.end(), 0);
    std::shuffle(rp.begin(), rp.end(), rng);
    std::shuffle(cp.begin(), cp.end(), rng);
    Matrix permuted(p, q);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < q; ++j) permuted(i, j) = m(rp[i], cp[j]);
    tally.expect(std::abs(alignment::reduce_similarity(permuted) - r) < kPermTol, fmt::format("permutation trial {}", trial));

    // Scatter m into a larger matrix with junk at masked positions.
    const std::size_t P = p + t::uniform_int(rng, 0, 4), Q = q + t::uniform_int(rng, 0, 4);
    std::vector<std::uint8_t> rv(P, 0), cv(Q, 0);
    std::fill(rv.begin(), rv.begin() + static_cast<long>(p), 1);
    std::fill(cv.begin(), cv.begin() + static_cast<long>(q), 1);
    std::shuffle(rv.begin(), rv.end(), rng);
    std::shuffle(cv.begin(), cv.end(), rng);
    Matrix padded = t::random_matrix(rng, P, Q, -100.0, 100.0);
    for (std::size_t i = 0, pi = 0; i < P; ++i) {
      if (!rv[i]) continue;
      for (std::size_t j = 0, qj = 0; j < Q; ++j)
        if (cv[j]) padded(i, j) = m(pi, qj++);
      ++pi;
    }
    tally.expect(alignment::reduce_similarity(padded, Mask(rv), Mask(cv)) == r, fmt::format("mask trial {}", trial));
  }
  const double golden = alignment::reduce_similarity(Matrix{{0, 1}, {1, 0}});
  tally.expect(std::abs(golden - kReduceGolden) <= kGoldenTol, fmt::format("golden {}", golden));
  const double secs = seconds_since(t0);
  tally.expect(secs < kReduceBudget, fmt::format("runtime {:.2f}s", secs));
  return tally.outcome(fmt::format("1000 matrices, R([[0,1],[1,0]]) = {:.6f}, {:.2f}s", golden, secs));
}

// ---- 2 ---------------------------------------------------------------------

Outcome contrastive_suite() {
  std::mt19937_64 rng(2002);
  Tally tally;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t b = t::uniform_int(rng, 1, 8);
    const double tau = t::uniform(rng, 0.2, 3.0);
    Matrix s = t::random_matrix(rng, b, b, -4.0, 4.0);
    const double base = alignment::contrastive_loss(s, tau);
    tally.expect(base >= 0.0, fmt::format("negative loss trial {}", trial));
    if (b > 1) {
      const std::size_t i = t::uniform_int(rng, 0, b - 1);
      s(i, i) += t::uniform(rng, 0.01, 2.0);
      tally.expect(alignment::contrastive_loss(s, tau) < base, fmt::format("monotonicity trial {}", trial));
    }
  }
  for (std::size_t b : {2u, 4u, 8u})
    for (double fill : {-1.5, 0.0, 0.3, 7.0}) {
      const double v = alignment::contrastive_loss(Matrix(b, b, fill), 1.0);
      tally.expect(std::abs(v - 2.0 * std::log(static_cast<double>(b))) < kUniformTol, fmt::format("uniform B={}", b));
    }
  const double golden = alignment::contrastive_loss(Matrix{{1, 0}, {0, 1}}, 1.0);
  tally.expect(std::abs(golden - kContrastGolden) <= kGoldenTol, fmt::format("golden {}", golden));
  return tally.outcome(fmt::format("1000 random score matrices, B=2 golden {:.6f}", golden));
}

// ---- 3 ---------------------------------------------------------------------

training::TrainConfig tiny_train_config() {
  training::TrainConfig c;
  c.model.d = 8;
  c.model.heads = 2;
  c.model.text_layers = 1;
  c.model.history_layers = 1;
  c.model.fusion_layers = 1;
  c.model.dropout = 0.0;
  c.batch = 4;
  c.max_steps = 8;
  c.lambda3 = 0.5;
  c.lambda4 = 0.5;
  c.seed = 3;
  return c;
}

world::WorldSpec grid(int side) {
  world::WorldSpec s;
  s.width = side;
  s.height = side;
  return s;
}

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(3003);
  Tally tally;
  double worst = 0.0;
  const auto record = [&](const GradientReport& r, const std::string& what) {
    worst = std::max(worst, r.max_relative_error);
    tally.expect(r.passed, fmt::format("{} err {:.2e}", what, r.max_relative_error));
  };

  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t p = t::uniform_int(rng, 1, 16), q = t::uniform_int(rng, 1, 16);
    const Mask rows = t::random_mask(rng, p), cols = t::random_mask(rng, q);
    const Differentiable f{[=](const Matrix& m) { return alignment::reduce_similarity(m, rows, cols); },
                           [=](const Matrix& m) { return alignment::reduce_similarity_gradient(m, rows, cols); }};
    record(grad_check(f, t::random_matrix(rng, p, q, -2, 2), kFdStep, kFdTol), "reduce_similarity");
  }

  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t b = t::uniform_int(rng, 1, 4);
    const double tau = t::uniform(rng, 0.3, 2.0);
    const Differentiable f{[=](const Matrix& s) { return alignment::contrastive_loss(s, tau); },
                           [=](const Matrix& s) {
                             ad::Tape tape;
                             ad::Var leaf = tape.leaf(s);
                             tape.backward(ad::add(alignment::directional_contrastive_loss(leaf, tau),
                                                   alignment::directional_contrastive_loss(ad::transpose(leaf), tau)));
                             return tape.grad_or_zero(leaf);
                           }};
    record(grad_check(f, t::random_matrix(rng, b, b, -2, 2), kFdStep, kFdTol), "contrastive_loss");
  }

  using t::Field;
  for (int trial = 0; trial < 3; ++trial) {
    const std::size_t b = t::uniform_int(rng, 2, 4), d = t::uniform_int(rng, 2, 16);
    std::vector<oracle::Instance> batch, banked;
    for (std::size_t i = 0; i < b; ++i)
      batch.push_back(t::random_instance(rng, d, t::uniform_int(rng, 1, 6), t::uniform_int(rng, 1, 6),
                                         t::uniform_int(rng, 1, 5), t::uniform_int(rng, 1, 6)));
    for (int i = 0; i < 2; ++i) banked.push_back(t::random_instance(rng, d, 3, 2, 2, 3));
    alignment::MemoryBank bank;
    bank.push(t::to_embeddings(banked));
    alignment::ContrastConfig cfg;
    cfg.tau = t::uniform(rng, 0.5, 1.5);
    cfg.cosine = trial == 2;
    const t::BatchLoss ih = [&](auto x) { return alignment::level_loss_ih(x, &bank, cfg); };
    const t::BatchLoss lo = [&](auto x) { return alignment::level_loss_lo(x, nullptr, cfg); };
    const auto emb = t::to_embeddings(batch);
    for (std::size_t i = 0; i < b; ++i) {
      for (Field f : {Field::instruction, Field::words, Field::history, Field::trajectory})
        record(t::check_field(ih, emb, i, f, 0, kFdTol), "level_loss_IH");
      record(t::check_field(lo, emb, i, Field::landmarks, 0, kFdTol), "level_loss_LO");
      for (std::size_t s = 0; s < batch[i].observations.size(); ++s)
        record(t::check_field(lo, emb, i, Field::observation, s, kFdTol), "level_loss_LO");
    }
  }

  // il_loss / rl_loss on packed logits and values.
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t steps = t::uniform_int(rng, 1, 5);
    training::RolloutRecord rec;
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (std::size_t s = 0; s < steps; ++s) {
      widths.push_back(t::uniform_int(rng, 2, 6));
      training::StepRecord st;
      st.logits.assign(widths.back(), 0.0);
      st.teacher = t::uniform_int(rng, 0, widths.back() - 1);
      st.action = t::uniform_int(rng, 0, widths.back() - 1);
      st.advantage = t::uniform(rng, -2, 2);
      st.ret = t::uniform(rng, -2, 2);
      rec.steps.push_back(st);
      total += widths.back();
    }
    for (bool rl : {false, true}) {
      const auto f = t::tape_function([&, rl](ad::Tape&, ad::Var x) {
        training::RolloutGraph g;
        std::size_t off = 0;
        for (std::size_t w : widths) {
          g.logits.push_back(ad::slice_cols(x, off, w));
          off += w;
        }
        for (std::size_t s = 0; s < steps; ++s) g.values.push_back(ad::slice_cols(x, off + s, 1));
        const std::vector<training::RolloutRecord> recs{rec};
        const std::vector<training::RolloutGraph> graphs{g};
        return rl ? training::rl_loss(recs, graphs) : training::il_loss(recs, graphs);
      });
      record(grad_check(f, t::random_matrix(rng, 1, total + steps, -2, 2), kFdStep, kFdTol), rl ? "rl_loss" : "il_loss");
    }
  }

  // End to end: weighted total objective w.r.t. agent parameters, with the
  // sampled rollouts replayed under frozen advantages and a non-empty bank.
  const training::EnvPool train = training::make_pool(grid(4), 3, 4, 31, {2, 4});
  const training::EnvPool val;
  training::Trainer trainer(tiny_train_config(), train, val);
  trainer.step();
  const auto first = trainer.objective(2);
  const agent::AgentParams base = trainer.params();
  for (const char* name : {"text.tok", "text.layer0.attn.q.w", "text.layer0.ln1.g", "vision.feature",
                           "vision.angle.w", "vision.stop", "history.begin", "history.turn.w", "history.layer0.ff2.w",
                           "fusion.type", "fusion.layer0.cross.k.w", "head.score1.w", "head.score2.w",
                           "head.value1.w"}) {
    Differentiable f;
    f.value = [&](const Matrix& x) {
      trainer.params() = base;
      trainer.params().at(name) = x;
      return trainer.objective(2, &first.sampled).log.total;
    };
    f.gradient = [&](const Matrix& x) {
      trainer.params() = base;
      trainer.params().at(name) = x;
      return trainer.objective(2, &first.sampled).gradients.at(name);
    };
    record(grad_check(f, base.at(name), kFdStep, kFdTol), std::string("end-to-end ") + name);
  }
  const double secs = seconds_since(t0);
  tally.expect(secs < kGradientBudget, fmt::format("runtime {:.1f}s", secs));
  return tally.outcome(fmt::format("{} checks, worst relative error {:.2e}, {:.1f}s", tally.checks, worst, secs));
}

// ---- 4 ---------------------------------------------------------------------

Outcome oracle_suite() {
  std::mt19937_64 rng(4004);
  Tally tally;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = t::uniform_int(rng, 1, 4), d = t::uniform_int(rng, 1, 6);
    std::vector<oracle::Instance> batch, banked;
    for (std::size_t i = 0; i < b; ++i)
      batch.push_back(t::random_instance(rng, d, t::uniform_int(rng, 1, 6), t::uniform_int(rng, 1, 6),
                                         t::uniform_int(rng, 1, 5), t::uniform_int(rng, 1, 6)));
    const std::size_t bank_size = trial % 2 ? t::uniform_int(rng, 1, 4) : 0;
    for (std::size_t i = 0; i < bank_size; ++i)
      banked.push_back(t::random_instance(rng, d, t::uniform_int(rng, 1, 6), 1, t::uniform_int(rng, 1, 5), 1));
    alignment::MemoryBank bank;
    bank.push(t::to_embeddings(banked));
    alignment::ContrastConfig cfg;
    cfg.tau = t::uniform(rng, 0.3, 2.0);
    const auto emb = t::to_embeddings(batch);
    const double ih = alignment::level_loss_ih(emb, &bank, cfg).value;
    const double ih_ref = oracle::level_ih(batch, banked, cfg.tau);
    const double lo = alignment::level_loss_lo(emb, nullptr, cfg).value;
    const double lo_ref = oracle::level_lo(batch, cfg.tau);
    worst = std::max({worst, std::abs(ih - ih_ref), std::abs(lo - lo_ref)});
    tally.expect(std::abs(ih - ih_ref) <= kOracleTol, fmt::format("IH trial {}", trial));
    tally.expect(std::abs(lo - lo_ref) <= kOracleTol, fmt::format("LO trial {}", trial));
  }
  return tally.outcome(fmt::format("100 ragged batches, max |diff| {:.1e}", worst));
}

// ---- 5 ---------------------------------------------------------------------

Outcome bank_suite() {
  std::mt19937_64 rng(5005);
  Tally tally;
  alignment::MemoryBank bank(480);
  std::deque<double> queue;  // tag of each entry, oldest first
  double tag = 0.0;
  for (int push = 0; push < 1000; ++push) {
    const std::size_t n = t::uniform_int(rng, 0, 12);
    std::vector<alignment::InstanceEmbeddings> items;
    for (std::size_t i = 0; i < n; ++i) {
      items.push_back(t::to_embeddings(t::random_instance(rng, 2, 1, 1, 1, 1)));
      items.back().instruction(0, 0) = ++tag;
      queue.push_back(tag);
      if (queue.size() > 480) queue.pop_front();
    }
    bank.push(items);
    tally.expect(bank.size() == queue.size(), fmt::format("size after push {}", push));
    tally.expect(bank.empty() || (bank[0].instruction(0, 0) == queue.front() &&
                                  bank[bank.size() - 1].instruction(0, 0) == queue.back()),
                 fmt::format("order after push {}", push));
  }

  // Gradients reach parameters only through the current batch: finite
  // differences in the parameters, with bank entries held fixed, match the
  // analytic gradient, and moving the parameters leaves the bank untouched.
  training::TrainConfig c = tiny_train_config();
  const training::EnvPool train = training::make_pool(grid(4), 3, 4, 51, {2, 4});
  const training::EnvPool val;
  training::Trainer trainer(c, train, val);
  trainer.step();
  trainer.step();
  const std::vector<alignment::InstanceEmbeddings> stored(trainer.bank().begin(), trainer.bank().end());
  const auto first = trainer.objective(3);
  const agent::AgentParams base = trainer.params();
  for (const char* name : {"history.layer0.attn.v.w", "text.layer0.ff1.w", "vision.feature"}) {
    Differentiable f;
    f.value = [&](const Matrix& x) {
      trainer.params() = base;
      trainer.params().at(name) = x;
      return trainer.objective(3, &first.sampled).log.total;
    };
    f.gradient = [&](const Matrix& x) {
      trainer.params() = base;
      trainer.params().at(name) = x;
      return trainer.objective(3, &first.sampled).gradients.at(name);
    };
    const auto r = grad_check(f, base.at(name), kFdStep, kFdTol);
    tally.expect(r.passed, fmt::format("parameter gradient {} err {:.2e}", name, r.max_relative_error));
  }
  bool unchanged = trainer.bank().size() == stored.size();
  for (std::size_t i = 0; unchanged && i < stored.size(); ++i)
    unchanged = trainer.bank()[i].history == stored[i].history && trainer.bank()[i].instruction == stored[i].instruction;
  tally.expect(unchanged, "bank entries changed under parameter perturbation");

  // Bank entries do take part in the loss: perturbing one moves the value,
  // yet the loss result has gradient slots for batch instances only.
  const auto batch = t::to_embeddings(std::vector{t::random_instance(rng, 3, 2, 1, 2, 2), t::random_instance(rng, 3, 2, 1, 2, 2)});
  alignment::MemoryBank small;
  small.push(t::to_embeddings(std::vector{t::random_instance(rng, 3, 2, 1, 2, 2)}));
  const auto before = alignment::level_loss_ih(batch, &small, alignment::ContrastConfig{});
  auto moved = std::vector<alignment::InstanceEmbeddings>(small.begin(), small.end());
  moved[0].history(0, 0) += 0.5;
  alignment::MemoryBank perturbed;
  perturbed.push(moved);
  const auto after = alignment::level_loss_ih(batch, &perturbed, alignment::ContrastConfig{});
  tally.expect(before.gradients.size() == batch.size(), "gradient slots beyond the batch");
  tally.expect(after.value != before.value, "bank entry had no effect on the loss");
  return tally.outcome("1000 pushes match the queue oracle; bank entries carry no gradient");
}

// ---- 6 ---------------------------------------------------------------------

Outcome simulator_suite() {
  Tally tally;
  const training::EnvPool pool = training::make_pool(grid(6), 50, 10, 6006);
  const agent::AgentParams params(agent::default_model_config(), 1);
  const training::EvalResult r = training::evaluate_policy(params, pool, training::RolloutMode::teacher);
  for (std::size_t i = 0; i < r.rows.size(); ++i)
    tally.expect(r.rows[i].sr == 1.0 && r.rows[i].spl == 1.0 && r.rows[i].ndtw == 1.0, "teacher " + r.ids[i]);

  std::mt19937_64 rng(6007);
  for (int side : {3, 4, 5}) {
    const world::World w = t::full_grid(side, side);
    for (int trial = 0; trial < 200; ++trial) {
      const auto ref = t::random_walk(rng, w, static_cast<int>(rng() % w.node_count()), 1 + rng() % 5);
      const auto pred = t::random_walk(rng, w, ref.front(), 1 + rng() % 5);
      const double th = static_cast<double>(trial % 3);
      const metrics::TrajectoryPair p{pred, ref, &w, th};
      const double dtw = t::brute_dtw(ref, pred, side);
      const double nd = std::exp(-dtw / (static_cast<double>(ref.size()) * std::max(th, 1.0)));
      const double sr = t::manhattan(pred.back(), ref.back(), side) <= th ? 1.0 : 0.0;
      tally.expect(metrics::dtw_distance(p) == dtw, "DTW");
      tally.expect(std::abs(metrics::ndtw(p) - nd) < 1e-14, "nDTW");
      tally.expect(std::abs(metrics::sdtw(p) - sr * nd) < 1e-14, "sDTW");
      tally.expect(std::abs(metrics::cls(p) - t::oracle_cls(ref, pred, side, std::max(th, 1.0))) < 1e-14, "CLS");
    }
  }
  return tally.outcome(fmt::format("{} teacher episodes at SR=SPL=nDTW=1; 600 path pairs match enumeration",
                                   r.rows.size()));
}

// ---- shared training profile for 7 and 8 -----------------------------------

/// Desk-scale profile: small transformer, imitation-weighted objective.
training::TrainConfig profile() {
  training::TrainConfig c;
  c.model.d = 16;
  c.model.heads = 2;
  c.model.text_layers = 1;
  c.model.history_layers = 1;
  c.model.fusion_layers = 1;
  c.batch = 8;
  c.lr = 3e-3;
  c.lambda1 = 0.2;
  c.lambda2 = 1.0;
  return c;
}

// ---- 7 ---------------------------------------------------------------------

Outcome determinism_suite() {
  const training::EnvPool train = training::make_pool(grid(4), 20, 10, 7007);
  const training::EnvPool val = training::make_pool(grid(4), 10, 10, 7008);
  training::TrainConfig c = profile();
  c.iterations = 500;
  c.eval_interval = 100;
  c.seed = 7;
  std::vector<double> il;
  const auto run = [&] {
    il.clear();
    training::Trainer trainer(c, train, val);
    std::ostringstream log;
    trainer.run(&log, [&](const training::IterationLog& l) { il.push_back(l.l_il); });
    return log.str();
  };
  const std::string a = run();
  const std::string b = run();
  const double at10 = il.at(9);
  const double tail = std::accumulate(il.end() - 10, il.end(), 0.0) / 10.0;
  const bool identical = a == b;
  return {identical, fmt::format("two 500-iteration logs {} ({} bytes); IL loss {:.4f} at iteration 10, {:.4f} over "
                                 "the last 10{}",
                                 identical ? "byte-identical" : "DIFFER", a.size(), at10, tail,
                                 tail < at10 ? "" : " (no decrease)")};
}

// ---- 8 ---------------------------------------------------------------------

#ifndef DELAN_LAB_BINARY
#define DELAN_LAB_BINARY "delan_lab"
#endif

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

Outcome ablation_reports(Tally& tally) {
  const fs::path dir = fs::temp_directory_path() / fmt::format("delan_acceptance_{}", std::random_device{}());
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << R"({"world": {"width": 4, "height": 4},
    "episodes": {"min_hops": 2, "max_hops": 4},
    "train_pool": {"worlds": 2, "episodes_per_world": 4, "seed": 1},
    "val_pool": {"worlds": 1, "episodes_per_world": 4, "seed": 2},
    "model": {"d": 8, "heads": 2, "text_layers": 1, "fusion_layers": 1},
    "train": {"iterations": 1, "batch": 2}, "seeds": [0]})";
  const std::map<std::string, std::size_t> expected{{"components", 7}, {"level", 2}, {"separation", 3}};
  for (const auto& [axis, rows] : expected) {
    const std::string cmd = fmt::format("\"{}\" ablate \"{}\" --axis {} --out \"{}\" > \"{}\" 2>&1", DELAN_LAB_BINARY,
                                        (dir / "config.json").string(), axis, dir.string(),
                                        (dir / (axis + ".stdout")).string());
    const int rc = std::system(cmd.c_str());
    tally.expect(rc == 0, fmt::format("ablate {} exited with {}", axis, rc));
    const fs::path csv = dir / ("ablate_" + axis + ".csv");
    tally.expect(count_lines(csv) == rows + 1, fmt::format("ablate {} rows", axis));
  }
  // Component table check marks, rows 1-7.
  std::ifstream in(dir / "ablate_components.csv");
  std::string line;
  std::getline(in, line);
  const std::vector<std::string> marks{"1,1,1,1,1", "0,1,1,1,1", "1,0,1,1,1", "1,1,0,1,1",
                                       "1,1,1,0,1", "1,1,1,1,0", "0,0,0,0,1"};
  for (std::size_t r = 0; r < marks.size() && std::getline(in, line); ++r)
    tally.expect(line.rfind(fmt::format("{},{},", r + 1, marks[r]), 0) == 0, fmt::format("component row {}", r + 1));
  const int bad = std::system(fmt::format("\"{}\" ablate \"{}\" --axis bogus > /dev/null 2>&1", DELAN_LAB_BINARY,
                                          (dir / "config.json").string())
                                  .c_str());
  tally.expect(bad != 0, "unknown axis accepted");
  fs::remove_all(dir);
  return {};
}

Outcome directional_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const training::EnvPool train = training::make_pool(grid(6), 40, 10, 8008);
  const training::EnvPool val = training::make_pool(grid(6), 20, 10, 8009);  // 200 episodes on unseen worlds
  const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  struct Arm {
    double l3, l4;
    std::vector<double> sr;
  };
  std::vector<Arm> arms{{0.0, 0.0, std::vector<double>(seeds.size())}, {0.01, 0.1, std::vector<double>(seeds.size())}};
  cli::parallel_for(arms.size() * seeds.size(), cli::worker_limit(), [&](std::size_t job) {
    Arm& arm = arms[job / seeds.size()];
    training::TrainConfig c = profile();
    c.iterations = 400;
    c.lambda3 = arm.l3;
    c.lambda4 = arm.l4;
    c.seed = seeds[job % seeds.size()];
    training::Trainer trainer(c, train, val);
    std::optional<metrics::MetricReport> last;
    trainer.run(nullptr, [&](const training::IterationLog& l) {
      if (l.val) last = l.val;
    });
    arm.sr[job % seeds.size()] = last.value().sr;
  });
  const auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  const double base = mean(arms[0].sr), aligned = mean(arms[1].sr);
  std::string per_seed;
  for (std::size_t s = 0; s < seeds.size(); ++s)
    per_seed += fmt::format("{}{:.3f}/{:.3f}", s ? " " : "", arms[1].sr[s], arms[0].sr[s]);

  Tally tally;
  tally.expect(aligned >= base, fmt::format("aligned mean SR {:.4f} < baseline {:.4f}", aligned, base));
  ablation_reports(tally);
  const double secs = seconds_since(t0);
  tally.expect(secs < kDirectionalBudget, fmt::format("runtime {:.0f}s", secs));
  return tally.outcome(fmt::format("mean greedy SR aligned {:.4f} vs baseline {:.4f} (per seed {}); ablation "
                                   "reports 7/2/3 rows; {:.0f}s",
                                   aligned, base, per_seed, secs));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"reduce-function suite", reduce_suite},
      {"contrastive-loss suite", contrastive_suite},
      {"gradient suite", gradient_suite},
      {"oracle equivalence", oracle_suite},
      {"memory bank", bank_suite},
      {"simulator + metrics", simulator_suite},
      {"determinism", determinism_suite},
      {"directional claim + ablation reports", directional_suite},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoul(argv[i]));

  const auto t0 = std::chrono::steady_clock::now();
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.count(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all &= o.pass;
    std::cout << fmt::format("criterion {}: {}  {}: {}", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail)
              << std::endl;
  }
  std::cout << fmt::format("total {:.0f}s", seconds_since(t0)) << std::endl;
  return all ? 0 : 1;
}
