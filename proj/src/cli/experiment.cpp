#include "delan/cli/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "delan/worldsim/serialize.hpp"

namespace delan::cli {

using nlohmann::json;

namespace {

[[noreturn]] void unknown(const char* where, const std::string& key) {
  throw std::invalid_argument(std::string(where) + ": unknown key '" + key + "'");
}

json pool_json(const PoolSpec& p) {
  return {{"worlds", p.worlds}, {"episodes_per_world", p.episodes_per_world}, {"seed", p.seed}};
}

PoolSpec pool_from(const json& j, PoolSpec p, const char* where) {
  for (const auto& [key, v] : j.items()) {
    if (key == "worlds") p.worlds = v.get<std::size_t>();
    else if (key == "episodes_per_world") p.episodes_per_world = v.get<std::size_t>();
    else if (key == "seed") p.seed = v.get<std::uint64_t>();
    else unknown(where, key);
  }
  return p;
}

training::EnvPool pool_for(const ExperimentConfig& c, const PoolSpec& p) {
  return training::make_pool(c.world, p.worlds, p.episodes_per_world, p.seed, c.episodes);
}

metrics::MetricReport stddev_of(const std::vector<metrics::MetricReport>& rows, const metrics::MetricReport& mean) {
  metrics::MetricReport out;
  out.count = rows.size();
  if (rows.size() < 2) return out;
  using R = metrics::MetricReport;
  for (double R::*f : {&R::tl, &R::ne, &R::sr, &R::spl, &R::ndtw, &R::sdtw, &R::cls, &R::gp}) {
    double s = 0.0;
    for (const auto& r : rows) s += (r.*f - mean.*f) * (r.*f - mean.*f);
    out.*f = std::sqrt(s / static_cast<double>(rows.size() - 1));
  }
  return out;
}

std::string mark(bool on) { return on ? "x" : ""; }

}  // namespace

void ExperimentConfig::validate() const {
  world.validate();
  if (episodes.min_hops < 1 || episodes.max_hops < episodes.min_hops)
    throw std::invalid_argument("experiment: need 1 <= min_hops <= max_hops");
  if (train_pool.worlds == 0 || train_pool.episodes_per_world == 0)
    throw std::invalid_argument("experiment: empty training pool");
  if (seeds.empty()) throw std::invalid_argument("experiment: seed list is empty");
  if (output_dir.empty()) throw std::invalid_argument("experiment: empty output_dir");
  train.validate();
}

json to_json(const ExperimentConfig& c) {
  json train = training::to_json(c.train);
  train.erase("model");
  train.erase("contrast");
  return {{"world", world::to_json(c.world)},
          {"episodes", {{"min_hops", c.episodes.min_hops}, {"max_hops", c.episodes.max_hops}}},
          {"train_pool", pool_json(c.train_pool)},
          {"val_pool", pool_json(c.val_pool)},
          {"model", agent::to_json(c.train.model)},
          {"train", train},
          {"contrast", training::to_json(c.train.contrast)},
          {"output_dir", c.output_dir},
          {"seeds", c.seeds}};
}

ExperimentConfig experiment_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("experiment: expected a JSON object");
  ExperimentConfig c;
  // model and contrast first so that train sees them regardless of key order.
  if (j.contains("model")) c.train.model = agent::model_config_from_json(j.at("model"), c.train.model);
  if (j.contains("contrast")) c.train.contrast = training::contrast_config_from_json(j.at("contrast"), c.train.contrast);
  for (const auto& [key, v] : j.items()) {
    if (key == "world") c.world = world::world_spec_from_json(v);
    else if (key == "episodes") {
      for (const auto& [k, x] : v.items()) {
        if (k == "min_hops") c.episodes.min_hops = x.get<int>();
        else if (k == "max_hops") c.episodes.max_hops = x.get<int>();
        else unknown("episodes", k);
      }
    } else if (key == "train_pool") c.train_pool = pool_from(v, c.train_pool, "train_pool");
    else if (key == "val_pool") c.val_pool = pool_from(v, c.val_pool, "val_pool");
    else if (key == "train") {
      if (v.contains("model") || v.contains("contrast"))
        throw std::invalid_argument("experiment: 'model' and 'contrast' belong at the top level, not under 'train'");
      c.train = training::train_config_from_json(v, c.train);
    } else if (key == "output_dir") c.output_dir = v.get<std::string>();
    else if (key == "seeds") c.seeds = v.get<std::vector<std::uint64_t>>();
    else if (key == "model" || key == "contrast") continue;
    else unknown("experiment", key);
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config file '" + file.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(fmt::format("{}: {}", file.string(), e.what()));
  }
  return experiment_from_json(j);
}

training::EnvPool make_train_pool(const ExperimentConfig& c) { return pool_for(c, c.train_pool); }
training::EnvPool make_val_pool(const ExperimentConfig& c) { return pool_for(c, c.val_pool); }

std::vector<double> parse_split(const std::string& text) {
  std::vector<double> parts;
  std::size_t begin = 0;
  while (true) {
    const std::size_t end = text.find('/', begin);
    const std::string item = text.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !(v >= 0.0)) throw std::invalid_argument("bad split '" + text + "'");
    parts.push_back(v);
    if (end == std::string::npos) break;
    begin = end + 1;
  }
  const double total = std::accumulate(parts.begin(), parts.end(), 0.0);
  if (parts.size() < 2 || !(total > 0.0)) throw std::invalid_argument("bad split '" + text + "'");
  for (double& p : parts) p /= total;
  return parts;
}

std::vector<std::size_t> split_counts(std::size_t n, const std::vector<double>& fractions) {
  std::vector<std::size_t> counts(fractions.size());
  std::vector<std::pair<double, std::size_t>> rest;
  std::size_t used = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double exact = fractions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    used += counts[i];
    rest.push_back({exact - static_cast<double>(counts[i]), i});
  }
  std::stable_sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++counts[rest[k % rest.size()].second];
  return counts;
}

Axis axis_from_string(const std::string& s) {
  if (s == "components") return Axis::components;
  if (s == "level") return Axis::level;
  if (s == "separation") return Axis::separation;
  throw std::invalid_argument("unknown ablation axis '" + s + "'; valid axes: components, level, separation");
}

const char* to_string(Axis a) {
  switch (a) {
    case Axis::components: return "components";
    case Axis::level: return "level";
    case Axis::separation: return "separation";
  }
  return "?";
}

std::vector<AblationRow> ablation_rows(Axis axis, const training::TrainConfig& base) {
  std::vector<AblationRow> rows;
  switch (axis) {
    case Axis::components: {
      // IT WT IV WV LO
      const bool pattern[7][5] = {{1, 1, 1, 1, 1}, {0, 1, 1, 1, 1}, {1, 0, 1, 1, 1}, {1, 1, 0, 1, 1},
                                  {1, 1, 1, 0, 1}, {1, 1, 1, 1, 0}, {0, 0, 0, 0, 1}};
      for (const auto& p : pattern) {
        training::TrainConfig t = base;
        t.contrast.level = alignment::LevelMode::dual;
        auto& f = t.contrast.flags;
        f = {p[0], p[1], p[2], p[3], p[4]};
        rows.push_back({fmt::format("IT={} WT={} IV={} WV={} LO={}", +p[0], +p[1], +p[2], +p[3], +p[4]), t});
      }
      break;
    }
    case Axis::level:
      for (auto level : {alignment::LevelMode::dual, alignment::LevelMode::single}) {
        training::TrainConfig t = base;
        t.contrast.level = level;
        rows.push_back({level == alignment::LevelMode::dual ? "dual" : "single", t});
      }
      break;
    case Axis::separation:
      for (auto sep : {agent::Separation::mutual, agent::Separation::separate, agent::Separation::independent}) {
        training::TrainConfig t = base;
        t.model.separation = sep;
        rows.push_back({agent::to_string(sep), t});
      }
      break;
  }
  return rows;
}

std::size_t worker_limit() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DELAN_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = static_cast<std::size_t>(v);
  }
  return n;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job) {
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::exception_ptr failure;
  const auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < std::min(workers, count); ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<RowResult> run_ablation(const ExperimentConfig& c, Axis axis, std::size_t workers,
                                    const std::function<void(const std::string&)>& progress) {
  const auto rows = ablation_rows(axis, c.train);
  const training::EnvPool train = make_train_pool(c);
  const training::EnvPool val = make_val_pool(c);

  struct Job {
    std::size_t row, seed;
  };
  std::vector<Job> jobs;
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t s = 0; s < c.seeds.size(); ++s) jobs.push_back({r, s});

  std::vector<metrics::MetricReport> reports(jobs.size());
  std::mutex log_mutex;
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    training::TrainConfig t = rows[jobs[i].row].train;
    t.seed = c.seeds[jobs[i].seed];
    const training::EnvPool no_validation;
    training::Trainer trainer(t, train, no_validation);
    trainer.run(nullptr);
    reports[i] =
        training::evaluate_policy(trainer.params(), val, training::RolloutMode::greedy, t.max_steps, t.success_radius)
            .mean;
    if (progress) {
      std::lock_guard lock(log_mutex);
      progress(fmt::format("{} seed {}: SR {:.3f}", rows[jobs[i].row].label, t.seed, reports[i].sr));
    }
  });

  std::vector<RowResult> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    RowResult res;
    res.label = rows[r].label;
    for (std::size_t i = 0; i < jobs.size(); ++i)
      if (jobs[i].row == r) res.per_seed.push_back(reports[i]);
    res.mean = metrics::aggregate(res.per_seed);
    res.stddev = stddev_of(res.per_seed, res.mean);
    out.push_back(std::move(res));
  }
  return out;
}

void write_ablation_csv(std::ostream& out, Axis axis, const std::vector<AblationRow>& rows,
                        const std::vector<RowResult>& results) {
  switch (axis) {
    case Axis::components: out << "row,IT,WT,IV,WV,LO"; break;
    case Axis::level: out << "row,level"; break;
    case Axis::separation: out << "row,separation"; break;
  }
  out << ",seeds,TL,NE,SR,SPL,nDTW,SR_std,SPL_std,nDTW_std\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out << r + 1;
    const auto& f = rows[r].train.contrast.flags;
    switch (axis) {
      case Axis::components:
        out << fmt::format(",{},{},{},{},{}", +f.instruction_trajectory, +f.word_trajectory, +f.instruction_viewpoint,
                           +f.word_viewpoint, +f.landmark_observation);
        break;
      case Axis::level:
      case Axis::separation: out << ',' << rows[r].label; break;
    }
    const auto& m = results[r].mean;
    const auto& s = results[r].stddev;
    out << fmt::format(",{},{},{},{},{},{},{},{},{}\n", results[r].per_seed.size(), m.tl, m.ne, m.sr, m.spl, m.ndtw,
                       s.sr, s.spl, s.ndtw);
  }
}

void write_ablation_markdown(std::ostream& out, Axis axis, const std::vector<AblationRow>& rows,
                             const std::vector<RowResult>& results) {
  switch (axis) {
    case Axis::components:
      out << "| # | IT | WT | IV | WV | LO | TL | NE | SR | SPL | nDTW |\n"
             "|---|----|----|----|----|----|----|----|----|-----|------|\n";
      break;
    case Axis::level:
      out << "| # | Alignment level | TL | NE | SR | SPL | nDTW |\n"
             "|---|-----------------|----|----|----|-----|------|\n";
      break;
    case Axis::separation:
      out << "| # | Separation | TL | NE | SR | SPL | nDTW |\n"
             "|---|------------|----|----|----|-----|------|\n";
      break;
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = rows[r].train.contrast.flags;
    out << "| " << r + 1 << " | ";
    if (axis == Axis::components)
      out << fmt::format("{} | {} | {} | {} | {} | ", mark(f.instruction_trajectory), mark(f.word_trajectory),
                         mark(f.instruction_viewpoint), mark(f.word_viewpoint), mark(f.landmark_observation));
    else
      out << rows[r].label << " | ";
    const auto& m = results[r].mean;
    out << fmt::format("{:.2f} | {:.2f} | {:.2f} | {:.2f} | {:.2f} |\n", m.tl, m.ne, 100 * m.sr, 100 * m.spl,
                       100 * m.ndtw);
  }
}

}  // namespace delan::cli
