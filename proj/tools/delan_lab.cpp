#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "delan/agent/checkpoint.hpp"
#include "delan/cli/experiment.hpp"
#include "delan/cli/plot.hpp"
#include "delan/worldsim/serialize.hpp"
#include "delan/worldsim/vocabulary.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace delan;

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

/// Bad invocation detected after parsing; exits with the usage code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

cli::ExperimentConfig config_or_default(const std::string& file) {
  return file.empty() ? cli::experiment_from_json(json::object()) : cli::load_experiment(file);
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
  std::string config, out, split;
  std::optional<std::size_t> worlds, per_world;
  bool force = false;
};

const std::vector<std::string> kSplitNames{"train", "val", "test"};

int cmd_gen(const GenArgs& a) {
  const cli::ExperimentConfig c = cli::load_experiment(a.config);
  std::vector<double> fractions;
  if (!a.split.empty()) {
    try {
      fractions = cli::parse_split(a.split);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (fractions.size() > kSplitNames.size()) throw UsageError("--split takes at most three parts");
  }

  const fs::path out(a.out);
  const std::vector<std::string> managed{"worlds", "episodes", "train", "val", "test", "manifest.json"};
  bool occupied = false;
  for (const auto& m : managed) occupied |= fs::exists(out / m);
  if (occupied && !a.force)
    throw std::runtime_error("'" + out.string() + "' already holds generated data; pass --force to overwrite");
  for (const auto& m : managed) fs::remove_all(out / m);

  cli::PoolSpec pool = c.train_pool;
  if (a.worlds) pool.worlds = *a.worlds;
  if (a.per_world) pool.episodes_per_world = *a.per_world;
  const training::EnvPool env = training::make_pool(c.world, pool.worlds, pool.episodes_per_world, pool.seed, c.episodes);

  for (std::size_t i = 0; i < env.worlds.size(); ++i)
    write_file(out / "worlds" / fmt::format("world_{:03}.json", i), dump(world::to_json(env.worlds[i])));

  std::vector<std::size_t> counts{env.episodes.size()};
  std::vector<std::string> dirs{"episodes"};
  if (!fractions.empty()) {
    counts = cli::split_counts(env.episodes.size(), fractions);
    dirs.assign(kSplitNames.begin(), kSplitNames.begin() + static_cast<long>(fractions.size()));
  }
  const auto& vocab = world::Vocabulary::standard();
  std::size_t next = 0;
  json manifest_counts = json::object();
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    for (std::size_t k = 0; k < counts[d]; ++k, ++next) {
      const training::EpisodeRef& ref = env.episodes[next];
      const json file{{"world", fmt::format("world_{:03}.json", ref.world)},
                      {"text", vocab.decode(ref.episode.instruction)},
                      {"episode", world::to_json(ref.episode)}};
      write_file(out / dirs[d] / (ref.episode.id + ".json"), dump(file));
    }
    manifest_counts[dirs[d]] = counts[d];
  }
  json manifest{{"config", cli::to_json(c)},
                {"worlds", pool.worlds},
                {"episodes_per_world", pool.episodes_per_world},
                {"counts", manifest_counts}};
  write_file(out / "manifest.json", dump(manifest));
  std::cout << fmt::format("wrote {} worlds and {} episodes to {}\n", env.worlds.size(), env.episodes.size(),
                           out.string());
  return 0;
}

/// Worlds under root/worlds plus the episode files of one directory.
training::EnvPool load_episodes(const fs::path& root, const std::string& split) {
  training::EnvPool pool;
  std::map<std::string, std::size_t> world_index;
  const fs::path dir = root / split;
  if (!fs::is_directory(dir)) throw std::runtime_error("no episode directory '" + dir.string() + "'");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const json j = read_json(f);
    const std::string wname = j.at("world").get<std::string>();
    auto it = world_index.find(wname);
    if (it == world_index.end()) {
      pool.worlds.push_back(world::world_from_json(read_json(root / "worlds" / wname)));
      it = world_index.emplace(wname, pool.worlds.size() - 1).first;
    }
    pool.episodes.push_back({it->second, world::episode_from_json(j.at("episode"))});
  }
  if (pool.episodes.empty()) throw std::runtime_error("no episodes in '" + dir.string() + "'");
  return pool;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string config, out, resume;
  std::optional<double> lambda1, lambda2, lambda3, lambda4, lr;
  std::optional<std::size_t> iterations, batch, eval_interval, checkpoint_every;
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
};

/// Flags override file values, which override defaults.
cli::ExperimentConfig effective_config(const TrainArgs& a) {
  cli::ExperimentConfig c = config_or_default(a.config);
  auto& t = c.train;
  if (a.lambda1) t.lambda1 = *a.lambda1;
  if (a.lambda2) t.lambda2 = *a.lambda2;
  if (a.lambda3) t.lambda3 = *a.lambda3;
  if (a.lambda4) t.lambda4 = *a.lambda4;
  if (a.lr) t.lr = *a.lr;
  if (a.iterations) t.iterations = *a.iterations;
  if (a.batch) t.batch = *a.batch;
  if (a.eval_interval) t.eval_interval = *a.eval_interval;
  if (a.seed) t.seed = *a.seed;
  if (!a.out.empty()) c.output_dir = a.out;
  c.validate();
  return c;
}

/// Drops log rows past `iteration` so a resumed run appends cleanly.
void truncate_log(const fs::path& log, std::size_t iteration) {
  std::ifstream in(log);
  if (!in) return;
  std::string line, kept;
  bool header = true;
  while (std::getline(in, line)) {
    if (header || std::stoull(line.substr(0, line.find(','))) <= iteration) kept += line + "\n";
    header = false;
  }
  in.close();
  write_file(log, kept);
}

int cmd_train(const TrainArgs& a) {
  const cli::ExperimentConfig c = effective_config(a);
  if (a.dry_run) {
    std::cout << dump(cli::to_json(c));
    return 0;
  }
  const fs::path out(c.output_dir);
  fs::create_directories(out);
  const training::EnvPool train = cli::make_train_pool(c);
  const training::EnvPool val = cli::make_val_pool(c);
  training::Trainer trainer(c.train, train, val);

  const fs::path log = out / "log.csv";
  if (!a.resume.empty()) {
    trainer.restore(read_json(a.resume));
    truncate_log(log, trainer.iteration());
  } else {
    fs::remove(log);
  }
  write_file(out / "config.json", dump(cli::to_json(c)));

  const bool fresh_log = !fs::exists(log) || fs::file_size(log) == 0;
  std::ofstream csv(log, std::ios::app);
  if (!csv) throw std::runtime_error("cannot write '" + log.string() + "'");
  if (fresh_log && trainer.iteration() > 0) csv << training::kLogHeader << '\n';

  const auto save = [&] { write_file(out / "checkpoint.json", trainer.checkpoint().dump() + "\n"); };
  try {
    trainer.run(&csv, [&](const training::IterationLog& l) {
      if (a.checkpoint_every && *a.checkpoint_every > 0 && l.iter % *a.checkpoint_every == 0) save();
      if (l.val)
        std::cerr << fmt::format("iter {}: total {:.4f} val SR {:.3f} SPL {:.3f}\n", l.iter, l.total, l.val->sr,
                                 l.val->spl);
    });
  } catch (const training::TrainingAborted&) {
    save();
    throw;
  }
  save();
  std::cout << fmt::format("trained {} iterations; outputs in {}\n", trainer.iteration(), out.string());
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint, config, data, split = "val", out;
  bool teacher = false;
};

int cmd_eval(const EvalArgs& a) {
  if (a.checkpoint.empty() && !a.teacher) throw UsageError("eval needs a checkpoint unless --teacher is given");
  cli::ExperimentConfig c = config_or_default(a.config);
  std::optional<agent::AgentParams> params;
  if (!a.checkpoint.empty()) {
    const json j = read_json(a.checkpoint);
    if (j.contains("params") && j.contains("iteration")) {
      params = agent::params_from_json(j.at("params"));
      if (a.config.empty()) {
        const training::TrainConfig t = training::train_config_from_json(j.at("config"));
        c.train.max_steps = t.max_steps;
        c.train.success_radius = t.success_radius;
      }
    } else {
      params = agent::params_from_json(j);
    }
  } else {
    params.emplace(c.train.model, c.train.seed);
  }

  const training::EnvPool pool = a.data.empty() ? cli::make_val_pool(c) : load_episodes(a.data, a.split);
  const auto mode = a.teacher ? training::RolloutMode::teacher : training::RolloutMode::greedy;
  const training::EvalResult r =
      training::evaluate_policy(*params, pool, mode, c.train.max_steps, c.train.success_radius);

  const fs::path out(a.out.empty() ? c.output_dir : a.out);
  std::ostringstream csv;
  metrics::write_csv(csv, r.ids, r.rows);
  write_file(out / "eval.csv", csv.str());
  write_file(out / "eval.json", dump({{"mode", a.teacher ? "teacher" : "greedy"},
                                      {"episodes", r.rows.size()},
                                      {"mean", metrics::to_json(r.mean)}}));
  std::string traj;
  for (const auto& rec : r.rollouts)
    for (std::size_t t = 0; t < rec.steps.size(); ++t)
      traj += world::trajectory_record(rec.episode_id, static_cast<int>(t), rec.trajectory[t + 1],
                                       static_cast<int>(rec.steps[t].action), rec.steps[t].logits) +
              "\n";
  write_file(out / "trajectories.jsonl", traj);
  std::cout << fmt::format("episodes {}  SR {:.4f}  SPL {:.4f}  nDTW {:.4f}  NE {:.3f}\n", r.rows.size(), r.mean.sr,
                           r.mean.spl, r.mean.ndtw, r.mean.ne);
  return 0;
}

// ---- ablate ----------------------------------------------------------------

struct AblateArgs {
  std::string config, axis, out;
  std::optional<std::size_t> iterations;
  std::vector<std::uint64_t> seeds;
};

int cmd_ablate(const AblateArgs& a) {
  cli::Axis axis;
  try {
    axis = cli::axis_from_string(a.axis);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cli::ExperimentConfig c = cli::load_experiment(a.config);
  if (a.iterations) c.train.iterations = *a.iterations;
  if (!a.seeds.empty()) c.seeds = a.seeds;
  if (!a.out.empty()) c.output_dir = a.out;
  c.validate();

  const auto rows = cli::ablation_rows(axis, c.train);
  const auto results = cli::run_ablation(c, axis, cli::worker_limit(),
                                         [](const std::string& msg) { std::cerr << msg << "\n"; });
  std::ostringstream csv, md;
  cli::write_ablation_csv(csv, axis, rows, results);
  cli::write_ablation_markdown(md, axis, rows, results);
  const fs::path out(c.output_dir);
  write_file(out / fmt::format("ablate_{}.csv", cli::to_string(axis)), csv.str());
  write_file(out / fmt::format("ablate_{}.md", cli::to_string(axis)), md.str());
  std::cout << md.str();
  return 0;
}

// ---- plot ------------------------------------------------------------------

int cmd_plot(const std::string& log_path, const std::string& out_path) {
  std::ifstream in(log_path);
  if (!in) throw std::runtime_error("cannot open '" + log_path + "'");
  const std::string svg = cli::loss_curves_svg(cli::read_log(in));
  fs::path out = out_path.empty() ? fs::path(log_path).replace_extension(".svg") : fs::path(out_path);
  write_file(out, svg);
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delan_lab: toy-world navigation experiments with dual-level alignment"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "delan_lab 1.0");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate worlds and episodes");
  g->add_option("config", gen.config, "Experiment config (JSON)")->required();
  g->add_option("out", gen.out, "Output directory")->required();
  g->add_flag("--force", gen.force, "Overwrite previously generated data");
  g->add_option("--split", gen.split, "Episode split, e.g. 80/10/10 (train/val/test)");
  g->add_option("--worlds", gen.worlds, "Override the training pool's world count");
  g->add_option("--per-world", gen.per_world, "Override episodes per world");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train an agent");
  t->add_option("config", tr.config, "Experiment config (JSON); defaults when omitted");
  t->add_flag("--dry-run", tr.dry_run, "Print the effective config and exit");
  t->add_option("--lambda1", tr.lambda1, "RL loss weight");
  t->add_option("--lambda2", tr.lambda2, "IL loss weight");
  t->add_option("--lambda3", tr.lambda3, "Instruction-history alignment weight");
  t->add_option("--lambda4", tr.lambda4, "Landmark-observation alignment weight");
  t->add_option("--lr", tr.lr, "Learning rate");
  t->add_option("--iterations", tr.iterations, "Total iterations");
  t->add_option("--batch", tr.batch, "Episodes per iteration");
  t->add_option("--eval-interval", tr.eval_interval, "Validate every N iterations (0: last only)");
  t->add_option("--seed", tr.seed, "Run seed");
  t->add_option("--out", tr.out, "Output directory (overrides output_dir)");
  t->add_option("--resume", tr.resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
  t->add_option("--checkpoint-every", tr.checkpoint_every, "Also checkpoint every N iterations");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint greedily");
  e->add_option("checkpoint", ev.checkpoint, "Trainer or parameter checkpoint");
  e->add_option("--config", ev.config, "Experiment config (JSON)");
  e->add_option("--data", ev.data, "Directory written by gen; default: the config's validation pool");
  e->add_option("--split", ev.split, "Episode subdirectory under --data")->capture_default_str();
  e->add_flag("--teacher", ev.teacher, "Execute teacher actions instead of the policy");
  e->add_option("--out", ev.out, "Output directory");

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "Run an ablation table");
  a->add_option("config", ab.config, "Experiment config (JSON)")->required();
  a->add_option("--axis", ab.axis, "components | level | separation")->required();
  a->add_option("--iterations", ab.iterations, "Override training iterations");
  a->add_option("--seeds", ab.seeds, "Override the seed list");
  a->add_option("--out", ab.out, "Output directory");

  std::string plot_log, plot_out;
  auto* p = app.add_subcommand("plot", "Plot loss curves from a training log");
  p->add_option("log", plot_log, "log.csv from train")->required();
  p->add_option("--out", plot_out, "SVG path (default: log path with .svg)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*a) return cmd_ablate(ab);
    if (*p) return cmd_plot(plot_log, plot_out);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
