#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "delan/training/trainer.hpp"

namespace delan::cli {

struct PoolSpec {
  std::size_t worlds = 0;
  std::size_t episodes_per_world = 0;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  world::WorldSpec world;
  world::EpisodeSpec episodes;
  PoolSpec train_pool{40, 10, 100};
  PoolSpec val_pool{20, 10, 200};
  /// model and contrast live at the top level of the file; they are copied
  /// into train.model / train.contrast on load.
  training::TrainConfig train;
  std::string output_dir = "runs";
  std::vector<std::uint64_t> seeds{0};

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Missing keys keep defaults; unknown keys throw std::invalid_argument.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::filesystem::path& file);

training::EnvPool make_train_pool(const ExperimentConfig& c);
training::EnvPool make_val_pool(const ExperimentConfig& c);

/// Parses "a/b/c" into fractions summing to 1.
std::vector<double> parse_split(const std::string& text);
/// Largest-remainder apportionment of n items over the fractions.
std::vector<std::size_t> split_counts(std::size_t n, const std::vector<double>& fractions);

enum class Axis { components, level, separation };
Axis axis_from_string(const std::string& s);
const char* to_string(Axis a);

struct AblationRow {
  std::string label;
  training::TrainConfig train;
};

/// The row set of one ablation table, derived from a base config.
std::vector<AblationRow> ablation_rows(Axis axis, const training::TrainConfig& base);

struct RowResult {
  std::string label;
  std::vector<metrics::MetricReport> per_seed;
  metrics::MetricReport mean;
  metrics::MetricReport stddev;
};

/// Trains every row for every seed and evaluates greedily on the val pool.
/// Jobs run on up to `workers` threads; results are assembled in row order.
std::vector<RowResult> run_ablation(const ExperimentConfig& c, Axis axis, std::size_t workers,
                                    const std::function<void(const std::string&)>& progress = {});

void write_ablation_csv(std::ostream& out, Axis axis, const std::vector<AblationRow>& rows,
                        const std::vector<RowResult>& results);
void write_ablation_markdown(std::ostream& out, Axis axis, const std::vector<AblationRow>& rows,
                             const std::vector<RowResult>& results);

/// DELAN_LAB_THREADS if set and positive, else hardware concurrency; at least 1.
std::size_t worker_limit();

/// Calls job(i) for i in [0, count) on up to `workers` threads. The first
/// exception stops further jobs and is rethrown.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job);

}  // namespace delan::cli
