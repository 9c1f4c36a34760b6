#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "delan/worldsim/world.hpp"

namespace delan::metrics {

/// Predicted and reference node sequences on one world. The goal is the
/// last reference node; all distances are geodesic.
struct TrajectoryPair {
  std::vector<int> predicted;
  std::vector<int> reference;
  const world::World* world = nullptr;
  double threshold = 0.0;

  /// Throws std::invalid_argument on empty or edge-inconsistent paths.
  void validate() const;
};

struct BasicMetrics {
  double tl = 0.0;
  double ne = 0.0;
  double sr = 0.0;
  double spl = 0.0;
};

BasicMetrics basic_metrics(const TrajectoryPair& pair);
/// Summed geodesic cost of the optimal monotone alignment.
double dtw_distance(const TrajectoryPair& pair);
/// exp(-DTW / (|R| * theta)), theta = max(threshold, 1).
double ndtw(const TrajectoryPair& pair);
double sdtw(const TrajectoryPair& pair);
/// Path coverage times length score.
double cls(const TrajectoryPair& pair);
/// geodesic(start, goal) - geodesic(final, goal).
double goal_progress(const TrajectoryPair& pair);
/// Length of a node sequence along its edges.
double path_length(const world::World& world, std::span<const int> path);

struct MetricReport {
  double tl = 0.0, ne = 0.0, sr = 0.0, spl = 0.0, ndtw = 0.0, sdtw = 0.0, cls = 0.0, gp = 0.0;
  std::size_t count = 0;
};

MetricReport evaluate(const TrajectoryPair& pair);
/// Mean over episodes; count is the number of episodes.
MetricReport aggregate(std::span<const MetricReport> rows);

/// Per-episode rows followed by a "mean" row.
void write_csv(std::ostream& out, std::span<const std::string> ids, std::span<const MetricReport> rows);
nlohmann::json to_json(const MetricReport& r);

}  // namespace delan::metrics
