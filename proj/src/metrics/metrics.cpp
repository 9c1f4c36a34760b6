#include "delan/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace delan::metrics {

namespace {

double theta(const TrajectoryPair& p) { return std::max(p.threshold, 1.0); }

void check_path(const world::World& w, std::span<const int> path, const char* what) {
  if (path.empty()) throw std::invalid_argument(std::string(what) + " path is empty");
  for (int n : path)
    if (n < 0 || static_cast<std::size_t>(n) >= w.node_count())
      throw std::invalid_argument(std::string(what) + " path leaves the graph");
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    if (!w.adjacent(path[i], path[i + 1]))
      throw std::invalid_argument(std::string(what) + " path is not edge-consistent");
}

}  // namespace

void TrajectoryPair::validate() const {
  if (world == nullptr) throw std::invalid_argument("TrajectoryPair: no world");
  check_path(*world, predicted, "predicted");
  check_path(*world, reference, "reference");
  if (threshold < 0.0) throw std::invalid_argument("TrajectoryPair: negative threshold");
}

double path_length(const world::World& w, std::span<const int> path) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) total += w.edge_length(path[i], path[i + 1]);
  return total;
}

BasicMetrics basic_metrics(const TrajectoryPair& p) {
  p.validate();
  const world::World& w = *p.world;
  const int goal = p.reference.back();
  BasicMetrics m;
  m.tl = path_length(w, p.predicted);
  m.ne = w.geodesic(p.predicted.back(), goal);
  m.sr = m.ne <= p.threshold + 1e-9 ? 1.0 : 0.0;
  const double shortest = w.geodesic(p.predicted.front(), goal);
  const double denom = std::max(m.tl, shortest);
  m.spl = denom > 0.0 ? m.sr * shortest / denom : m.sr;
  return m;
}

double dtw_distance(const TrajectoryPair& p) {
  p.validate();
  const std::size_t n = p.reference.size(), m = p.predicted.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp((n + 1) * (m + 1), inf);
  const auto at = [&](std::size_t i, std::size_t j) -> double& { return dp[i * (m + 1) + j]; };
  at(0, 0) = 0.0;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const double cost = p.world->geodesic(p.reference[i - 1], p.predicted[j - 1]);
      at(i, j) = cost + std::min({at(i - 1, j), at(i, j - 1), at(i - 1, j - 1)});
    }
  return at(n, m);
}

double ndtw(const TrajectoryPair& p) {
  return std::exp(-dtw_distance(p) / (static_cast<double>(p.reference.size()) * theta(p)));
}

double sdtw(const TrajectoryPair& p) { return basic_metrics(p).sr * ndtw(p); }

double cls(const TrajectoryPair& p) {
  p.validate();
  const world::World& w = *p.world;
  double coverage = 0.0;
  for (int r : p.reference) {
    double nearest = std::numeric_limits<double>::infinity();
    for (int q : p.predicted) nearest = std::min(nearest, w.geodesic(r, q));
    coverage += std::exp(-nearest / theta(p));
  }
  coverage /= static_cast<double>(p.reference.size());
  const double expected = coverage * path_length(w, p.reference);
  const double actual = path_length(w, p.predicted);
  const double denom = expected + std::abs(expected - actual);
  const double length_score = denom > 0.0 ? expected / denom : 1.0;
  return coverage * length_score;
}

double goal_progress(const TrajectoryPair& p) {
  p.validate();
  const int goal = p.reference.back();
  return p.world->geodesic(p.predicted.front(), goal) - p.world->geodesic(p.predicted.back(), goal);
}

MetricReport evaluate(const TrajectoryPair& p) {
  const BasicMetrics b = basic_metrics(p);
  MetricReport r;
  r.tl = b.tl;
  r.ne = b.ne;
  r.sr = b.sr;
  r.spl = b.spl;
  r.ndtw = ndtw(p);
  r.sdtw = r.sr * r.ndtw;
  r.cls = cls(p);
  r.gp = goal_progress(p);
  r.count = 1;
  return r;
}

MetricReport aggregate(std::span<const MetricReport> rows) {
  MetricReport a;
  if (rows.empty()) return a;
  for (const MetricReport& r : rows) {
    a.tl += r.tl;
    a.ne += r.ne;
    a.sr += r.sr;
    a.spl += r.spl;
    a.ndtw += r.ndtw;
    a.sdtw += r.sdtw;
    a.cls += r.cls;
    a.gp += r.gp;
  }
  const double n = static_cast<double>(rows.size());
  for (double* v : {&a.tl, &a.ne, &a.sr, &a.spl, &a.ndtw, &a.sdtw, &a.cls, &a.gp}) *v /= n;
  a.count = rows.size();
  return a;
}

void write_csv(std::ostream& out, std::span<const std::string> ids, std::span<const MetricReport> rows) {
  if (ids.size() != rows.size()) throw std::invalid_argument("write_csv: ids and rows differ in length");
  out << "episode,TL,NE,SR,SPL,nDTW,sDTW,CLS,GP\n";
  const auto line = [&](const std::string& id, const MetricReport& r) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", id, r.tl, r.ne, r.sr, r.spl, r.ndtw, r.sdtw, r.cls, r.gp);
  };
  for (std::size_t i = 0; i < rows.size(); ++i) line(ids[i], rows[i]);
  line("mean", aggregate(rows));
}

nlohmann::json to_json(const MetricReport& r) {
  return {{"TL", r.tl},     {"NE", r.ne},     {"SR", r.sr},   {"SPL", r.spl}, {"nDTW", r.ndtw},
          {"sDTW", r.sdtw}, {"CLS", r.cls},   {"GP", r.gp},   {"count", r.count}};
}

}  // namespace delan::metrics
