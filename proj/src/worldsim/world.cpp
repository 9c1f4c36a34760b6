#include "delan/worldsim/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <stdexcept>

#include "delan/numerics/random.hpp"

namespace delan::world {

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a + std::numbers::pi, two_pi);
  if (r < 0.0) r += two_pi;
  r -= std::numbers::pi;
  return r >= std::numbers::pi ? -std::numbers::pi : r;
}

double bearing(double dx, double dy) { return wrap_angle(std::atan2(dx, dy)); }

void WorldSpec::validate() const {
  if (width < 2 || height < 2) throw std::invalid_argument("WorldSpec: extent must be at least 2x2");
  if (!(object_density > 0.0 && object_density <= 1.0))
    throw std::invalid_argument("WorldSpec: object density must lie in (0, 1]");
  if (views < 1) throw std::invalid_argument("WorldSpec: views must be positive");
  if (!(visibility_radius >= 0.0)) throw std::invalid_argument("WorldSpec: negative visibility radius");
  if (!(edge_drop >= 0.0 && edge_drop < 1.0)) throw std::invalid_argument("WorldSpec: edge_drop must lie in [0, 1)");
  if (landmark_classes < 1) throw std::invalid_argument("WorldSpec: need at least one landmark class");
}

World::World(WorldSpec spec, std::vector<Point> positions, std::vector<std::array<int, 2>> edges,
             std::vector<Object> objects)
    : spec_(spec), positions_(std::move(positions)), edges_(std::move(edges)), objects_(std::move(objects)) {
  const std::size_t n = positions_.size();
  if (n == 0) throw std::invalid_argument("World: no nodes");
  adjacency_.assign(n, {});
  for (const auto& [a, b] : edges_) {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n || a == b)
      throw std::invalid_argument("World: bad edge");
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& adj : adjacency_) {
    std::sort(adj.begin(), adj.end());
    if (std::adjacent_find(adj.begin(), adj.end()) != adj.end()) throw std::invalid_argument("World: duplicate edge");
  }
  objects_at_.assign(n, {});
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    const Object& o = objects_[i];
    if (o.node < 0 || static_cast<std::size_t>(o.node) >= n) throw std::invalid_argument("World: object off graph");
    if (o.cls < 0 || o.cls >= spec_.landmark_classes) throw std::invalid_argument("World: object class out of range");
    objects_at_[o.node].push_back(static_cast<int>(i));
  }

  // Dijkstra from every node; n is small.
  const double inf = std::numeric_limits<double>::infinity();
  dist_.assign(n * n, inf);
  using Item = std::pair<double, int>;
  for (std::size_t s = 0; s < n; ++s) {
    double* d = dist_.data() + s * n;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    d[s] = 0.0;
    pq.emplace(0.0, static_cast<int>(s));
    while (!pq.empty()) {
      const auto [du, u] = pq.top();
      pq.pop();
      if (du > d[u]) continue;
      for (int v : adjacency_[u]) {
        const double nd = du + edge_length(u, v);
        if (nd < d[v]) {
          d[v] = nd;
          pq.emplace(nd, v);
        }
      }
    }
  }
}

bool World::adjacent(int a, int b) const {
  const auto& adj = neighbors(a);
  return std::binary_search(adj.begin(), adj.end(), b);
}

double World::edge_length(int a, int b) const {
  const Point& p = position(a);
  const Point& q = position(b);
  return std::hypot(q[0] - p[0], q[1] - p[1]);
}

Point World::object_position(const Object& o) const {
  const Point& p = position(o.node);
  return {p[0] + kObjectOffset * std::sin(o.bearing), p[1] + kObjectOffset * std::cos(o.bearing)};
}

double World::geodesic(int a, int b) const {
  const std::size_t n = positions_.size();
  if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n)
    throw std::out_of_range("World::geodesic: node out of range");
  return dist_[static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b)];
}

bool World::connected() const {
  for (std::size_t v = 0; v < positions_.size(); ++v)
    if (!std::isfinite(dist_[v])) return false;
  return true;
}

World generate_world(const WorldSpec& spec) {
  spec.validate();
  const int w = spec.width, h = spec.height;
  std::vector<Point> positions;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) positions.push_back({static_cast<double>(x), static_cast<double>(y)});
  std::vector<std::array<int, 2>> grid;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int id = y * w + x;
      if (x + 1 < w) grid.push_back({id, id + 1});
      if (y + 1 < h) grid.push_back({id, id + w});
    }

  std::mt19937_64 rng(spec.seed);
  for (int attempt = 0; attempt < kWorldAttempts; ++attempt) {
    std::vector<std::array<int, 2>> edges;
    if (spec.edge_drop > 0.0) {
      for (const auto& e : grid)
        if (unit_uniform(rng) >= spec.edge_drop) edges.push_back(e);
    } else {
      edges = grid;
    }
    std::vector<Object> objects;
    for (int node = 0; node < w * h; ++node) {
      if (unit_uniform(rng) >= spec.object_density) continue;
      Object o;
      o.node = node;
      o.cls = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(spec.landmark_classes)));
      o.bearing = wrap_angle(2.0 * std::numbers::pi * unit_uniform(rng));
      objects.push_back(o);
    }
    if (objects.empty()) continue;
    World world(spec, positions, std::move(edges), std::move(objects));
    if (world.connected()) return world;
  }
  throw std::runtime_error("generate_world: no connected world with objects after bounded attempts");
}

}  // namespace delan::world
