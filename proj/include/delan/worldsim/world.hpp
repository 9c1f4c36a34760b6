#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace delan::world {

/// View feature id for "nothing visible"; landmark class c has id c + 1.
inline constexpr int kEmptyFeature = 0;
inline int feature_of_class(int cls) { return cls + 1; }

/// Wraps to [-pi, pi).
double wrap_angle(double a);

/// Compass bearing of the vector (dx, dy): 0 is +y (north), positive is clockwise.
double bearing(double dx, double dy);

struct WorldSpec {
  int width = 6;
  int height = 6;
  double object_density = 0.3;
  int views = 8;
  double visibility_radius = 1.5;
  /// Probability of removing each grid edge. Disconnected draws are retried.
  double edge_drop = 0.0;
  int landmark_classes = 20;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const WorldSpec&, const WorldSpec&) = default;
};

/// Landmark object sitting beside `node`, offset towards `bearing`.
struct Object {
  int node = 0;
  int cls = 0;
  double bearing = 0.0;
  friend bool operator==(const Object&, const Object&) = default;
};

using Point = std::array<double, 2>;

/// Undirected navigation graph on a unit grid with landmark objects.
/// Immutable once built; all-pairs geodesics are precomputed.
class World {
 public:
  World(WorldSpec spec, std::vector<Point> positions, std::vector<std::array<int, 2>> edges,
        std::vector<Object> objects);

  const WorldSpec& spec() const { return spec_; }
  int views() const { return spec_.views; }
  std::size_t node_count() const { return positions_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  const Point& position(int node) const { return positions_.at(static_cast<std::size_t>(node)); }
  /// Sorted ascending.
  const std::vector<int>& neighbors(int node) const { return adjacency_.at(static_cast<std::size_t>(node)); }
  bool adjacent(int a, int b) const;
  double edge_length(int a, int b) const;

  const std::vector<Object>& objects() const { return objects_; }
  /// Indices into objects(), in placement order.
  const std::vector<int>& objects_at(int node) const { return objects_at_.at(static_cast<std::size_t>(node)); }
  Point object_position(const Object& o) const;

  /// Shortest-path length; +inf when unreachable.
  double geodesic(int a, int b) const;
  bool connected() const;

 private:
  WorldSpec spec_;
  std::vector<Point> positions_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<Object> objects_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<std::vector<int>> objects_at_;
  std::vector<double> dist_;
};

/// Distance of an object from its anchor node.
inline constexpr double kObjectOffset = 0.3;

/// Grid world with Bernoulli(object_density) object placement per node.
/// Draw order per attempt: edge drops (only when edge_drop > 0) in edge
/// order, then for each node u < density, class = rng() % classes,
/// bearing = 2*pi*u'. Attempts failing connectivity or yielding zero
/// objects are redrawn from the continuing stream, at most kWorldAttempts
/// times, then std::runtime_error.
World generate_world(const WorldSpec& spec);

inline constexpr int kWorldAttempts = 64;

}  // namespace delan::world
