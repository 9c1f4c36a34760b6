#include "delan/worldsim/navigation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace delan::world {

namespace {

constexpr double kGeoTolerance = 1e-9;

std::vector<int> sorted_unique(std::vector<int> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.empty()) ids.push_back(kEmptyFeature);
  return ids;
}

double edge_bearing(const World& world, int from, int to) {
  const Point& p = world.position(from);
  const Point& q = world.position(to);
  return bearing(q[0] - p[0], q[1] - p[1]);
}

}  // namespace

NavState initial_state(int node, double heading, int max_steps) {
  if (max_steps < 1) throw std::invalid_argument("initial_state: max_steps must be positive");
  NavState s;
  s.node = node;
  s.heading = wrap_angle(heading);
  s.max_steps = max_steps;
  s.trajectory.push_back(node);
  return s;
}

NavState initial_state(const Episode& episode, int max_steps) {
  if (episode.path.empty()) throw std::invalid_argument("initial_state: empty path");
  return initial_state(episode.path.front(), episode.start_heading, max_steps);
}

Observation observe(const World& world, const NavState& state) {
  const int k = world.views();
  const double sector = 2.0 * std::numbers::pi / k;
  const Point& here = world.position(state.node);

  std::vector<std::vector<int>> slots(static_cast<std::size_t>(k));
  for (const Object& o : world.objects()) {
    const Point p = world.object_position(o);
    const double dx = p[0] - here[0], dy = p[1] - here[1];
    if (std::hypot(dx, dy) > world.spec().visibility_radius) continue;
    double rel = wrap_angle(bearing(dx, dy) - state.heading) + 0.5 * sector;
    if (rel < 0.0) rel += 2.0 * std::numbers::pi;
    const int slot = static_cast<int>(std::floor(rel / sector)) % k;
    slots[static_cast<std::size_t>(slot)].push_back(feature_of_class(o.cls));
  }

  Observation obs;
  for (int i = 0; i < k; ++i)
    obs.views.push_back({sorted_unique(std::move(slots[static_cast<std::size_t>(i)])), wrap_angle(i * sector)});

  for (int nb : world.neighbors(state.node)) {
    std::vector<int> features;
    for (int idx : world.objects_at(nb)) features.push_back(feature_of_class(world.objects()[idx].cls));
    obs.candidates.push_back(
        {nb, wrap_angle(edge_bearing(world, state.node, nb) - state.heading), sorted_unique(std::move(features))});
  }
  obs.candidates.push_back({kStopNode, 0.0, {kEmptyFeature}});
  return obs;
}

std::size_t teacher_action(const World& world, const NavState& state, const Observation& obs, int goal) {
  const double remaining = world.geodesic(state.node, goal);
  if (!std::isfinite(remaining)) throw std::runtime_error("teacher_action: goal unreachable");
  if (remaining <= kGeoTolerance) return obs.stop_index();
  std::size_t best = obs.stop_index();
  for (std::size_t i = 0; i < obs.stop_index(); ++i) {
    const Candidate& c = obs.candidates[i];
    const double via = world.edge_length(state.node, c.node) + world.geodesic(c.node, goal);
    if (std::abs(via - remaining) > kGeoTolerance) continue;
    if (best == obs.stop_index()) {
      best = i;
      continue;
    }
    const Candidate& b = obs.candidates[best];
    const double ca = std::abs(c.angle), ba = std::abs(b.angle);
    if (ca < ba - kGeoTolerance || (std::abs(ca - ba) <= kGeoTolerance && c.node < b.node)) best = i;
  }
  if (best == obs.stop_index()) throw std::logic_error("teacher_action: no shortest-path neighbour");
  return best;
}

std::size_t teacher_action(const World& world, const NavState& state, int goal) {
  return teacher_action(world, state, observe(world, state), goal);
}

NavState step(const World& world, NavState state, const Observation& obs, std::size_t action) {
  if (state.done) throw std::logic_error("step: episode already terminated");
  if (action >= obs.candidates.size()) throw std::out_of_range("step: invalid action index");
  const Candidate& c = obs.candidates[action];
  const bool stop = action == obs.stop_index();
  state.history.push_back({obs, action, stop ? 0.0 : c.angle});
  ++state.steps;
  if (stop) {
    state.done = state.stopped = true;
    return state;
  }
  state.heading = edge_bearing(world, state.node, c.node);
  state.node = c.node;
  state.trajectory.push_back(c.node);
  if (state.steps >= state.max_steps) state.done = true;
  return state;
}

NavState step(const World& world, NavState state, std::size_t action) {
  const Observation obs = observe(world, state);
  return step(world, std::move(state), obs, action);
}

bool succeeded(const World& world, const NavState& state, int goal, double radius) {
  return world.geodesic(state.node, goal) <= radius + kGeoTolerance;
}

NavState teacher_rollout(const World& world, const Episode& episode, int max_steps) {
  NavState s = initial_state(episode, max_steps);
  while (!s.done) {
    const Observation obs = observe(world, s);
    const std::size_t a = teacher_action(world, s, obs, episode.goal);
    s = step(world, std::move(s), obs, a);
  }
  return s;
}

}  // namespace delan::world
