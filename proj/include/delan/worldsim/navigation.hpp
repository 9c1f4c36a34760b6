#pragma once

#include <cstddef>
#include <vector>

#include "delan/worldsim/episode.hpp"
#include "delan/worldsim/world.hpp"

namespace delan::world {

struct View {
  std::vector<int> features;
  double angle = 0.0;
  friend bool operator==(const View&, const View&) = default;
};

/// A navigable neighbour, or STOP when node == kStopNode.
struct Candidate {
  int node = 0;
  double angle = 0.0;
  std::vector<int> features;
  friend bool operator==(const Candidate&, const Candidate&) = default;
};

inline constexpr int kStopNode = -1;

struct Observation {
  std::vector<View> views;
  /// Neighbours in ascending node order, STOP last.
  std::vector<Candidate> candidates;
  std::size_t stop_index() const { return candidates.size() - 1; }
  friend bool operator==(const Observation&, const Observation&) = default;
};

struct HistoryEntry {
  Observation observation;
  std::size_t action = 0;
  /// Relative angle of the chosen candidate; 0 for STOP.
  double turn = 0.0;
};

struct NavState {
  int node = 0;
  double heading = 0.0;
  int steps = 0;
  int max_steps = 15;
  bool done = false;
  bool stopped = false;
  std::vector<HistoryEntry> history;
  /// Visited nodes, starting node first.
  std::vector<int> trajectory;
};

NavState initial_state(const Episode& episode, int max_steps = 15);
NavState initial_state(int node, double heading, int max_steps = 15);

/// View i is centred on relative angle 2*pi*i/k and covers half a sector
/// either side. Objects within the visibility radius of the current node
/// populate the view their relative bearing falls in; empty views carry
/// kEmptyFeature. Candidates carry the objects anchored at the neighbour.
Observation observe(const World& world, const NavState& state);

/// Candidate on a shortest path to `goal`, STOP at the goal. Ties: smallest
/// |relative angle|, then smallest node id.
std::size_t teacher_action(const World& world, const NavState& state, int goal);
std::size_t teacher_action(const World& world, const NavState& state, const Observation& obs, int goal);

/// Applies `action` (index into observe(world, state).candidates).
NavState step(const World& world, NavState state, std::size_t action);
NavState step(const World& world, NavState state, const Observation& obs, std::size_t action);

bool succeeded(const World& world, const NavState& state, int goal, double radius = 0.0);

/// Runs the teacher from the episode start to termination.
NavState teacher_rollout(const World& world, const Episode& episode, int max_steps = 15);

}  // namespace delan::world
