#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "delan/worldsim/world.hpp"

namespace delan::world {

struct Episode {
  std::string id;
  std::vector<int> instruction;
  /// Landmark noun ids in instruction order, duplicates kept.
  std::vector<int> landmarks;
  std::vector<int> path;
  int goal = 0;
  double start_heading = 0.0;
  std::uint64_t seed = 0;
  friend bool operator==(const Episode&, const Episode&) = default;
};

struct EpisodeSpec {
  int min_hops = 3;
  int max_hops = 8;
};

/// Picks a start node and an object-bearing goal at geodesic distance in
/// [min_hops, max_hops], a start heading from {0, pi/2, pi, 3pi/2}, and
/// follows the teacher policy. Throws std::runtime_error when no such
/// goal exists within a bounded number of start draws.
Episode generate_episode(const World& world, std::uint64_t seed, const EpisodeSpec& spec = {});

/// Renders the instruction and landmark truth for a fixed path.
void render_instruction(const World& world, Episode& episode, std::uint64_t seed);

/// Direction word for a relative heading change.
const char* direction_word(double relative_angle);

}  // namespace delan::world
