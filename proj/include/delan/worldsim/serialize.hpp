#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "delan/worldsim/episode.hpp"
#include "delan/worldsim/world.hpp"

namespace delan::world {

inline constexpr int kFormatVersion = 1;

nlohmann::json to_json(const WorldSpec& spec);
WorldSpec world_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const World& world);
/// Rejects unknown versions and structurally invalid graphs.
World world_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Episode& episode);
Episode episode_from_json(const nlohmann::json& j);

/// One JSON-lines trajectory record (no trailing newline).
std::string trajectory_record(const std::string& episode_id, int step, int node, int action,
                              const std::vector<double>& logits);

}  // namespace delan::world
