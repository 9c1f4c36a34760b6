#pragma once

#include "json.hpp"

#include "delan/agent/params.hpp"

namespace delan::agent {

inline constexpr int kCheckpointVersion = 1;

/// {version, config, seed, params: {name: {shape, values}}}.
nlohmann::json to_json(const AgentParams& params);
/// Validates version, names and shapes against the embedded config.
AgentParams params_from_json(const nlohmann::json& j);

}  // namespace delan::agent
