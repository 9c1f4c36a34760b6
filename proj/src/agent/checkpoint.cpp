#include "delan/agent/checkpoint.hpp"

#include <stdexcept>

namespace delan::agent {

using nlohmann::json;

json to_json(const AgentParams& params) {
  json tensors = json::object();
  for (const auto& [name, m] : params.values()) {
    const auto data = m.data();
    tensors[name] = {{"shape", {m.rows(), m.cols()}}, {"values", std::vector<double>(data.begin(), data.end())}};
  }
  return {{"version", kCheckpointVersion},
          {"config", to_json(params.config())},
          {"seed", params.seed()},
          {"params", std::move(tensors)}};
}

AgentParams params_from_json(const json& j) {
  if (j.at("version").get<int>() != kCheckpointVersion) throw std::invalid_argument("checkpoint: unsupported version");
  AgentParams params(model_config_from_json(j.at("config")), j.at("seed").get<std::uint64_t>());
  const json& tensors = j.at("params");
  if (tensors.size() != params.values().size()) throw std::invalid_argument("checkpoint: parameter set mismatch");
  for (auto& [name, m] : params.values()) {
    if (!tensors.contains(name)) throw std::invalid_argument("checkpoint: missing parameter '" + name + "'");
    const json& t = tensors.at(name);
    const auto shape = t.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols())
      throw std::invalid_argument("checkpoint: shape mismatch for '" + name + "'");
    m = Matrix(m.rows(), m.cols(), t.at("values").get<std::vector<double>>());
  }
  return params;
}

}  // namespace delan::agent
