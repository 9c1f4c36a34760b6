#include "delan/agent/config.hpp"

#include <stdexcept>

#include "delan/worldsim/vocabulary.hpp"

namespace delan::agent {

const char* to_string(Separation s) {
  switch (s) {
    case Separation::mutual: return "mutual";
    case Separation::separate: return "separate";
    case Separation::independent: return "independent";
  }
  return "?";
}

Separation separation_from_string(const std::string& s) {
  if (s == "mutual") return Separation::mutual;
  if (s == "separate") return Separation::separate;
  if (s == "independent") return Separation::independent;
  throw std::invalid_argument("unknown separation mode '" + s + "' (mutual|separate|independent)");
}

void ModelConfig::validate() const {
  if (d == 0 || heads == 0 || d % heads != 0) throw std::invalid_argument("ModelConfig: d must be divisible by heads");
  if (vocab_size < 2) throw std::invalid_argument("ModelConfig: vocabulary too small");
  if (feature_count < 1) throw std::invalid_argument("ModelConfig: feature_count must be positive");
  if (max_len < 2 || max_history < 2) throw std::invalid_argument("ModelConfig: max_len/max_history too small");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("ModelConfig: dropout must lie in [0, 1)");
}

ModelConfig default_model_config() {
  ModelConfig c;
  c.vocab_size = world::Vocabulary::standard().size();
  c.feature_count = world::Vocabulary::standard().landmark_classes() + 1;
  return c;
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"d", c.d},
          {"text_layers", c.text_layers},
          {"history_layers", c.history_layers},
          {"fusion_layers", c.fusion_layers},
          {"heads", c.heads},
          {"vocab_size", c.vocab_size},
          {"feature_count", c.feature_count},
          {"max_len", c.max_len},
          {"max_history", c.max_history},
          {"dropout", c.dropout},
          {"separation", to_string(c.separation)},
          {"cls_without_landmarks", c.cls_without_landmarks}};
}

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig c) {
  for (const auto& [key, v] : j.items()) {
    if (key == "d") c.d = v.get<std::size_t>();
    else if (key == "text_layers") c.text_layers = v.get<std::size_t>();
    else if (key == "history_layers") c.history_layers = v.get<std::size_t>();
    else if (key == "fusion_layers") c.fusion_layers = v.get<std::size_t>();
    else if (key == "heads") c.heads = v.get<std::size_t>();
    else if (key == "vocab_size") c.vocab_size = v.get<std::size_t>();
    else if (key == "feature_count") c.feature_count = v.get<std::size_t>();
    else if (key == "max_len") c.max_len = v.get<std::size_t>();
    else if (key == "max_history") c.max_history = v.get<std::size_t>();
    else if (key == "dropout") c.dropout = v.get<double>();
    else if (key == "separation") c.separation = separation_from_string(v.get<std::string>());
    else if (key == "cls_without_landmarks") c.cls_without_landmarks = v.get<bool>();
    else throw std::invalid_argument("model config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

}  // namespace delan::agent
