#pragma once

#include <cstddef>
#include <string>

#include "json.hpp"

namespace delan::agent {

enum class Separation { mutual, separate, independent };

const char* to_string(Separation s);
Separation separation_from_string(const std::string& s);

struct ModelConfig {
  std::size_t d = 64;
  std::size_t text_layers = 2;
  std::size_t history_layers = 1;
  std::size_t fusion_layers = 2;
  std::size_t heads = 4;
  std::size_t vocab_size = 0;
  /// View feature ids: 0 = empty, class c -> c + 1.
  std::size_t feature_count = 21;
  std::size_t max_len = 64;
  /// Rows of the step-index embedding (history steps plus the begin slot).
  std::size_t max_history = 16;
  double dropout = 0.1;
  Separation separation = Separation::mutual;
  /// Recompute x_cls from a pass without landmark tokens (mutual mode only).
  bool cls_without_landmarks = false;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Vocabulary and feature sizes taken from the standard toy world.
ModelConfig default_model_config();

nlohmann::json to_json(const ModelConfig& c);
/// Missing keys keep defaults; unknown keys throw.
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = default_model_config());

}  // namespace delan::agent
