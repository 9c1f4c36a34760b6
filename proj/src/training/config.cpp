#include "delan/training/config.hpp"

#include <stdexcept>
#include <string>

namespace delan::training {

using nlohmann::json;

namespace {

[[noreturn]] void unknown(const char* where, const std::string& key) {
  throw std::invalid_argument(std::string(where) + ": unknown key '" + key + "'");
}

const char* level_name(alignment::LevelMode m) { return m == alignment::LevelMode::dual ? "dual" : "single"; }

alignment::LevelMode level_from(const std::string& s) {
  if (s == "dual") return alignment::LevelMode::dual;
  if (s == "single") return alignment::LevelMode::single;
  throw std::invalid_argument("unknown alignment level '" + s + "' (dual|single)");
}

}  // namespace

void TrainConfig::validate() const {
  for (double l : {lambda1, lambda2, lambda3, lambda4})
    if (!(l >= 0.0)) throw std::invalid_argument("TrainConfig: loss weights must be non-negative");
  if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be at least 1");
  if (!(lr > 0.0) || !(weight_decay >= 0.0)) throw std::invalid_argument("TrainConfig: bad optimizer settings");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("TrainConfig: gamma must lie in [0, 1]");
  if (max_steps < 1) throw std::invalid_argument("TrainConfig: max_steps must be positive");
  if (!(success_radius >= 0.0)) throw std::invalid_argument("TrainConfig: negative success radius");
  contrast_config().validate();
  model.validate();
}

alignment::ContrastConfig TrainConfig::contrast_config() const {
  alignment::ContrastConfig c = contrast;
  c.lambda_ih = lambda3;
  c.lambda_lo = lambda4;
  return c;
}

json to_json(const alignment::ContrastConfig& c) {
  return {{"tau", c.tau},
          {"IT", c.flags.instruction_trajectory},
          {"WT", c.flags.word_trajectory},
          {"IV", c.flags.instruction_viewpoint},
          {"WV", c.flags.word_viewpoint},
          {"LO", c.flags.landmark_observation},
          {"level", level_name(c.level)},
          {"bank", c.bank_enabled},
          {"bank_capacity", c.bank_capacity},
          {"landmark_bank", c.landmark_bank},
          {"cosine", c.cosine}};
}

alignment::ContrastConfig contrast_config_from_json(const json& j, alignment::ContrastConfig c) {
  for (const auto& [key, v] : j.items()) {
    if (key == "tau") c.tau = v.get<double>();
    else if (key == "IT") c.flags.instruction_trajectory = v.get<bool>();
    else if (key == "WT") c.flags.word_trajectory = v.get<bool>();
    else if (key == "IV") c.flags.instruction_viewpoint = v.get<bool>();
    else if (key == "WV") c.flags.word_viewpoint = v.get<bool>();
    else if (key == "LO") c.flags.landmark_observation = v.get<bool>();
    else if (key == "level") c.level = level_from(v.get<std::string>());
    else if (key == "bank") c.bank_enabled = v.get<bool>();
    else if (key == "bank_capacity") c.bank_capacity = v.get<std::size_t>();
    else if (key == "landmark_bank") c.landmark_bank = v.get<bool>();
    else if (key == "cosine") c.cosine = v.get<bool>();
    else unknown("contrast config", key);
  }
  c.validate();
  return c;
}

json to_json(const TrainConfig& c) {
  return {{"lambda1", c.lambda1},
          {"lambda2", c.lambda2},
          {"lambda3", c.lambda3},
          {"lambda4", c.lambda4},
          {"batch", c.batch},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"iterations", c.iterations},
          {"eval_interval", c.eval_interval},
          {"seed", c.seed},
          {"gamma", c.gamma},
          {"max_steps", c.max_steps},
          {"success_radius", c.success_radius},
          {"alignment", c.alignment},
          {"align_on_sampled", c.align_on_sampled},
          {"contrast", to_json(c.contrast)},
          {"model", agent::to_json(c.model)}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  for (const auto& [key, v] : j.items()) {
    if (key == "lambda1") c.lambda1 = v.get<double>();
    else if (key == "lambda2") c.lambda2 = v.get<double>();
    else if (key == "lambda3") c.lambda3 = v.get<double>();
    else if (key == "lambda4") c.lambda4 = v.get<double>();
    else if (key == "batch") c.batch = v.get<std::size_t>();
    else if (key == "lr") c.lr = v.get<double>();
    else if (key == "weight_decay") c.weight_decay = v.get<double>();
    else if (key == "iterations") c.iterations = v.get<std::size_t>();
    else if (key == "eval_interval") c.eval_interval = v.get<std::size_t>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "gamma") c.gamma = v.get<double>();
    else if (key == "max_steps") c.max_steps = v.get<int>();
    else if (key == "success_radius") c.success_radius = v.get<double>();
    else if (key == "alignment") c.alignment = v.get<bool>();
    else if (key == "align_on_sampled") c.align_on_sampled = v.get<bool>();
    else if (key == "contrast") c.contrast = contrast_config_from_json(v, c.contrast);
    else if (key == "model") c.model = agent::model_config_from_json(v, c.model);
    else unknown("train config", key);
  }
  c.validate();
  return c;
}

}  // namespace delan::training
