#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "delan/agent/config.hpp"
#include "delan/numerics/matrix.hpp"
#include "delan/numerics/tape.hpp"

namespace delan::agent {

enum class Init { fan_in, embedding, zeros, ones };

struct ParamShape {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  Init init = Init::fan_in;
};

/// Every learnable tensor implied by a config, in a fixed order.
std::vector<ParamShape> parameter_layout(const ModelConfig& cfg);

/// Learnable weights keyed by module path. Each tensor draws from its own
/// stream seeded by (seed, name), so adding modules leaves others intact.
class AgentParams {
 public:
  AgentParams(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  const std::map<std::string, Matrix>& values() const { return values_; }
  std::map<std::string, Matrix>& values() { return values_; }
  const Matrix& at(const std::string& name) const;
  Matrix& at(const std::string& name);
  std::size_t scalar_count() const;

 private:
  ModelConfig cfg_;
  std::uint64_t seed_;
  std::map<std::string, Matrix> values_;
};

using Gradients = std::map<std::string, Matrix>;

/// Binds parameters onto a tape on first use. Trainable graphs bind leaves,
/// inference graphs bind constants.
class Graph {
 public:
  Graph(ad::Tape& tape, const AgentParams& params, bool trainable = false, std::mt19937_64* dropout_rng = nullptr);

  ad::Tape& tape() { return tape_; }
  const ModelConfig& config() const { return params_.config(); }
  ad::Var p(const std::string& name);
  /// Dropout when a generator was supplied and the config rate is positive.
  ad::Var drop(ad::Var x);
  ad::Var constant(Matrix m) { return tape_.constant(std::move(m)); }

  /// Gradients of every bound leaf; zeros for unbound parameters.
  Gradients gradients() const;

 private:
  ad::Tape& tape_;
  const AgentParams& params_;
  bool trainable_;
  std::mt19937_64* rng_;
  std::map<std::string, ad::Var> bound_;
};

}  // namespace delan::agent
