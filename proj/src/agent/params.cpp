#include "delan/agent/params.hpp"

#include <cmath>
#include <stdexcept>

#include "delan/numerics/random.hpp"

namespace delan::agent {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void add_linear(std::vector<ParamShape>& out, const std::string& name, std::size_t in, std::size_t o) {
  out.push_back({name + ".w", in, o, Init::fan_in});
  out.push_back({name + ".b", 1, o, Init::zeros});
}

void add_norm(std::vector<ParamShape>& out, const std::string& name, std::size_t d) {
  out.push_back({name + ".g", 1, d, Init::ones});
  out.push_back({name + ".b", 1, d, Init::zeros});
}

void add_attention(std::vector<ParamShape>& out, const std::string& name, std::size_t d) {
  for (const char* p : {".q", ".k", ".v", ".o"}) add_linear(out, name + p, d, d);
}

void add_encoder_layer(std::vector<ParamShape>& out, const std::string& name, std::size_t d) {
  add_attention(out, name + ".attn", d);
  add_norm(out, name + ".ln1", d);
  add_linear(out, name + ".ff1", d, 2 * d);
  add_linear(out, name + ".ff2", 2 * d, d);
  add_norm(out, name + ".ln2", d);
}

void add_text_encoder(std::vector<ParamShape>& out, const std::string& name, const ModelConfig& c) {
  out.push_back({name + ".tok", c.vocab_size, c.d, Init::embedding});
  out.push_back({name + ".pos", c.max_len, c.d, Init::embedding});
  out.push_back({name + ".seg", 2, c.d, Init::embedding});
  add_norm(out, name + ".ln", c.d);
  for (std::size_t l = 0; l < c.text_layers; ++l) add_encoder_layer(out, name + ".layer" + std::to_string(l), c.d);
}

}  // namespace

std::vector<ParamShape> parameter_layout(const ModelConfig& c) {
  c.validate();
  std::vector<ParamShape> out;
  add_text_encoder(out, "text", c);
  if (c.separation == Separation::independent) add_text_encoder(out, "landmark_text", c);

  out.push_back({"vision.feature", c.feature_count, c.d, Init::embedding});
  add_linear(out, "vision.angle", 2, c.d);
  out.push_back({"vision.stop", 1, c.d, Init::embedding});
  add_norm(out, "vision.ln", c.d);

  out.push_back({"history.begin", 1, c.d, Init::embedding});
  out.push_back({"history.step", c.max_history, c.d, Init::embedding});
  add_linear(out, "history.turn", 2, c.d);
  add_norm(out, "history.ln", c.d);
  for (std::size_t l = 0; l < c.history_layers; ++l) add_encoder_layer(out, "history.layer" + std::to_string(l), c.d);

  out.push_back({"fusion.type", 3, c.d, Init::embedding});
  for (std::size_t l = 0; l < c.fusion_layers; ++l) {
    const std::string n = "fusion.layer" + std::to_string(l);
    add_attention(out, n + ".cross", c.d);
    add_norm(out, n + ".ln0", c.d);
    add_encoder_layer(out, n, c.d);
  }
  add_linear(out, "head.score1", c.d, c.d);
  add_linear(out, "head.score2", c.d, 1);
  add_linear(out, "head.value1", c.d, c.d);
  add_linear(out, "head.value2", c.d, 1);
  return out;
}

AgentParams::AgentParams(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
  for (const ParamShape& s : parameter_layout(cfg_)) {
    Matrix m(s.rows, s.cols);
    std::mt19937_64 rng(mix_seed(seed, fnv1a(s.name)));
    double bound = 0.0;
    switch (s.init) {
      case Init::fan_in: bound = 1.0 / std::sqrt(static_cast<double>(s.rows)); break;
      case Init::embedding: bound = 1.0 / std::sqrt(static_cast<double>(s.cols)); break;
      case Init::zeros: break;
      case Init::ones: m = Matrix(s.rows, s.cols, 1.0); break;
    }
    if (bound > 0.0)
      for (double& v : m.data()) v = bound * (2.0 * unit_uniform(rng) - 1.0);
    values_.emplace(s.name, std::move(m));
  }
}

const Matrix& AgentParams::at(const std::string& name) const {
  const auto it = values_.find(name);
  if (it == values_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

Matrix& AgentParams::at(const std::string& name) {
  return const_cast<Matrix&>(static_cast<const AgentParams&>(*this).at(name));
}

std::size_t AgentParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : values_) n += m.size();
  return n;
}

Graph::Graph(ad::Tape& tape, const AgentParams& params, bool trainable, std::mt19937_64* dropout_rng)
    : tape_(tape), params_(params), trainable_(trainable), rng_(dropout_rng) {}

ad::Var Graph::p(const std::string& name) {
  const auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const Matrix& value = params_.at(name);
  const ad::Var v = trainable_ ? tape_.leaf(value) : tape_.constant(value);
  bound_.emplace(name, v);
  return v;
}

ad::Var Graph::drop(ad::Var x) {
  if (rng_ == nullptr || config().dropout == 0.0) return x;
  return ad::dropout(x, config().dropout, *rng_);
}

Gradients Graph::gradients() const {
  Gradients out;
  for (const auto& [name, m] : params_.values()) {
    const auto it = bound_.find(name);
    out.emplace(name, it == bound_.end() ? Matrix(m.rows(), m.cols()) : tape_.grad_or_zero(it->second));
  }
  return out;
}

}  // namespace delan::agent
