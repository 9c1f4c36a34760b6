#include "delan/training/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace delan::training {

void AdamW::step(agent::AgentParams& params, const agent::Gradients& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (auto& [name, p] : params.values()) {
    const auto it = grads.find(name);
    if (it == grads.end()) throw std::invalid_argument("AdamW: missing gradient for '" + name + "'");
    const Matrix& g = it->second;
    if (!g.same_shape(p)) throw std::invalid_argument("AdamW: gradient shape mismatch for '" + name + "'");
    Matrix& m = m_.try_emplace(name, p.rows(), p.cols()).first->second;
    Matrix& v = v_.try_emplace(name, p.rows(), p.cols()).first->second;
    auto pd = p.data();
    const auto gd = g.data();
    auto md = m.data();
    auto vd = v.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = b1_ * md[i] + (1.0 - b1_) * gd[i];
      vd[i] = b2_ * vd[i] + (1.0 - b2_) * gd[i] * gd[i];
      const double update = (md[i] / c1) / (std::sqrt(vd[i] / c2) + eps_);
      pd[i] -= lr_ * (update + wd_ * pd[i]);
    }
  }
}

nlohmann::json AdamW::state() const {
  const auto dump = [](const agent::Gradients& g) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, m] : g) j[name] = std::vector<double>(m.data().begin(), m.data().end());
    return j;
  };
  return {{"t", t_}, {"m", dump(m_)}, {"v", dump(v_)}};
}

void AdamW::load_state(const nlohmann::json& j, const agent::AgentParams& params) {
  t_ = j.at("t").get<std::size_t>();
  m_.clear();
  v_.clear();
  for (const auto& [dst, key] : {std::pair<agent::Gradients*, const char*>{&m_, "m"}, {&v_, "v"}}) {
    for (const auto& [name, values] : j.at(key).items()) {
      const Matrix& p = params.at(name);
      dst->emplace(name, Matrix(p.rows(), p.cols(), values.get<std::vector<double>>()));
    }
  }
}

}  // namespace delan::training
