#pragma once

#include <cstddef>

#include "json.hpp"

#include "delan/agent/params.hpp"

namespace delan::training {

/// Adam with decoupled weight decay.
class AdamW {
 public:
  AdamW(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(agent::AgentParams& params, const agent::Gradients& grads);
  std::size_t steps() const { return t_; }

  nlohmann::json state() const;
  void load_state(const nlohmann::json& j, const agent::AgentParams& params);

 private:
  double lr_, wd_, b1_, b2_, eps_;
  std::size_t t_ = 0;
  agent::Gradients m_, v_;
};

}  // namespace delan::training
