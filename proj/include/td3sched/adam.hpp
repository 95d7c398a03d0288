#pragma once

#include <vector>

#include "td3sched/mlp.hpp"

namespace td3sched {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// Adam moments for one network.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const Mlp& net, AdamConfig config = {});

  // One bias-corrected descent step on `net` along `grads`.
  void step(Mlp& net, const MlpGradients& grads);

  long timestep() const noexcept { return timestep_; }
  const AdamConfig& config() const noexcept { return config_; }
  const MlpGradients& first_moment() const noexcept { return m_; }
  const MlpGradients& second_moment() const noexcept { return v_; }

 private:
  AdamConfig config_;
  MlpGradients m_;
  MlpGradients v_;
  long timestep_ = 0;
};

}  // namespace td3sched
