#include "td3sched/adam.hpp"

#include <cmath>
#include <string>

#include "td3sched/errors.hpp"

namespace td3sched {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0 && std::isfinite(learning_rate))) throw ValidationError("learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ValidationError("adam beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("adam beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ValidationError("adam epsilon must be > 0");
}

AdamState::AdamState(const Mlp& net, AdamConfig config)
    : config_(config), m_(net.zero_gradients()), v_(net.zero_gradients()) {
  config_.validate();
}

void AdamState::step(Mlp& net, const MlpGradients& grads) {
  if (grads.layers.size() != m_.layers.size() || net.layers().size() != m_.layers.size()) {
    throw DimensionError("adam step: gradient/network layer count mismatch");
  }
  for (std::size_t k = 0; k < grads.layers.size(); ++k) {
    const DenseLayer& g = grads.layers[k];
    if (g.weight.rows() != m_.layers[k].weight.rows() || g.weight.cols() != m_.layers[k].weight.cols() ||
        g.bias.size() != m_.layers[k].bias.size()) {
      throw DimensionError("adam step: gradient shape mismatch in layer " + std::to_string(k));
    }
    if (!g.weight.allFinite()) throw NumericError("non-finite gradient in layer " + std::to_string(k) + " weight");
    if (!g.bias.allFinite()) throw NumericError("non-finite gradient in layer " + std::to_string(k) + " bias");
  }

  ++timestep_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(timestep_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(timestep_));
  const double lr = config_.learning_rate;
  const double eps = config_.epsilon;

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
  };
  auto& layers = net.mutable_layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    update(layers[k].weight, m_.layers[k].weight, v_.layers[k].weight, grads.layers[k].weight);
    update(layers[k].bias, m_.layers[k].bias, v_.layers[k].bias, grads.layers[k].bias);
  }
  net.check_finite("adam step");
}

}  // namespace td3sched
