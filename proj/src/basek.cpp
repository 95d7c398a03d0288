#include "td3sched/basek.hpp"

#include <string>

#include "td3sched/errors.hpp"

namespace td3sched {

std::string_view to_string(BaseKMode mode) {
  return mode == BaseKMode::static_requests ? "static" : "threshold";
}

BaseKMode basek_mode_from_string(std::string_view text) {
  if (text == "static") return BaseKMode::static_requests;
  if (text == "threshold") return BaseKMode::threshold;
  throw ValidationError("unknown basek mode '" + std::string(text) + "' (expected static|threshold)");
}

void BaseKConfig::validate() const {
  if (!(scale_down_below >= 0.0 && scale_down_below < scale_up_above && scale_up_above <= 1.0)) {
    throw ValidationError("basek thresholds must satisfy 0 <= down < up <= 1");
  }
  if (!(step_fraction > 0.0 && step_fraction < 1.0)) throw ValidationError("basek step_fraction must lie in (0, 1)");
}

BaseKScheduler::BaseKScheduler(ActionVector initial_requests, BaseKConfig config)
    : initial_(std::move(initial_requests)), config_(config) {
  config_.validate();
}

ActionVector BaseKScheduler::decide(const StateVector& state, const ActionVector& current_alloc) const {
  if (config_.mode == BaseKMode::static_requests) return initial_;
  const std::size_t n = current_alloc.services();
  if (state.services() != n) throw DimensionError("basek: state and allocation disagree on service count");
  auto adjust = [&](double alloc, double util) {
    if (util > config_.scale_up_above) return alloc * (1.0 + config_.step_fraction);
    if (util < config_.scale_down_below) return alloc * (1.0 - config_.step_fraction);
    return alloc;
  };
  std::vector<double> cpu(n);
  std::vector<double> mem(n);
  for (std::size_t i = 0; i < n; ++i) {
    cpu[i] = adjust(current_alloc.cpu(i), state.cpu_util(i));
    mem[i] = adjust(current_alloc.mem(i), state.mem_util(i));
  }
  return ActionVector(std::move(cpu), std::move(mem));
}

ActionVector BaseKScheduler::act(const StateVector& state, const ActionVector& current_alloc, bool) {
  return decide(state, current_alloc);
}

std::unique_ptr<Agent> make_agent(Algorithm algo, std::size_t n_services, const AgentConfig& config,
                                  const ActionVector& initial_requests, std::uint64_t seed) {
  switch (algo) {
    case Algorithm::td3:
    case Algorithm::ddpg:
      return std::make_unique<ActorCriticAgent>(algo, n_services, config.td3, seed);
    case Algorithm::dqn:
      return std::make_unique<DqnAgent>(n_services, config.dqn, seed);
    case Algorithm::basek:
      return std::make_unique<BaseKScheduler>(initial_requests, config.basek);
  }
  throw ValidationError("unknown algorithm");
}

}  // namespace td3sched
