#pragma once

#include <memory>
#include <string_view>

#include "td3sched/actor_critic.hpp"
#include "td3sched/agent.hpp"
#include "td3sched/dqn.hpp"

namespace td3sched {

enum class BaseKMode { static_requests, threshold };

std::string_view to_string(BaseKMode mode);
BaseKMode basek_mode_from_string(std::string_view text);

struct BaseKConfig {
  BaseKMode mode = BaseKMode::static_requests;
  double scale_up_above = 0.8;
  double scale_down_below = 0.3;
  double step_fraction = 0.2;

  void validate() const;
};

// Rule-based scheduler: the services' initial requests every step, or a
// +-20% utilization threshold rule. Never learns.
class BaseKScheduler final : public Agent {
 public:
  BaseKScheduler(ActionVector initial_requests, BaseKConfig config = {});

  Algorithm algorithm() const override { return Algorithm::basek; }
  ActionVector act(const StateVector& state, const ActionVector& current_alloc, bool explore) override;
  void observe(const Transition&) override {}
  TrainStats train_step() override { return TrainStats{}; }
  bool learns() const override { return false; }
  bool has_policy_params() const override { return false; }
  void save_policy(const std::filesystem::path&) const override {}
  void load_policy(const std::filesystem::path&) override {}
  std::uint64_t policy_checksum() const override { return 0; }

  ActionVector decide(const StateVector& state, const ActionVector& current_alloc) const;

  const BaseKConfig& config() const noexcept { return config_; }

 private:
  ActionVector initial_;
  BaseKConfig config_;
};

struct AgentConfig {
  Td3Hyper td3;  // also drives DDPG
  DqnHyper dqn;
  BaseKConfig basek;
};

std::unique_ptr<Agent> make_agent(Algorithm algo, std::size_t n_services, const AgentConfig& config,
                                  const ActionVector& initial_requests, std::uint64_t seed);

}  // namespace td3sched
