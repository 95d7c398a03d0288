#pragma once

#include <cstdint>
#include <vector>

#include "td3sched/adam.hpp"
#include "td3sched/agent.hpp"
#include "td3sched/mlp.hpp"
#include "td3sched/random.hpp"
#include "td3sched/replay_buffer.hpp"

namespace td3sched {

struct Td3Hyper {
  double gamma = 0.99;
  double tau = 0.005;
  int policy_freq = 2;
  double smoothing_sigma = 0.2;
  double smoothing_clip = 0.5;
  double sigma_init = 0.3;
  double tau_decay = 1000.0;
  std::size_t batch_size = 64;
  std::size_t warmup_transitions = 200;
  std::size_t buffer_capacity = kDefaultReplayCapacity;
  int hidden_width = 256;
  AdamConfig actor_opt;
  AdamConfig critic_opt;

  void validate() const;
};

// sigma_init * exp(-t / tau_decay)
double exploration_sigma(long t, double sigma_init, double tau_decay);

double clip_noise(double raw, double clip);

// r + gamma * min(q1, q2) * (1 - done)
double td_target(double reward, double gamma, double q1, double q2, bool done);

// Debug recorder for the bootstrapped targets of each train step.
struct TargetProbe {
  std::vector<double> smoothing_noise;  // every clipped draw added
  std::vector<double> q1;
  std::vector<double> q2;  // equals q1 for a single critic
  std::vector<double> reward;
  std::vector<double> done;
  std::vector<double> target;

  void clear();
};

// Deterministic actor with one or two critics. TD3 uses twin critics,
// target policy smoothing and delayed actor updates; DDPG disables all three.
class ActorCriticAgent final : public Agent {
 public:
  // state_dim = 4N, action_dim = 2N.
  ActorCriticAgent(Algorithm kind, std::size_t n_services, Td3Hyper hyper, std::uint64_t seed);

  Algorithm algorithm() const override { return kind_; }
  ActionVector act(const StateVector& state, const ActionVector& current_alloc, bool explore) override;
  void observe(const Transition& transition) override;
  TrainStats train_step() override;
  bool learns() const override { return true; }
  bool has_policy_params() const override { return true; }
  void save_policy(const std::filesystem::path& path) const override;
  void load_policy(const std::filesystem::path& path) override;
  std::uint64_t policy_checksum() const override;

  // Unit-box action for `state`, with exploration when requested.
  std::vector<double> select_unit_action(const StateVector& state, bool explore);

  // Target actor output plus clipped noise (when enabled), clamped to [-1, 1].
  Eigen::MatrixXd smoothed_target_action(const Eigen::MatrixXd& next_states);

  // Bootstrapped targets for a batch.
  Eigen::VectorXd td_targets(const Batch& batch);

  TrainStats train_on(const Batch& batch);

  double current_exploration_sigma() const;

  int critic_count() const noexcept { return twin_ ? 2 : 1; }
  bool smoothing_enabled() const noexcept { return smoothing_; }
  int policy_freq() const noexcept { return policy_freq_; }
  const Td3Hyper& hyper() const noexcept { return hyper_; }

  long global_step() const noexcept { return global_step_; }
  long critic_update_count() const noexcept { return critic_updates_; }
  long actor_update_count() const noexcept { return actor_updates_; }
  long target_update_count() const noexcept { return target_updates_; }

  const Mlp& actor() const noexcept { return actor_; }
  const Mlp& critic1() const noexcept { return critic1_; }
  const Mlp& critic2() const noexcept { return critic2_; }
  const Mlp& target_actor() const noexcept { return target_actor_; }
  const Mlp& target_critic1() const noexcept { return target_critic1_; }
  const Mlp& target_critic2() const noexcept { return target_critic2_; }
  Mlp& mutable_actor() noexcept { return actor_; }
  const ReplayBuffer& buffer() const noexcept { return buffer_; }
  ReplayBuffer& mutable_buffer() noexcept { return buffer_; }

  // Q-values of critic 1 (and 2) for a batch of (state, unit action).
  Eigen::VectorXd q1_values(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const;
  Eigen::VectorXd q2_values(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const;

  void set_probe(TargetProbe* probe) noexcept { probe_ = probe; }

 private:
  Algorithm kind_;
  std::size_t n_services_;
  Td3Hyper hyper_;
  bool twin_;
  bool smoothing_;
  int policy_freq_;

  Rng init_rng_;
  Rng explore_rng_;
  Rng sample_rng_;
  Rng target_noise_rng_;

  Mlp actor_;
  Mlp critic1_;
  Mlp critic2_;
  Mlp target_actor_;
  Mlp target_critic1_;
  Mlp target_critic2_;
  AdamState actor_opt_;
  AdamState critic1_opt_;
  AdamState critic2_opt_;
  ReplayBuffer buffer_;

  long global_step_ = 0;
  long critic_updates_ = 0;
  long actor_updates_ = 0;
  long target_updates_ = 0;
  TargetProbe* probe_ = nullptr;
};

// Shared architecture helpers: two hidden ReLU layers of `width` units.
Mlp make_actor(std::size_t n_services, int width, Rng& rng);
Mlp make_critic(std::size_t n_services, int width, Rng& rng);

}  // namespace td3sched
