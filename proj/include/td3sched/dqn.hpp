#pragma once

#include <cstdint>
#include <vector>

#include "td3sched/adam.hpp"
#include "td3sched/agent.hpp"
#include "td3sched/mlp.hpp"
#include "td3sched/random.hpp"
#include "td3sched/replay_buffer.hpp"

namespace td3sched {

struct DqnHyper {
  double gamma = 0.99;
  int levels = 10;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  long epsilon_decay_steps = 500;
  long target_sync_interval = 100;  // train steps between hard syncs
  std::size_t batch_size = 64;
  std::size_t buffer_capacity = kDefaultReplayCapacity;
  int hidden_width = 256;
  AdamConfig opt;

  void validate() const;
};

// Allocation of grid level k in [0, levels).
double cpu_for_level(int k, int levels = 10);
double mem_for_level(int k, int levels = 10);
int level_for_cpu(double cpu, int levels = 10);
int level_for_mem(double mem, int levels = 10);

// Linear decay from start to end over decay_steps, then flat.
double dqn_epsilon(long t, const DqnHyper& hyper);

// Factored discrete-control baseline: one Q-network with 2N heads of
// `levels` outputs each, one head per allocation dimension.
class DqnAgent final : public Agent {
 public:
  DqnAgent(std::size_t n_services, DqnHyper hyper, std::uint64_t seed);

  Algorithm algorithm() const override { return Algorithm::dqn; }
  ActionVector act(const StateVector& state, const ActionVector& current_alloc, bool explore) override;
  void observe(const Transition& transition) override;
  TrainStats train_step() override;
  bool learns() const override { return true; }
  bool has_policy_params() const override { return true; }
  void save_policy(const std::filesystem::path& path) const override;
  void load_policy(const std::filesystem::path& path) override;
  std::uint64_t policy_checksum() const override;

  // Chosen level per head (cpu heads first, then mem heads).
  std::vector<int> select_levels(const StateVector& state, double epsilon);
  ActionVector action_for_levels(const std::vector<int>& levels) const;

  TrainStats train_on(const Batch& batch);

  double current_epsilon() const { return dqn_epsilon(global_step_, hyper_); }
  long global_step() const noexcept { return global_step_; }
  long train_count() const noexcept { return train_count_; }
  long target_sync_count() const noexcept { return sync_count_; }
  const Mlp& qnet() const noexcept { return qnet_; }
  const Mlp& target_qnet() const noexcept { return target_qnet_; }
  const DqnHyper& hyper() const noexcept { return hyper_; }
  std::size_t heads() const noexcept { return 2 * n_services_; }

 private:
  std::size_t n_services_;
  DqnHyper hyper_;
  Rng init_rng_;
  Rng explore_rng_;
  Rng sample_rng_;
  Mlp qnet_;
  Mlp target_qnet_;
  AdamState opt_;
  ReplayBuffer buffer_;
  long global_step_ = 0;
  long train_count_ = 0;
  long sync_count_ = 0;
};

}  // namespace td3sched
