#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "td3sched/domain.hpp"

namespace td3sched {

enum class Algorithm { td3, ddpg, dqn, basek };

std::string_view to_string(Algorithm algo);
Algorithm algorithm_from_string(std::string_view text);

struct TrainStats {
  bool skipped = true;  // buffer guard not yet satisfied
  bool critic_updated = false;
  bool actor_updated = false;
  bool targets_updated = false;
  double critic_loss_1 = 0.0;
  double critic_loss_2 = 0.0;
  std::optional<double> actor_loss;
};

// Common observe -> act -> learn surface shared by the learned policies and
// the rule-based scheduler.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual Algorithm algorithm() const = 0;

  // `current_alloc` is the allocation in force when `state` was observed.
  virtual ActionVector act(const StateVector& state, const ActionVector& current_alloc, bool explore) = 0;

  // Records one environment step.
  virtual void observe(const Transition& transition) = 0;

  virtual TrainStats train_step() = 0;

  virtual bool learns() const = 0;

  // Policy network persistence. The rule-based scheduler has no parameters
  // and reports has_policy_params() == false.
  virtual bool has_policy_params() const = 0;
  virtual void save_policy(const std::filesystem::path& path) const = 0;
  virtual void load_policy(const std::filesystem::path& path) = 0;
  virtual std::uint64_t policy_checksum() const = 0;
};

// Column-per-sample matrices assembled from sampled transitions. Actions
// are in unit-box coordinates.
struct Batch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::MatrixXd next_states;
  Eigen::VectorXd rewards;
  Eigen::VectorXd dones;

  Eigen::Index size() const { return rewards.size(); }
};

Batch make_batch(const std::vector<Transition>& transitions);

Eigen::MatrixXd to_column(std::span<const double> values);

}  // namespace td3sched
