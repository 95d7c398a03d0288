#include "td3sched/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "td3sched/errors.hpp"

namespace td3sched {

void DqnHyper::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("dqn gamma must lie in [0, 1]");
  if (levels < 2) throw ValidationError("dqn needs at least 2 levels");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
    throw ValidationError("dqn epsilon bounds must lie in [0, 1]");
  }
  if (epsilon_decay_steps < 1) throw ValidationError("dqn epsilon_decay_steps must be >= 1");
  if (target_sync_interval < 1) throw ValidationError("dqn target_sync_interval must be >= 1");
  if (batch_size == 0) throw ValidationError("dqn batch_size must be >= 1");
  if (buffer_capacity <= batch_size) throw ValidationError("dqn buffer_capacity must exceed batch_size");
  if (hidden_width < 1) throw ValidationError("dqn hidden_width must be >= 1");
  opt.validate();
}

double cpu_for_level(int k, int levels) {
  return kCpuMin + static_cast<double>(k) * (kCpuMax - kCpuMin) / static_cast<double>(levels - 1);
}

double mem_for_level(int k, int levels) {
  return kMemMin + static_cast<double>(k) * (kMemMax - kMemMin) / static_cast<double>(levels - 1);
}

int level_for_cpu(double cpu, int levels) {
  const double k = (cpu - kCpuMin) / (kCpuMax - kCpuMin) * static_cast<double>(levels - 1);
  return std::clamp(static_cast<int>(std::lround(k)), 0, levels - 1);
}

int level_for_mem(double mem, int levels) {
  const double k = (mem - kMemMin) / (kMemMax - kMemMin) * static_cast<double>(levels - 1);
  return std::clamp(static_cast<int>(std::lround(k)), 0, levels - 1);
}

double dqn_epsilon(long t, const DqnHyper& hyper) {
  const double frac = std::min(1.0, static_cast<double>(t) / static_cast<double>(hyper.epsilon_decay_steps));
  return hyper.epsilon_start + frac * (hyper.epsilon_end - hyper.epsilon_start);
}

DqnAgent::DqnAgent(std::size_t n_services, DqnHyper hyper, std::uint64_t seed)
    : n_services_(n_services),
      hyper_(hyper),
      init_rng_(make_stream(seed, Stream::init)),
      explore_rng_(make_stream(seed, Stream::exploration)),
      sample_rng_(make_stream(seed, Stream::sampling)),
      buffer_(hyper.buffer_capacity) {
  if (n_services == 0) throw ValidationError("agent needs at least one service");
  hyper_.validate();
  const int s = static_cast<int>(4 * n_services);
  const int out = static_cast<int>(2 * n_services) * hyper_.levels;
  qnet_ = Mlp::initialized({s, hyper_.hidden_width, hyper_.hidden_width, out}, Activation::linear, init_rng_);
  target_qnet_ = qnet_;
  opt_ = AdamState(qnet_, hyper_.opt);
}

std::vector<int> DqnAgent::select_levels(const StateVector& state, double epsilon) {
  if (state.services() != n_services_) throw DimensionError("state size does not match the DQN agent");
  const int levels = hyper_.levels;
  std::vector<int> chosen(heads());
  std::vector<double> q;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> any_level(0, levels - 1);
  for (std::size_t h = 0; h < heads(); ++h) {
    if (epsilon > 0.0 && coin(explore_rng_) < epsilon) {
      chosen[h] = any_level(explore_rng_);
      continue;
    }
    if (q.empty()) q = qnet_.forward(state.flat());
    const auto first = q.begin() + static_cast<std::ptrdiff_t>(h) * levels;
    chosen[h] = static_cast<int>(std::max_element(first, first + levels) - first);
  }
  return chosen;
}

ActionVector DqnAgent::action_for_levels(const std::vector<int>& levels) const {
  if (levels.size() != heads()) throw DimensionError("level vector does not match head count");
  std::vector<double> cpu(n_services_);
  std::vector<double> mem(n_services_);
  for (std::size_t i = 0; i < n_services_; ++i) {
    cpu[i] = cpu_for_level(levels[i], hyper_.levels);
    mem[i] = mem_for_level(levels[n_services_ + i], hyper_.levels);
  }
  return ActionVector(std::move(cpu), std::move(mem));
}

ActionVector DqnAgent::act(const StateVector& state, const ActionVector&, bool explore) {
  return action_for_levels(select_levels(state, explore ? current_epsilon() : 0.0));
}

void DqnAgent::observe(const Transition& transition) {
  buffer_.push(transition);
  ++global_step_;
}

TrainStats DqnAgent::train_step() {
  if (buffer_.size() <= hyper_.batch_size) return TrainStats{};
  return train_on(make_batch(buffer_.sample(hyper_.batch_size, sample_rng_)));
}

TrainStats DqnAgent::train_on(const Batch& batch) {
  const int levels = hyper_.levels;
  const auto n_heads = static_cast<Eigen::Index>(heads());
  const Eigen::Index b = batch.size();

  const Eigen::MatrixXd q_next = target_qnet_.forward(batch.next_states);
  Mlp::Cache cache;
  const Eigen::MatrixXd q = qnet_.forward(batch.states, cache);

  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  const double scale = 1.0 / static_cast<double>(b * n_heads);
  double loss = 0.0;
  for (Eigen::Index c = 0; c < b; ++c) {
    const double not_done = batch.dones(c) > 0.5 ? 0.0 : 1.0;
    for (Eigen::Index h = 0; h < n_heads; ++h) {
      // Stored actions are unit-box coordinates of grid points.
      const double u = batch.actions(h, c);
      const int k = std::clamp(static_cast<int>(std::lround((u + 1.0) / 2.0 * (levels - 1))), 0, levels - 1);
      const Eigen::Index row0 = h * levels;
      const double best_next = q_next.block(row0, c, levels, 1).maxCoeff();
      const double y = batch.rewards(c) + hyper_.gamma * best_next * not_done;
      const double err = q(row0 + k, c) - y;
      loss += err * err * scale;
      grad(row0 + k, c) = 2.0 * err * scale;
    }
  }
  if (!std::isfinite(loss)) throw NumericError("non-finite dqn loss");
  opt_.step(qnet_, qnet_.backward(cache, grad));
  ++train_count_;

  TrainStats stats;
  stats.skipped = false;
  stats.critic_updated = true;
  stats.critic_loss_1 = loss;
  if (train_count_ % hyper_.target_sync_interval == 0) {
    target_qnet_ = qnet_;
    ++sync_count_;
    stats.targets_updated = true;
  }
  return stats;
}

void DqnAgent::save_policy(const std::filesystem::path& path) const { serialize_params(qnet_, path); }

void DqnAgent::load_policy(const std::filesystem::path& path) {
  deserialize_params(qnet_, path);
  target_qnet_ = qnet_;
}

std::uint64_t DqnAgent::policy_checksum() const { return parameter_checksum(qnet_); }

}  // namespace td3sched
