#include "td3sched/actor_critic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "td3sched/errors.hpp"

namespace td3sched {

namespace {

Eigen::MatrixXd stack(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) {
  Eigen::MatrixXd x(states.rows() + actions.rows(), states.cols());
  x.topRows(states.rows()) = states;
  x.bottomRows(actions.rows()) = actions;
  return x;
}

Eigen::VectorXd row_vector(const Eigen::MatrixXd& single_row) { return single_row.row(0).transpose(); }

}  // namespace

void Td3Hyper::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in [0, 1]");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau must lie in [0, 1]");
  if (policy_freq < 1) throw ValidationError("policy_freq must be >= 1");
  if (!(smoothing_sigma >= 0.0)) throw ValidationError("smoothing_sigma must be >= 0");
  if (!(smoothing_clip > 0.0)) throw ValidationError("smoothing_clip must be > 0");
  if (!(sigma_init >= 0.0)) throw ValidationError("sigma_init must be >= 0");
  if (!(tau_decay > 0.0)) throw ValidationError("tau_decay must be > 0");
  if (batch_size == 0) throw ValidationError("batch_size must be >= 1");
  if (buffer_capacity <= batch_size) throw ValidationError("buffer_capacity must exceed batch_size");
  if (hidden_width < 1) throw ValidationError("hidden_width must be >= 1");
  actor_opt.validate();
  critic_opt.validate();
}

double exploration_sigma(long t, double sigma_init, double tau_decay) {
  return sigma_init * std::exp(-static_cast<double>(t) / tau_decay);
}

double clip_noise(double raw, double clip) { return std::clamp(raw, -clip, clip); }

double td_target(double reward, double gamma, double q1, double q2, bool done) {
  return reward + gamma * std::min(q1, q2) * (done ? 0.0 : 1.0);
}

void TargetProbe::clear() {
  smoothing_noise.clear();
  q1.clear();
  q2.clear();
  reward.clear();
  done.clear();
  target.clear();
}

Mlp make_actor(std::size_t n, int width, Rng& rng) {
  const int s = static_cast<int>(4 * n);
  const int a = static_cast<int>(2 * n);
  return Mlp::initialized({s, width, width, a}, Activation::tanh, rng);
}

Mlp make_critic(std::size_t n, int width, Rng& rng) {
  const int s = static_cast<int>(4 * n);
  const int a = static_cast<int>(2 * n);
  return Mlp::initialized({s + a, width, width, 1}, Activation::linear, rng);
}

ActorCriticAgent::ActorCriticAgent(Algorithm kind, std::size_t n_services, Td3Hyper hyper, std::uint64_t seed)
    : kind_(kind),
      n_services_(n_services),
      hyper_(hyper),
      twin_(kind == Algorithm::td3),
      smoothing_(kind == Algorithm::td3),
      policy_freq_(kind == Algorithm::td3 ? hyper.policy_freq : 1),
      init_rng_(make_stream(seed, Stream::init)),
      explore_rng_(make_stream(seed, Stream::exploration)),
      sample_rng_(make_stream(seed, Stream::sampling)),
      target_noise_rng_(make_stream(seed, Stream::target_noise)),
      buffer_(hyper.buffer_capacity) {
  if (kind != Algorithm::td3 && kind != Algorithm::ddpg) {
    throw ValidationError("ActorCriticAgent supports td3 and ddpg only");
  }
  if (n_services == 0) throw ValidationError("agent needs at least one service");
  hyper_.validate();
  actor_ = make_actor(n_services, hyper_.hidden_width, init_rng_);
  critic1_ = make_critic(n_services, hyper_.hidden_width, init_rng_);
  // The second critic gets its own draw even for DDPG so both variants
  // consume the init stream identically.
  critic2_ = make_critic(n_services, hyper_.hidden_width, init_rng_);
  target_actor_ = actor_;
  target_critic1_ = critic1_;
  target_critic2_ = critic2_;
  actor_opt_ = AdamState(actor_, hyper_.actor_opt);
  critic1_opt_ = AdamState(critic1_, hyper_.critic_opt);
  critic2_opt_ = AdamState(critic2_, hyper_.critic_opt);
}

double ActorCriticAgent::current_exploration_sigma() const {
  return exploration_sigma(global_step_, hyper_.sigma_init, hyper_.tau_decay);
}

std::vector<double> ActorCriticAgent::select_unit_action(const StateVector& state, bool explore) {
  if (state.services() != n_services_) {
    throw DimensionError("state covers " + std::to_string(state.services()) + " services, agent expects " +
                         std::to_string(n_services_));
  }
  if (explore && global_step_ < static_cast<long>(hyper_.warmup_transitions)) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> unit(2 * n_services_);
    for (double& x : unit) x = u(explore_rng_);
    return unit;
  }
  std::vector<double> unit = actor_.forward(state.flat());
  if (explore) {
    const double sigma = current_exploration_sigma();
    if (sigma > 0.0) {
      std::normal_distribution<double> noise(0.0, sigma);
      for (double& x : unit) x += noise(explore_rng_);
    }
  }
  for (double& x : unit) x = std::clamp(x, -1.0, 1.0);
  return unit;
}

ActionVector ActorCriticAgent::act(const StateVector& state, const ActionVector&, bool explore) {
  return action_from_unit(select_unit_action(state, explore));
}

void ActorCriticAgent::observe(const Transition& transition) {
  buffer_.push(transition);
  ++global_step_;
}

Eigen::MatrixXd ActorCriticAgent::smoothed_target_action(const Eigen::MatrixXd& next_states) {
  Eigen::MatrixXd a = target_actor_.forward(next_states);
  if (smoothing_) {
    std::normal_distribution<double> noise(0.0, hyper_.smoothing_sigma);
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const double eps = clip_noise(noise(target_noise_rng_), hyper_.smoothing_clip);
        if (probe_ != nullptr) probe_->smoothing_noise.push_back(eps);
        a(r, c) += eps;
      }
    }
  }
  return a.cwiseMax(-1.0).cwiseMin(1.0);
}

Eigen::VectorXd ActorCriticAgent::q1_values(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const {
  return row_vector(critic1_.forward(stack(states, actions)));
}

Eigen::VectorXd ActorCriticAgent::q2_values(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const {
  return row_vector(critic2_.forward(stack(states, actions)));
}

Eigen::VectorXd ActorCriticAgent::td_targets(const Batch& batch) {
  const Eigen::MatrixXd next_actions = smoothed_target_action(batch.next_states);
  const Eigen::MatrixXd x = stack(batch.next_states, next_actions);
  const Eigen::VectorXd q1 = row_vector(target_critic1_.forward(x));
  const Eigen::VectorXd q2 = twin_ ? row_vector(target_critic2_.forward(x)) : q1;
  Eigen::VectorXd y(batch.size());
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    y(j) = td_target(batch.rewards(j), hyper_.gamma, q1(j), q2(j), batch.dones(j) > 0.5);
    if (probe_ != nullptr) {
      probe_->q1.push_back(q1(j));
      probe_->q2.push_back(q2(j));
      probe_->reward.push_back(batch.rewards(j));
      probe_->done.push_back(batch.dones(j));
      probe_->target.push_back(y(j));
    }
  }
  return y;
}

TrainStats ActorCriticAgent::train_step() {
  if (buffer_.size() <= hyper_.batch_size) return TrainStats{};
  return train_on(make_batch(buffer_.sample(hyper_.batch_size, sample_rng_)));
}

TrainStats ActorCriticAgent::train_on(const Batch& batch) {
  TrainStats stats;
  stats.skipped = false;
  const double b = static_cast<double>(batch.size());
  const Eigen::VectorXd y = td_targets(batch);
  const Eigen::MatrixXd sa = stack(batch.states, batch.actions);

  auto fit_critic = [&](Mlp& critic, AdamState& opt) {
    Mlp::Cache cache;
    const Eigen::VectorXd q = row_vector(critic.forward(sa, cache));
    const Eigen::VectorXd err = q - y;
    const double loss = err.squaredNorm() / b;
    if (!std::isfinite(loss)) throw NumericError("non-finite critic loss");
    const Eigen::MatrixXd grad = (2.0 / b) * err.transpose();
    opt.step(critic, critic.backward(cache, grad));
    return loss;
  };
  stats.critic_loss_1 = fit_critic(critic1_, critic1_opt_);
  if (twin_) stats.critic_loss_2 = fit_critic(critic2_, critic2_opt_);
  stats.critic_updated = true;
  ++critic_updates_;

  if (critic_updates_ % policy_freq_ == 0) {
    Mlp::Cache actor_cache;
    const Eigen::MatrixXd u = actor_.forward(batch.states, actor_cache);
    Mlp::Cache critic_cache;
    const Eigen::VectorXd q = row_vector(critic1_.forward(stack(batch.states, u), critic_cache));
    const double actor_loss = -q.mean();
    if (!std::isfinite(actor_loss)) throw NumericError("non-finite actor loss");
    // Ascend mean Q: dLoss/dQ = -1/B, chained through the critic's action input.
    const Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(1, batch.size(), -1.0 / b);
    Eigen::MatrixXd d_input;
    critic1_.backward(critic_cache, dq, &d_input);
    const Eigen::MatrixXd d_action = d_input.bottomRows(u.rows());
    actor_opt_.step(actor_, actor_.backward(actor_cache, d_action));
    ++actor_updates_;
    stats.actor_updated = true;
    stats.actor_loss = actor_loss;

    soft_update(target_actor_, actor_, hyper_.tau);
    soft_update(target_critic1_, critic1_, hyper_.tau);
    if (twin_) soft_update(target_critic2_, critic2_, hyper_.tau);
    ++target_updates_;
    stats.targets_updated = true;
  }
  return stats;
}

void ActorCriticAgent::save_policy(const std::filesystem::path& path) const { serialize_params(actor_, path); }

void ActorCriticAgent::load_policy(const std::filesystem::path& path) {
  deserialize_params(actor_, path);
  target_actor_ = actor_;
}

std::uint64_t ActorCriticAgent::policy_checksum() const { return parameter_checksum(actor_); }

}  // namespace td3sched
