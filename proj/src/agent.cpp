#include "td3sched/agent.hpp"

#include <string>

#include "td3sched/errors.hpp"

namespace td3sched {

std::string_view to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::td3: return "td3";
    case Algorithm::ddpg: return "ddpg";
    case Algorithm::dqn: return "dqn";
    case Algorithm::basek: return "basek";
  }
  return "unknown";
}

Algorithm algorithm_from_string(std::string_view text) {
  if (text == "td3") return Algorithm::td3;
  if (text == "ddpg") return Algorithm::ddpg;
  if (text == "dqn") return Algorithm::dqn;
  if (text == "basek") return Algorithm::basek;
  throw ValidationError("unknown algorithm '" + std::string(text) + "' (expected td3|ddpg|dqn|basek)");
}

Eigen::MatrixXd to_column(std::span<const double> values) {
  Eigen::MatrixXd col(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t j = 0; j < values.size(); ++j) col(static_cast<Eigen::Index>(j), 0) = values[j];
  return col;
}

Batch make_batch(const std::vector<Transition>& transitions) {
  if (transitions.empty()) throw ValidationError("empty batch");
  const auto b = static_cast<Eigen::Index>(transitions.size());
  const auto s_dim = static_cast<Eigen::Index>(transitions.front().state.size());
  const auto a_dim = static_cast<Eigen::Index>(2 * transitions.front().action.services());
  Batch batch;
  batch.states.resize(s_dim, b);
  batch.next_states.resize(s_dim, b);
  batch.actions.resize(a_dim, b);
  batch.rewards.resize(b);
  batch.dones.resize(b);
  for (Eigen::Index c = 0; c < b; ++c) {
    const Transition& t = transitions[static_cast<std::size_t>(c)];
    const auto s = t.state.flat();
    const auto s2 = t.next_state.flat();
    if (static_cast<Eigen::Index>(s.size()) != s_dim || static_cast<Eigen::Index>(s2.size()) != s_dim) {
      throw DimensionError("ragged batch states");
    }
    for (Eigen::Index r = 0; r < s_dim; ++r) {
      batch.states(r, c) = s[static_cast<std::size_t>(r)];
      batch.next_states(r, c) = s2[static_cast<std::size_t>(r)];
    }
    const std::vector<double> u = unit_from_action(t.action);
    if (static_cast<Eigen::Index>(u.size()) != a_dim) throw DimensionError("ragged batch actions");
    for (Eigen::Index r = 0; r < a_dim; ++r) batch.actions(r, c) = u[static_cast<std::size_t>(r)];
    batch.rewards(c) = t.reward;
    batch.dones(c) = t.done ? 1.0 : 0.0;
  }
  return batch;
}

}  // namespace td3sched
