#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "td3sched/actor_critic.hpp"
#include "td3sched/basek.hpp"
#include "td3sched/dqn.hpp"
#include "td3sched/errors.hpp"

using namespace td3sched;

namespace {

Td3Hyper small_hyper() {
  Td3Hyper h;
  h.hidden_width = 16;
  h.batch_size = 8;
  h.warmup_transitions = 0;
  h.buffer_capacity = 1000;
  return h;
}

void fill(Agent& agent, std::size_t n, int count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> r(0.0, 1.0);
  for (int i = 0; i < count; ++i) agent.observe(testing::random_transition(n, gen, r(gen), i % 7 == 0));
}

void zero(Mlp& net) {
  for (DenseLayer& L : net.mutable_layers()) {
    L.weight.setZero();
    L.bias.setZero();
  }
}

}  // namespace

TEST_SUITE("agents") {
  TEST_CASE("td3 defaults") {
    const Td3Hyper h;
    CHECK(h.gamma == 0.99);
    CHECK(h.tau == 0.005);
    CHECK(h.policy_freq == 2);
    CHECK(h.smoothing_sigma == 0.2);
    CHECK(h.smoothing_clip == 0.5);
    CHECK(h.sigma_init == 0.3);
    CHECK(h.tau_decay == 1000.0);
    CHECK(h.batch_size == 64);
    CHECK(h.warmup_transitions == 200);
    CHECK(h.hidden_width == 256);
    Td3Hyper bad;
    bad.policy_freq = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = Td3Hyper{};
    bad.gamma = 1.5;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
  }

  TEST_CASE("exploration schedule") {
    CHECK(exploration_sigma(0, 0.3, 1000.0) == 0.3);
    CHECK(std::abs(exploration_sigma(1000, 0.3, 1000.0) - 0.3 / std::exp(1.0)) <= 1e-12);
    CHECK(exploration_sigma(1000, 0.3, 1000.0) == doctest::Approx(0.110364).epsilon(1e-6));
    for (long t = 0; t < 3000; ++t) {
      CHECK(exploration_sigma(t + 1, 0.3, 1000.0) < exploration_sigma(t, 0.3, 1000.0));
      CHECK(std::abs(exploration_sigma(t, 0.3, 1000.0) - 0.3 * std::exp(-t / 1000.0)) <= 1e-12);
    }
  }

  TEST_CASE("noise clipping and td target") {
    CHECK(clip_noise(0.9, 0.5) == 0.5);
    CHECK(clip_noise(-0.3, 0.5) == -0.3);
    CHECK(clip_noise(-0.7, 0.5) == -0.5);
    CHECK(std::clamp(0.9 + clip_noise(0.9, 0.5), -1.0, 1.0) == 1.0);

    CHECK(td_target(1.0, 0.99, 2.0, 3.0, false) == doctest::Approx(2.98).epsilon(1e-15));
    CHECK(td_target(1.0, 0.99, 3.0, 2.0, false) == doctest::Approx(2.98).epsilon(1e-15));
    CHECK(td_target(1.0, 0.99, 2.0, 3.0, true) == 1.0);
    CHECK(td_target(0.5, 0.9, 4.0, 4.0, false) == doctest::Approx(0.5 + 0.9 * 4.0));
  }

  TEST_CASE("td3 and ddpg construction") {
    const ActorCriticAgent td3(Algorithm::td3, 2, small_hyper(), 1);
    CHECK(td3.critic_count() == 2);
    CHECK(td3.smoothing_enabled());
    CHECK(td3.policy_freq() == 2);
    CHECK(td3.actor().layer_sizes() == std::vector<int>{8, 16, 16, 4});
    CHECK(td3.actor().output_activation() == Activation::tanh);
    CHECK(td3.critic1().layer_sizes() == std::vector<int>{12, 16, 16, 1});
    CHECK(td3.critic1().output_activation() == Activation::linear);
    CHECK(parameter_checksum(td3.target_actor()) == parameter_checksum(td3.actor()));
    CHECK(parameter_checksum(td3.target_critic1()) == parameter_checksum(td3.critic1()));
    CHECK(parameter_checksum(td3.target_critic2()) == parameter_checksum(td3.critic2()));
    CHECK(parameter_checksum(td3.critic1()) != parameter_checksum(td3.critic2()));

    const ActorCriticAgent ddpg(Algorithm::ddpg, 2, small_hyper(), 1);
    CHECK(ddpg.critic_count() == 1);
    CHECK_FALSE(ddpg.smoothing_enabled());
    CHECK(ddpg.policy_freq() == 1);
    CHECK(ddpg.algorithm() == Algorithm::ddpg);
    CHECK_THROWS_AS(ActorCriticAgent(Algorithm::dqn, 2, small_hyper(), 1), ValidationError);
  }

  TEST_CASE("greedy action of a zero actor is the box midpoint") {
    ActorCriticAgent agent(Algorithm::td3, 3, small_hyper(), 2);
    zero(agent.mutable_actor());
    const ActionVector a = agent.act(StateVector(3), ActionVector::uniform(3, 1.0, 512.0), false);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a.cpu(i) == doctest::Approx(1.05).epsilon(1e-15));
      CHECK(a.mem(i) == doctest::Approx(1056.0).epsilon(1e-15));
    }
  }

  TEST_CASE("greedy actions are deterministic, exploration is not") {
    Td3Hyper h = small_hyper();
    h.warmup_transitions = 5;
    ActorCriticAgent agent(Algorithm::td3, 2, h, 3);
    std::mt19937_64 gen(1);
    const StateVector s = testing::random_state(2, gen);
    const auto g1 = agent.select_unit_action(s, false);
    CHECK(agent.select_unit_action(s, false) == g1);
    // During warmup explored actions are uniform draws.
    const auto w1 = agent.select_unit_action(s, true);
    const auto w2 = agent.select_unit_action(s, true);
    CHECK(w1 != w2);
    for (double u : w1) {
      CHECK(u >= -1.0);
      CHECK(u <= 1.0);
    }
    fill(agent, 2, 5, 4);
    CHECK(agent.global_step() == 5);
    const auto e1 = agent.select_unit_action(s, true);
    CHECK(e1 != g1);
    CHECK_THROWS_AS(agent.select_unit_action(StateVector(3), false), DimensionError);
  }

  TEST_CASE("train_step guard") {
    ActorCriticAgent agent(Algorithm::td3, 2, small_hyper(), 5);
    fill(agent, 2, 8, 6);
    const auto actor = parameter_checksum(agent.actor());
    const auto critic = parameter_checksum(agent.critic1());
    const TrainStats s = agent.train_step();
    CHECK(s.skipped);
    CHECK_FALSE(s.critic_updated);
    CHECK(parameter_checksum(agent.actor()) == actor);
    CHECK(parameter_checksum(agent.critic1()) == critic);
    fill(agent, 2, 1, 7);
    CHECK_FALSE(agent.train_step().skipped);
  }

  TEST_CASE("delayed actor and target updates") {
    ActorCriticAgent agent(Algorithm::td3, 2, small_hyper(), 8);
    fill(agent, 2, 40, 9);
    const auto actor0 = parameter_checksum(agent.actor());
    const auto target0 = parameter_checksum(agent.target_actor());
    TrainStats s = agent.train_step();
    CHECK(s.critic_updated);
    CHECK_FALSE(s.actor_updated);
    CHECK_FALSE(s.targets_updated);
    CHECK_FALSE(s.actor_loss.has_value());
    CHECK(parameter_checksum(agent.actor()) == actor0);
    CHECK(parameter_checksum(agent.target_actor()) == target0);
    s = agent.train_step();
    CHECK(s.actor_updated);
    CHECK(s.targets_updated);
    CHECK(s.actor_loss.has_value());
    CHECK(agent.actor_update_count() == 1);
    CHECK(agent.target_update_count() == 1);
    CHECK(parameter_checksum(agent.actor()) != actor0);
    for (int k = 0; k < 99; ++k) agent.train_step();
    CHECK(agent.critic_update_count() == 101);
    CHECK(agent.actor_update_count() == 50);

    ActorCriticAgent ddpg(Algorithm::ddpg, 2, small_hyper(), 8);
    fill(ddpg, 2, 40, 9);
    for (int k = 0; k < 7; ++k) CHECK(ddpg.train_step().actor_updated);
    CHECK(ddpg.actor_update_count() == 7);
  }

  TEST_CASE("targets use the smaller target critic and clipped noise") {
    ActorCriticAgent agent(Algorithm::td3, 2, small_hyper(), 10);
    TargetProbe probe;
    agent.set_probe(&probe);
    fill(agent, 2, 60, 11);
    for (int k = 0; k < 20; ++k) agent.train_step();
    REQUIRE(probe.target.size() == 20 * 8);
    CHECK(probe.smoothing_noise.size() == 20 * 8 * 4);
    bool any_different = false;
    for (std::size_t j = 0; j < probe.target.size(); ++j) {
      const double r = probe.reward[j];
      if (probe.done[j] > 0.5) {
        CHECK(probe.target[j] == r);
        continue;
      }
      const double implied = (probe.target[j] - r) / 0.99;
      CHECK(implied <= std::min(probe.q1[j], probe.q2[j]) + 1e-9);
      CHECK(implied >= std::min(probe.q1[j], probe.q2[j]) - 1e-9);
      any_different = any_different || probe.q1[j] != probe.q2[j];
    }
    CHECK(any_different);
    for (double eps : probe.smoothing_noise) {
      CHECK(eps >= -0.5);
      CHECK(eps <= 0.5);
    }
    std::mt19937_64 gen(12);
    Eigen::MatrixXd next(8, 16);
    for (Eigen::Index i = 0; i < next.size(); ++i) next(i) = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    const Eigen::MatrixXd a = agent.smoothed_target_action(next);
    CHECK(a.maxCoeff() <= 1.0);
    CHECK(a.minCoeff() >= -1.0);
  }

  TEST_CASE("ddpg bootstraps from one critic without smoothing") {
    ActorCriticAgent agent(Algorithm::ddpg, 2, small_hyper(), 13);
    TargetProbe probe;
    agent.set_probe(&probe);
    fill(agent, 2, 30, 14);
    agent.train_step();
    CHECK(probe.smoothing_noise.empty());
    CHECK(probe.q1 == probe.q2);
  }

  TEST_CASE("td3 and ddpg diverge once smoothing noise is drawn") {
    ActorCriticAgent td3(Algorithm::td3, 2, small_hyper(), 15);
    ActorCriticAgent ddpg(Algorithm::ddpg, 2, small_hyper(), 15);
    CHECK(parameter_checksum(td3.actor()) == parameter_checksum(ddpg.actor()));
    CHECK(parameter_checksum(td3.critic1()) == parameter_checksum(ddpg.critic1()));
    fill(td3, 2, 30, 16);
    fill(ddpg, 2, 30, 16);
    td3.train_step();
    ddpg.train_step();
    CHECK(parameter_checksum(td3.critic1()) != parameter_checksum(ddpg.critic1()));
  }

  TEST_CASE("training numerics stay finite") {
    Td3Hyper h = small_hyper();
    h.batch_size = 16;
    ActorCriticAgent agent(Algorithm::td3, 2, h, 17);
    std::mt19937_64 gen(18);
    std::normal_distribution<double> r(0.0, 10.0);
    for (int k = 0; k < 10000; ++k) {
      agent.observe(testing::random_transition(2, gen, r(gen), k % 20 == 19));
      agent.train_step();
    }
    CHECK(agent.actor().all_finite());
    CHECK(agent.critic1().all_finite());
    CHECK(agent.critic2().all_finite());
    CHECK(agent.target_critic2().all_finite());
    CHECK(agent.buffer().size() == 1000);
  }

  TEST_CASE("policy save and load") {
    testing::TempDir dir("policy");
    ActorCriticAgent a(Algorithm::td3, 2, small_hyper(), 19);
    fill(a, 2, 30, 20);
    for (int k = 0; k < 4; ++k) a.train_step();
    a.save_policy(dir / "actor.params");
    ActorCriticAgent b(Algorithm::td3, 2, small_hyper(), 21);
    CHECK(b.policy_checksum() != a.policy_checksum());
    b.load_policy(dir / "actor.params");
    CHECK(b.policy_checksum() == a.policy_checksum());
    std::mt19937_64 gen(22);
    const StateVector s = testing::random_state(2, gen);
    CHECK(a.select_unit_action(s, false) == b.select_unit_action(s, false));
    ActorCriticAgent wide(Algorithm::td3, 3, small_hyper(), 21);
    CHECK_THROWS_AS(wide.load_policy(dir / "actor.params"), DimensionError);
  }

  TEST_CASE("dqn grid") {
    CHECK(cpu_for_level(0) == doctest::Approx(0.1));
    CHECK(cpu_for_level(9) == doctest::Approx(2.0));
    CHECK(cpu_for_level(3) == doctest::Approx(0.7333).epsilon(1e-4));
    CHECK(std::abs(cpu_for_level(3) - (0.1 + 3.0 * 1.9 / 9.0)) <= 1e-15);
    CHECK(mem_for_level(0) == 64.0);
    CHECK(mem_for_level(9) == 2048.0);
    for (int k = 0; k < 10; ++k) {
      CHECK(level_for_cpu(cpu_for_level(k)) == k);
      CHECK(level_for_mem(mem_for_level(k)) == k);
    }
  }

  TEST_CASE("dqn epsilon schedule") {
    const DqnHyper h;
    CHECK(dqn_epsilon(0, h) == 1.0);
    CHECK(dqn_epsilon(250, h) == doctest::Approx(0.525));
    CHECK(dqn_epsilon(500, h) == doctest::Approx(0.05));
    CHECK(dqn_epsilon(5000, h) == doctest::Approx(0.05));
  }

  TEST_CASE("dqn uniform exploration at epsilon one") {
    DqnHyper h;
    h.hidden_width = 8;
    DqnAgent agent(1, h, 23);
    CHECK(agent.heads() == 2);
    std::array<std::array<int, 10>, 2> counts{};
    for (int i = 0; i < 10000; ++i) {
      const auto levels = agent.select_levels(StateVector(1), 1.0);
      for (std::size_t head = 0; head < 2; ++head) ++counts[head][static_cast<std::size_t>(levels[head])];
    }
    const double sigma = std::sqrt(10000.0 * 0.1 * 0.9);
    for (const auto& head : counts) {
      for (int c : head) CHECK(std::abs(c - 1000.0) <= 3.0 * sigma);
    }
  }

  TEST_CASE("dqn greedy picks the argmax of each head") {
    DqnHyper h;
    h.hidden_width = 8;
    DqnAgent agent(2, h, 24);
    std::mt19937_64 gen(25);
    const StateVector s = testing::random_state(2, gen);
    const auto q = agent.qnet().forward(s.flat());
    const auto levels = agent.select_levels(s, 0.0);
    for (std::size_t head = 0; head < 4; ++head) {
      const auto first = q.begin() + static_cast<std::ptrdiff_t>(head * 10);
      CHECK(levels[head] == static_cast<int>(std::max_element(first, first + 10) - first));
    }
    const ActionVector a = agent.action_for_levels(levels);
    CHECK(a.cpu(1) == doctest::Approx(cpu_for_level(levels[1])));
    CHECK(a.mem(0) == doctest::Approx(mem_for_level(levels[2])));
  }

  TEST_CASE("dqn hard target sync") {
    DqnHyper h;
    h.hidden_width = 8;
    h.batch_size = 8;
    h.buffer_capacity = 500;
    DqnAgent agent(1, h, 26);
    std::mt19937_64 gen(27);
    for (int i = 0; i < 50; ++i) {
      // Stored actions must be grid points.
      std::uniform_int_distribution<int> lvl(0, 9);
      const ActionVector a({cpu_for_level(lvl(gen))}, {mem_for_level(lvl(gen))});
      agent.observe(Transition{testing::random_state(1, gen), a, 1.0, testing::random_state(1, gen), false});
    }
    for (int k = 1; k <= 250; ++k) {
      const TrainStats s = agent.train_step();
      CHECK(s.targets_updated == (k % 100 == 0));
      if (k % 100 == 0) CHECK(parameter_checksum(agent.target_qnet()) == parameter_checksum(agent.qnet()));
      if (k % 100 == 1 && k > 1) CHECK(parameter_checksum(agent.target_qnet()) != parameter_checksum(agent.qnet()));
    }
    CHECK(agent.target_sync_count() == 2);
    CHECK(agent.train_count() == 250);
  }

  TEST_CASE("basek static mode") {
    const ActionVector initial({0.4, 0.3}, {384.0, 256.0});
    BaseKScheduler sched(initial);
    std::mt19937_64 gen(28);
    for (int i = 0; i < 20; ++i) {
      CHECK(sched.act(testing::random_state(2, gen), testing::random_action(2, gen), true) == initial);
    }
    CHECK_FALSE(sched.learns());
    CHECK_FALSE(sched.has_policy_params());
    CHECK(sched.train_step().skipped);
  }

  TEST_CASE("basek threshold mode") {
    BaseKConfig cfg;
    cfg.mode = BaseKMode::threshold;
    BaseKScheduler sched(ActionVector::uniform(1, 0.5, 512.0), cfg);
    auto state = [](double cpu_util, double mem_util) {
      return StateVector::from_flat(std::vector<double>{cpu_util, mem_util, 0.2, 0.2});
    };
    ActionVector a = sched.decide(state(0.9, 0.5), ActionVector({1.0}, {1000.0}));
    CHECK(a.cpu(0) == doctest::Approx(1.2));
    CHECK(a.mem(0) == 1000.0);
    a = sched.decide(state(0.9, 0.95), ActionVector({1.9}, {1000.0}));
    CHECK(a.cpu(0) == 2.0);
    CHECK(a.mem(0) == doctest::Approx(1200.0));
    a = sched.decide(state(0.1, 0.1), ActionVector({1.0}, {1000.0}));
    CHECK(a.cpu(0) == doctest::Approx(0.8));
    CHECK(a.mem(0) == doctest::Approx(800.0));
    a = sched.decide(state(0.1, 0.5), ActionVector({0.1}, {1000.0}));
    CHECK(a.cpu(0) == doctest::Approx(0.1));

    BaseKConfig bad;
    bad.scale_down_below = 0.9;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK(basek_mode_from_string("threshold") == BaseKMode::threshold);
    CHECK_THROWS_AS(basek_mode_from_string("dynamic"), ValidationError);
  }

  TEST_CASE("agent factory") {
    AgentConfig cfg;
    cfg.td3.hidden_width = 8;
    cfg.dqn.hidden_width = 8;
    const ActionVector initial = ActionVector::uniform(2, 0.5, 256.0);
    for (Algorithm algo : {Algorithm::td3, Algorithm::ddpg, Algorithm::dqn, Algorithm::basek}) {
      auto agent = make_agent(algo, 2, cfg, initial, 0);
      CHECK(agent->algorithm() == algo);
      CHECK(agent->learns() == (algo != Algorithm::basek));
      CHECK(algorithm_from_string(to_string(algo)) == algo);
    }
    CHECK_THROWS_AS(algorithm_from_string("ppo"), ValidationError);
  }
}
