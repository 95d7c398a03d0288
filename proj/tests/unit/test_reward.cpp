#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "td3sched/errors.hpp"
#include "td3sched/reward.hpp"

using namespace td3sched;

namespace {

RewardBreakdown example_n2(const RewardConfig& cfg = {}) {
  const std::vector<double> latency = {100.0, 200.0};
  const ActionVector alloc({1.0, 1.0}, {1024.0, 1024.0});
  const std::vector<double> cpu_used = {0.5, 0.8};
  const std::vector<double> mem_used = {512.0, 512.0};
  return total_reward(RewardInputs{latency, alloc, cpu_used, mem_used, alloc, 150.0}, cfg);
}

StepRecord step_with(std::vector<double> latency, double util, double reward = 0.0) {
  const std::size_t n = latency.size();
  StepRecord s;
  s.raw = RawMetrics(n);
  s.raw.latency_ms = std::move(latency);
  s.raw.cpu_alloc.assign(n, 1.0);
  s.raw.cpu_used.assign(n, util);
  s.raw.mem_alloc.assign(n, 1000.0);
  s.raw.mem_used.assign(n, util * 1000.0);
  s.raw.qps.assign(n, 10.0);
  s.reward = reward;
  return s;
}

}  // namespace

TEST_SUITE("reward") {
  TEST_CASE("latency penalty") {
    CHECK(latency_penalty(std::vector<double>{100.0, 200.0}, 150.0) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
    CHECK(latency_penalty(std::vector<double>{10.0, 150.0}, 150.0) == 0.0);
    CHECK(latency_penalty(std::vector<double>{300.0}, 150.0) == -1.0);
    CHECK(latency_penalty(std::vector<double>{200.0}, 150.0, LatencyPenaltyMode::raw_ms) == -50.0);
  }

  TEST_CASE("resource waste") {
    CHECK(resource_waste(ActionVector({1.0}, {1024.0}), std::vector<double>{0.5}, std::vector<double>{512.0}) ==
          doctest::Approx(-1.0));
    CHECK(resource_waste(ActionVector({1.0}, {1024.0}), std::vector<double>{1.0}, std::vector<double>{1024.0}) ==
          0.0);
    CHECK(resource_waste(ActionVector({1.0, 2.0}, {100.0, 200.0}), std::vector<double>{0.0, 0.0},
                         std::vector<double>{0.0, 0.0}) == -4.0);
    // Usage above the allocation is not negative waste.
    CHECK(resource_waste(ActionVector({1.0}, {1024.0}), std::vector<double>{3.0}, std::vector<double>{4096.0}) ==
          0.0);
    CHECK_THROWS_AS(
        resource_waste(ActionVector({1.0}, {1024.0}), std::vector<double>{0.0, 0.0}, std::vector<double>{0.0}),
        DimensionError);
  }

  TEST_CASE("slo satisfaction") {
    CHECK(slo_satisfaction(std::vector<double>{100.0, 200.0}, 150.0) == 1.0);
    CHECK(slo_satisfaction(std::vector<double>(8, 149.0), 150.0) == 8.0);
    CHECK(slo_satisfaction(std::vector<double>{150.0}, 150.0) == 1.0);
  }

  TEST_CASE("migration cost") {
    const ActionVector a({1.0}, {500.0});
    CHECK(migration_cost(a, a) == 0.0);
    CHECK(migration_cost(ActionVector({2.0}, {500.0}), ActionVector({0.1}, {500.0})) == doctest::Approx(-1.0));
    CHECK(migration_cost(ActionVector({1.0}, {1056.0}), ActionVector({1.0}, {64.0})) == doctest::Approx(-0.5));
    CHECK_THROWS_AS(migration_cost(a, ActionVector({1.0, 1.0}, {64.0, 64.0})), DimensionError);
  }

  TEST_CASE("worked total") {
    const RewardBreakdown b = example_n2();
    CHECK(b.r_latency == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
    CHECK(b.r_waste == doctest::Approx(-1.7).epsilon(1e-12));
    CHECK(b.r_slo == 1.0);
    CHECK(b.r_migration == 0.0);
    CHECK(std::abs(b.total - (-0.5 / 3.0 - 0.17 + 0.2)) <= 1e-12);
    CHECK(std::abs(b.total - (-0.13667)) <= 1e-5);
  }

  TEST_CASE("degenerate weights") {
    RewardConfig zero;
    zero.weights = {0.0, 0.0, 0.0, 0.0};
    CHECK(example_n2(zero).total == 0.0);

    const std::vector<double> latency(3, 100.0);
    const ActionVector alloc({1.0, 1.0, 1.0}, {100.0, 100.0, 100.0});
    const std::vector<double> cpu(3, 1.0);
    const std::vector<double> mem(3, 100.0);
    CHECK(total_reward(RewardInputs{latency, alloc, cpu, mem, alloc, 150.0}, RewardConfig{}).total ==
          doctest::Approx(0.6).epsilon(1e-15));

    RewardWeights bad;
    bad.beta = -0.1;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
  }

  TEST_CASE("component ranges and permutation invariance") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> lat(0.0, 1000.0);
    std::uniform_real_distribution<double> frac(0.0, 1.3);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = 1 + static_cast<std::size_t>(trial % 8);
      std::vector<double> latency(n);
      for (double& l : latency) l = lat(rng);
      const ActionVector alloc = testing::random_action(n, rng);
      const ActionVector prev = testing::random_action(n, rng);
      std::vector<double> cpu(n);
      std::vector<double> mem(n);
      for (std::size_t i = 0; i < n; ++i) {
        cpu[i] = alloc.cpu(i) * frac(rng);
        mem[i] = alloc.mem(i) * frac(rng);
      }
      const RewardBreakdown b = total_reward(RewardInputs{latency, alloc, cpu, mem, prev, 150.0}, RewardConfig{});
      const double N = static_cast<double>(n);
      CHECK(b.r_latency <= 0.0);
      CHECK(b.r_waste >= -2.0 * N);
      CHECK(b.r_waste <= 0.0);
      CHECK(b.r_slo >= 0.0);
      CHECK(b.r_slo <= N);
      CHECK(b.r_slo == std::floor(b.r_slo));
      CHECK(b.r_migration >= -2.0 * N);
      CHECK(b.r_migration <= 0.0);

      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<double> pl(n), pc(n), pm(n), ac(n), am(n), bc(n), bm(n);
      for (std::size_t i = 0; i < n; ++i) {
        pl[i] = latency[perm[i]];
        pc[i] = cpu[perm[i]];
        pm[i] = mem[perm[i]];
        ac[i] = alloc.cpu(perm[i]);
        am[i] = alloc.mem(perm[i]);
        bc[i] = prev.cpu(perm[i]);
        bm[i] = prev.mem(perm[i]);
      }
      const ActionVector palloc(ac, am);
      const ActionVector pprev(bc, bm);
      const RewardBreakdown p = total_reward(RewardInputs{pl, palloc, pc, pm, pprev, 150.0}, RewardConfig{});
      CHECK(p.total == doctest::Approx(b.total).epsilon(1e-12));
    }
  }

  TEST_CASE("episode metrics") {
    std::vector<StepRecord> traj = {step_with({100.0}, 0.5, 1.0), step_with({160.0}, 0.5, 2.0),
                                    step_with({140.0}, 0.5, 3.0), step_with({200.0}, 0.5, -1.0)};
    EpisodeMetrics m = episode_metrics(traj, 150.0);
    CHECK(m.slo_violation_rate == 0.5);
    CHECK(m.mean_latency_ms == doctest::Approx(150.0));
    CHECK(m.total_reward == 5.0);
    CHECK(m.resource_efficiency == doctest::Approx(0.5));

    traj = {step_with(std::vector<double>(8, 75.2), 0.68)};
    m = episode_metrics(traj, 150.0);
    CHECK(m.mean_latency_ms == doctest::Approx(75.2).epsilon(1e-12));
    CHECK(m.resource_efficiency == doctest::Approx(0.68).epsilon(1e-12));
    CHECK(m.slo_violation_rate == 0.0);

    // The violation uses the mean over services, not any single service.
    traj = {step_with({100.0, 190.0}, 0.5)};
    CHECK(episode_metrics(traj, 150.0).slo_violation_rate == 0.0);

    CHECK_THROWS_AS(episode_metrics(std::vector<StepRecord>{}, 150.0), ValidationError);
  }

  TEST_CASE("mode names") {
    CHECK(latency_penalty_mode_from_string("raw_ms") == LatencyPenaltyMode::raw_ms);
    CHECK(to_string(LatencyPenaltyMode::normalized) == "normalized");
    CHECK_THROWS_AS(latency_penalty_mode_from_string("ms"), ValidationError);
  }
}
