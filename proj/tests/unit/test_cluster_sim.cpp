#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "td3sched/cluster_sim.hpp"
#include "td3sched/errors.hpp"

using namespace td3sched;

namespace {

ServiceSpec make_service(int id, int node, double cost) {
  ServiceSpec s;
  s.service_id = id;
  s.name = "svc" + std::to_string(id);
  s.home_node = node;
  s.cpu_cost_per_request = cost;
  s.mem_floor_mb = 100.0;
  s.mem_per_qps_mb = 1.0;
  s.initial_cpu_request = 1.0;
  s.initial_mem_request = 512.0;
  return s;
}

SimConfig quiet(SimConfig c) {
  c.latency.noise_sigma = 0.0;
  return c;
}

ClusterSim default_sim(double rate, double noise = 0.02) {
  SimConfig c;
  c.latency.noise_sigma = noise;
  return ClusterSim(c, WorkloadSource::constant(rate, uniform_weights(c.n_services())));
}

}  // namespace

TEST_SUITE("cluster-sim") {
  TEST_CASE("network latency per node") {
    CHECK(network_ms(NodeSpec::with_defaults(0, Tier::edge)) == 5.0);
    CHECK(network_ms(NodeSpec::with_defaults(1, Tier::cloud)) == 40.0);
    NodeSpec n = NodeSpec::with_defaults(2, Tier::edge);
    n.base_network_latency_ms = 12.0;
    CHECK(network_ms(n) == 12.0);
  }

  TEST_CASE("latency curve") {
    const NodeSpec edge = NodeSpec::with_defaults(0, Tier::edge);
    const LatencyModel model;
    const ServiceSpec s = make_service(0, 0, 0.01);

    ServiceWindow w = evaluate_service(s, edge, model, 1.0, 512.0, 50.0);
    CHECK(w.rho == doctest::Approx(0.5));
    CHECK(w.latency_ms == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(w.cpu_used == doctest::Approx(0.5));
    CHECK(w.mem_used == doctest::Approx(150.0));
    CHECK_FALSE(w.mem_pressure);

    w = evaluate_service(s, edge, model, 1.0, 512.0, 0.0);
    CHECK(w.latency_ms == 25.0);
    CHECK(w.cpu_used == 0.0);

    w = evaluate_service(s, edge, model, 0.5, 512.0, 100.0);
    CHECK(w.rho == 0.99);
    CHECK(w.latency_ms == 1000.0);
    CHECK(w.cpu_used == 0.5);

    // (20 + 5) / (1 - 0.99) = 2500 before the cap; a larger cap exposes it.
    LatencyModel wide = model;
    wide.saturation_cap_ms = 1e6;
    w = evaluate_service(s, edge, wide, 0.5, 512.0, 100.0);
    CHECK(w.latency_ms == doctest::Approx(2500.0).epsilon(1e-9));
  }

  TEST_CASE("memory pressure doubles latency and stays capped") {
    const NodeSpec edge = NodeSpec::with_defaults(0, Tier::edge);
    const LatencyModel model;
    const ServiceSpec s = make_service(0, 0, 0.01);
    // demand = 100 + 1 * 50 = 150 MB
    ServiceWindow w = evaluate_service(s, edge, model, 1.0, 149.0, 50.0);
    CHECK(w.mem_pressure);
    CHECK(w.latency_ms == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(w.mem_used == 149.0);
    w = evaluate_service(s, edge, model, 1.0, 150.0, 50.0);
    CHECK_FALSE(w.mem_pressure);
    w = evaluate_service(s, edge, model, 0.55, 149.0, 50.0);
    CHECK(w.latency_ms <= 1000.0);
  }

  TEST_CASE("per-service base latency override") {
    const NodeSpec cloud = NodeSpec::with_defaults(0, Tier::cloud);
    ServiceSpec s = make_service(0, 0, 0.01);
    s.base_service_ms = 10.0;
    CHECK(evaluate_service(s, cloud, LatencyModel{}, 1.0, 512.0, 0.0).latency_ms == 50.0);
  }

  TEST_CASE("reset installs the initial requests") {
    ClusterSim sim = default_sim(100.0);
    const StateVector obs = sim.reset(1);
    CHECK(sim.state().step == 0);
    CHECK(obs.size() == 32);
    const auto services = default_services();
    for (std::size_t i = 0; i < services.size(); ++i) {
      CHECK(sim.state().alloc.cpu(i) == doctest::Approx(services[i].initial_cpu_request));
      CHECK(sim.state().alloc.mem(i) == doctest::Approx(services[i].initial_mem_request));
    }
    CHECK(sim.state().prev_alloc == sim.state().alloc);
    CHECK(sim.state().qps == std::vector<double>(8, 12.5));
  }

  TEST_CASE("reset is deterministic per seed") {
    ClusterSim a = default_sim(100.0);
    ClusterSim b = default_sim(100.0);
    const StateVector sa = a.reset(5);
    const StateVector sb = b.reset(5);
    CHECK(sa == sb);
    CHECK(a.state().latency_ms == b.state().latency_ms);
    CHECK(a.reset(6).flat().size() == 32);
    CHECK(a.state().latency_ms != b.state().latency_ms);
  }

  TEST_CASE("zero workload idles at base plus network latency") {
    ClusterSim sim = default_sim(0.0, 0.0);
    sim.reset(0);
    const SimConfig& c = sim.config();
    for (std::size_t i = 0; i < c.n_services(); ++i) {
      CHECK(sim.state().cpu_used[i] == 0.0);
      const double expected = c.latency.base_service_ms + network_ms(c.node(c.services[i].home_node));
      CHECK(sim.state().latency_ms[i] == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  TEST_CASE("episode bookkeeping") {
    ClusterSim sim = default_sim(100.0);
    const ActionVector a = ActionVector::uniform(8, 1.0, 1024.0);
    CHECK_THROWS_AS(sim.step(a), ContractViolation);
    sim.reset(0);
    for (int t = 1; t <= 20; ++t) {
      CHECK_FALSE(sim.done());
      const StepResult r = sim.step(a);
      CHECK(sim.state().step == t);
      CHECK(r.done == (t == 20));
    }
    CHECK(sim.done());
    CHECK_THROWS_AS(sim.step(a), ContractViolation);
    CHECK_THROWS_AS(default_sim(100.0).step(ActionVector::uniform(3, 1.0, 1024.0)), ContractViolation);
    ClusterSim fresh = default_sim(100.0);
    fresh.reset(0);
    CHECK_THROWS_AS(fresh.step(ActionVector::uniform(3, 1.0, 1024.0)), DimensionError);
  }

  TEST_CASE("step installs the action and keeps the previous one") {
    ClusterSim sim = default_sim(100.0);
    sim.reset(0);
    const ActionVector first = sim.state().alloc;
    const ActionVector a = ActionVector::uniform(8, 0.8, 700.0);
    const StepResult r = sim.step(a);
    CHECK(sim.state().alloc == a);
    CHECK(sim.state().prev_alloc == first);
    CHECK(r.raw.cpu_alloc == std::vector<double>(8, 0.8));
    CHECK(r.obs == normalize_state(r.raw, sim.config().normalization));
  }

  TEST_CASE("trajectories are bitwise reproducible") {
    std::mt19937_64 rng(17);
    std::vector<ActionVector> actions;
    for (int t = 0; t < 20; ++t) actions.push_back(testing::random_action(8, rng));
    auto run = [&] {
      ClusterSim sim = default_sim(300.0);
      std::vector<double> out;
      const StateVector s0 = sim.reset(99);
      out.insert(out.end(), s0.flat().begin(), s0.flat().end());
      for (const ActionVector& a : actions) {
        const StepResult r = sim.step(a);
        out.insert(out.end(), r.raw.latency_ms.begin(), r.raw.latency_ms.end());
        out.insert(out.end(), r.obs.flat().begin(), r.obs.flat().end());
      }
      return out;
    };
    CHECK(run() == run());
  }

  TEST_CASE("more cpu never raises latency without noise") {
    SimConfig c = quiet(SimConfig{});
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> cpu(kCpuMin, kCpuMax);
    std::uniform_real_distribution<double> qps(0.0, 150.0);
    for (int trial = 0; trial < 500; ++trial) {
      const ServiceSpec& s = c.services[static_cast<std::size_t>(trial % 8)];
      const NodeSpec& home = c.node(s.home_node);
      double lo = cpu(rng);
      double hi = cpu(rng);
      if (lo > hi) std::swap(lo, hi);
      const double q = qps(rng);
      CHECK(evaluate_service(s, home, c.latency, hi, 1024.0, q).latency_ms <=
            evaluate_service(s, home, c.latency, lo, 1024.0, q).latency_ms);
    }
  }

  TEST_CASE("latency stays within floor and cap, observations in the unit box") {
    ClusterSim sim = default_sim(300.0, 0.05);
    std::mt19937_64 rng(29);
    for (int ep = 0; ep < 10; ++ep) {
      sim.reset(static_cast<std::uint64_t>(ep));
      while (!sim.done()) {
        const StepResult r = sim.step(testing::random_action(8, rng));
        const SimConfig& c = sim.config();
        for (std::size_t i = 0; i < 8; ++i) {
          const double floor_ms = c.latency.base_service_ms + network_ms(c.node(c.services[i].home_node));
          CHECK(r.raw.latency_ms[i] >= floor_ms);
          CHECK(r.raw.latency_ms[i] <= c.latency.saturation_cap_ms);
        }
        for (double x : r.obs.flat()) {
          CHECK(x >= 0.0);
          CHECK(x <= 1.0);
        }
      }
    }
  }

  TEST_CASE("over-subscribed nodes are scaled above the box minimum") {
    SimConfig c;
    c.nodes = {NodeSpec::with_defaults(0, Tier::edge)};
    c.services = {make_service(0, 0, 0.01), make_service(1, 0, 0.01)};
    c.services[0].initial_mem_request = 512.0;
    c.services[1].initial_mem_request = 512.0;
    ClusterSim sim(c, WorkloadSource::constant(10.0, uniform_weights(2)));
    const ActionVector fitted = sim.fit_to_nodes(ActionVector({2.0, 1.0}, {2048.0, 2048.0}));
    CHECK(fitted.cpu(0) + fitted.cpu(1) == doctest::Approx(2.0).epsilon(1e-12));
    // Excess over the minimum shrinks by a common factor: (2 - 0.2) / (3 - 0.2).
    const double f = 1.8 / 2.8;
    CHECK(fitted.cpu(0) == doctest::Approx(0.1 + 1.9 * f).epsilon(1e-12));
    CHECK(fitted.cpu(1) == doctest::Approx(0.1 + 0.9 * f).epsilon(1e-12));
    CHECK(fitted.mem(0) + fitted.mem(1) <= 4096.0 + 1e-9);
    const ActionVector fits({0.5, 0.5}, {256.0, 256.0});
    CHECK(sim.fit_to_nodes(fits) == fits);
  }

  TEST_CASE("config validation") {
    SimConfig c;
    c.services[3].home_node = 42;
    CHECK_THROWS_AS(ClusterSim(c, WorkloadSource::constant(1.0, uniform_weights(8))), ValidationError);
    c = SimConfig{};
    c.episode_len = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = SimConfig{};
    c.l_target_ms = 0.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = SimConfig{};
    CHECK_THROWS_AS(ClusterSim(c, WorkloadSource::constant(1.0, uniform_weights(3))), DimensionError);
  }
}
