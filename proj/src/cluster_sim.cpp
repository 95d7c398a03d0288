#include "td3sched/cluster_sim.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "td3sched/errors.hpp"

namespace td3sched {

const NodeSpec& SimConfig::node(int node_id) const {
  for (const NodeSpec& n : nodes) {
    if (n.node_id == node_id) return n;
  }
  throw ValidationError("unknown node id " + std::to_string(node_id));
}

void SimConfig::validate() const {
  if (services.empty()) throw ValidationError("simulator needs at least one service");
  if (episode_len < 1) throw ValidationError("episode_len must be >= 1");
  if (!(std::isfinite(l_target_ms) && l_target_ms > 0.0)) throw ValidationError("l_target must be > 0");
  if (!(std::isfinite(step_duration_s) && step_duration_s > 0.0)) {
    throw ValidationError("step_duration must be > 0");
  }
  const LatencyModel& m = latency;
  if (!(m.base_service_ms > 0.0 && std::isfinite(m.base_service_ms))) {
    throw ValidationError("base_service_ms must be > 0");
  }
  if (!(m.mem_pressure_multiplier >= 1.0 && std::isfinite(m.mem_pressure_multiplier))) {
    throw ValidationError("mem_pressure_multiplier must be >= 1");
  }
  if (!(m.rho_cap > 0.0 && m.rho_cap < 1.0)) throw ValidationError("rho_cap must lie in (0, 1)");
  if (!(m.noise_sigma >= 0.0 && std::isfinite(m.noise_sigma))) {
    throw ValidationError("latency noise_sigma must be >= 0");
  }
  normalization.validate();

  std::set<int> node_ids;
  for (const NodeSpec& n : nodes) {
    n.validate();
    if (!node_ids.insert(n.node_id).second) {
      throw ValidationError("duplicate node id " + std::to_string(n.node_id));
    }
  }
  for (std::size_t i = 0; i < services.size(); ++i) {
    const ServiceSpec& s = services[i];
    s.validate();
    if (s.service_id != static_cast<int>(i)) {
      throw ValidationError("service ids must be 0..N-1 in order; got " + std::to_string(s.service_id) +
                            " at position " + std::to_string(i));
    }
    const NodeSpec& home = node(s.home_node);
    const double floor_latency = s.base_service_ms.value_or(m.base_service_ms) + network_ms(home);
    if (floor_latency >= m.saturation_cap_ms) {
      throw ValidationError("service " + s.name + ": idle latency reaches the saturation cap");
    }
  }
  for (const NodeSpec& n : nodes) {
    const auto hosted = std::count_if(services.begin(), services.end(),
                                      [&](const ServiceSpec& s) { return s.home_node == n.node_id; });
    if (n.cpu_capacity < kCpuMin * static_cast<double>(hosted) ||
        n.mem_capacity < kMemMin * static_cast<double>(hosted)) {
      throw ValidationError("node " + std::to_string(n.node_id) +
                            " cannot hold the minimum allocation of its services");
    }
  }
}

double network_ms(const NodeSpec& node) { return node.base_network_latency_ms; }

ServiceWindow evaluate_service(const ServiceSpec& service, const NodeSpec& home, const LatencyModel& model,
                               double cpu_alloc, double mem_alloc, double qps) {
  ServiceWindow w;
  const double cpu_demand = qps * service.cpu_cost_per_request;
  w.rho = std::min(cpu_demand / cpu_alloc, model.rho_cap);
  const double idle_ms = service.base_service_ms.value_or(model.base_service_ms) + network_ms(home);
  w.latency_ms = std::min(idle_ms / (1.0 - w.rho), model.saturation_cap_ms);
  const double mem_demand = service.mem_floor_mb + service.mem_per_qps_mb * qps;
  if (mem_alloc < mem_demand) {
    w.mem_pressure = true;
    w.latency_ms = std::min(w.latency_ms * model.mem_pressure_multiplier, model.saturation_cap_ms);
  }
  w.cpu_used = std::min(cpu_demand, cpu_alloc);
  w.mem_used = std::min(mem_demand, mem_alloc);
  return w;
}

ClusterSim::ClusterSim(SimConfig config, WorkloadSource workload)
    : config_(std::move(config)), workload_(std::move(workload)) {
  config_.validate();
  if (workload_.services() != config_.n_services()) {
    throw DimensionError("workload covers " + std::to_string(workload_.services()) +
                         " services, simulator has " + std::to_string(config_.n_services()));
  }
}

ActionVector ClusterSim::initial_allocation() const {
  std::vector<double> cpu;
  std::vector<double> mem;
  for (const ServiceSpec& s : config_.services) {
    cpu.push_back(s.initial_cpu_request);
    mem.push_back(s.initial_mem_request);
  }
  return ActionVector(std::move(cpu), std::move(mem));
}

ActionVector ClusterSim::fit_to_nodes(const ActionVector& action) const {
  const std::size_t n = config_.n_services();
  std::vector<double> cpu(action.cpu().begin(), action.cpu().end());
  std::vector<double> mem(action.mem().begin(), action.mem().end());
  auto shrink = [&](std::vector<double>& alloc, double capacity, double floor, int node_id) {
    double total = 0.0;
    double count = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (config_.services[i].home_node != node_id) continue;
      total += alloc[i];
      count += 1.0;
    }
    if (total <= capacity) return;
    const double factor = (capacity - floor * count) / (total - floor * count);
    for (std::size_t i = 0; i < n; ++i) {
      if (config_.services[i].home_node != node_id) continue;
      alloc[i] = floor + (alloc[i] - floor) * factor;
    }
  };
  for (const NodeSpec& node : config_.nodes) {
    shrink(cpu, node.cpu_capacity, kCpuMin, node.node_id);
    shrink(mem, node.mem_capacity, kMemMin, node.node_id);
  }
  return ActionVector(std::move(cpu), std::move(mem));
}

StateVector ClusterSim::reset(std::uint64_t seed) {
  seed_ = seed;
  noise_rng_ = make_stream(seed, Stream::environment);
  started_ = true;
  state_ = SimState{};
  state_.step = 0;
  state_.alloc = fit_to_nodes(initial_allocation());
  state_.prev_alloc = state_.alloc;
  state_.qps = workload_.qps_at(0, seed_);
  evaluate_window();
  return observation();
}

StepResult ClusterSim::step(const ActionVector& action) {
  if (!started_) throw ContractViolation("step called before reset");
  if (done()) throw ContractViolation("step called after the episode finished");
  if (action.services() != config_.n_services()) {
    throw DimensionError("action covers " + std::to_string(action.services()) + " services, expected " +
                         std::to_string(config_.n_services()));
  }
  state_.prev_alloc = state_.alloc;
  state_.alloc = fit_to_nodes(action);
  ++state_.step;
  state_.qps = workload_.qps_at(state_.step, seed_);
  evaluate_window();
  return StepResult{observation(), raw_metrics(), done()};
}

void ClusterSim::evaluate_window() {
  const std::size_t n = config_.n_services();
  state_.cpu_used.assign(n, 0.0);
  state_.mem_used.assign(n, 0.0);
  state_.latency_ms.assign(n, 0.0);
  const LatencyModel& model = config_.latency;
  std::normal_distribution<double> jitter(0.0, model.noise_sigma > 0.0 ? model.noise_sigma : 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const ServiceSpec& s = config_.services[i];
    const NodeSpec& home = config_.node(s.home_node);
    const ServiceWindow w =
        evaluate_service(s, home, model, state_.alloc.cpu(i), state_.alloc.mem(i), state_.qps[i]);
    double latency = w.latency_ms;
    if (model.noise_sigma > 0.0) {
      const double floor_ms = s.base_service_ms.value_or(model.base_service_ms) + network_ms(home);
      latency = std::clamp(latency * (1.0 + jitter(noise_rng_)), floor_ms, model.saturation_cap_ms);
    }
    state_.cpu_used[i] = w.cpu_used;
    state_.mem_used[i] = w.mem_used;
    state_.latency_ms[i] = latency;
  }
}

RawMetrics ClusterSim::raw_metrics() const {
  RawMetrics raw(config_.n_services());
  raw.cpu_used = state_.cpu_used;
  raw.mem_used = state_.mem_used;
  raw.latency_ms = state_.latency_ms;
  raw.qps = state_.qps;
  raw.cpu_alloc.assign(state_.alloc.cpu().begin(), state_.alloc.cpu().end());
  raw.mem_alloc.assign(state_.alloc.mem().begin(), state_.alloc.mem().end());
  return raw;
}

StateVector ClusterSim::observation() const {
  return normalize_state(raw_metrics(), config_.normalization);
}

}  // namespace td3sched
