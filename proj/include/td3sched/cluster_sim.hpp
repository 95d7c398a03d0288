#pragma once

#include <cstdint>
#include <vector>

#include "td3sched/domain.hpp"
#include "td3sched/random.hpp"
#include "td3sched/workload.hpp"

namespace td3sched {

struct LatencyModel {
  double base_service_ms = 20.0;
  double saturation_cap_ms = 1000.0;
  double mem_pressure_multiplier = 2.0;
  double rho_cap = 0.99;
  // Multiplicative measurement jitter on latency; 0 disables it.
  double noise_sigma = 0.02;
};

struct SimConfig {
  std::vector<ServiceSpec> services = default_services();
  std::vector<NodeSpec> nodes = default_nodes();
  double l_target_ms = 150.0;
  int episode_len = 20;
  double step_duration_s = 30.0;
  LatencyModel latency;
  NormalizationConfig normalization = NormalizationConfig::for_latency_target(150.0);
  std::uint64_t seed = 0;

  std::size_t n_services() const noexcept { return services.size(); }
  const NodeSpec& node(int node_id) const;
  void validate() const;
};

// Raw (pre-normalization) quantities of the current window.
struct SimState {
  int step = 0;
  ActionVector alloc;
  ActionVector prev_alloc;
  std::vector<double> qps;
  std::vector<double> cpu_used;
  std::vector<double> mem_used;
  std::vector<double> latency_ms;
};

struct StepResult {
  StateVector obs;
  RawMetrics raw;
  bool done = false;
};

double network_ms(const NodeSpec& node);

// Fluid-flow model of one 30 s window for a single service. Exposed for
// testing; noise is applied by the simulator afterwards.
struct ServiceWindow {
  double rho = 0.0;
  double latency_ms = 0.0;
  double cpu_used = 0.0;
  double mem_used = 0.0;
  bool mem_pressure = false;
};

ServiceWindow evaluate_service(const ServiceSpec& service, const NodeSpec& home, const LatencyModel& model,
                               double cpu_alloc, double mem_alloc, double qps);

// Discrete-time simulator of the cluster. Single-threaded; independent
// instances share nothing.
class ClusterSim {
 public:
  ClusterSim(SimConfig config, WorkloadSource workload);

  StateVector reset(std::uint64_t seed);
  StepResult step(const ActionVector& action);

  const SimConfig& config() const noexcept { return config_; }
  const SimState& state() const noexcept { return state_; }
  bool done() const noexcept { return state_.step >= config_.episode_len; }
  RawMetrics raw_metrics() const;
  StateVector observation() const;

  ActionVector initial_allocation() const;

  // Shrinks allocations on over-subscribed nodes. Only the part above the
  // box minimum is scaled, so the result stays inside the box and fits.
  ActionVector fit_to_nodes(const ActionVector& action) const;

 private:
  void evaluate_window();

  SimConfig config_;
  WorkloadSource workload_;
  SimState state_;
  Rng noise_rng_;
  std::uint64_t seed_ = 0;
  bool started_ = false;
};

}  // namespace td3sched
