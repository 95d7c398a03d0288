#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace td3sched {

// Per-service allocation box.
inline constexpr double kCpuMin = 0.1;
inline constexpr double kCpuMax = 2.0;
inline constexpr double kMemMin = 64.0;
inline constexpr double kMemMax = 2048.0;

enum class Tier { edge, cloud };

std::string_view to_string(Tier tier);
Tier tier_from_string(std::string_view text);

struct NodeSpec {
  int node_id = 0;
  Tier tier = Tier::edge;
  double cpu_capacity = 2.0;             // cores
  double mem_capacity = 4096.0;          // MB
  double base_network_latency_ms = 5.0;  // one-way request path to the node

  // Tier defaults: edge 2 cores / 4 GB / 5 ms, cloud 8 cores / 16 GB / 40 ms.
  static NodeSpec with_defaults(int node_id, Tier tier);

  void validate() const;
};

struct ServiceSpec {
  int service_id = 0;
  std::string name;
  int home_node = 0;
  double cpu_cost_per_request = 0.01;  // core-seconds per request
  double mem_floor_mb = 128.0;
  double mem_per_qps_mb = 4.0;  // MB per request/s
  double initial_cpu_request = 0.5;
  double initial_mem_request = 256.0;
  // Overrides the latency model's base service time when set.
  std::optional<double> base_service_ms;

  void validate() const;
};

// Four nodes per tier, ids 0-3 edge and 4-7 cloud.
std::vector<NodeSpec> default_nodes();

// Eight-service storefront roster, service i homed on node i.
std::vector<ServiceSpec> default_services();

struct NormalizationConfig {
  double l_max_ms = 300.0;  // 2 x latency target
  double q_max = 400.0;     // req/s

  static NormalizationConfig for_latency_target(double l_target_ms, double q_max = 400.0);
  void validate() const;
};

// Raw per-service observations before normalization.
struct RawMetrics {
  std::vector<double> cpu_used;   // cores
  std::vector<double> cpu_alloc;  // cores
  std::vector<double> mem_used;   // MB
  std::vector<double> mem_alloc;  // MB
  std::vector<double> latency_ms;
  std::vector<double> qps;

  explicit RawMetrics(std::size_t n_services = 0);

  std::size_t services() const noexcept { return latency_ms.size(); }

  // Throws DimensionError on ragged vectors, ValidationError naming the
  // offending field on negative or non-finite values.
  void validate() const;
};

// Normalized observation, flattened as [cpu_util | mem_util | latency | qps].
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(std::size_t n_services);

  // Length must be a multiple of 4; components are clamped into [0, 1].
  static StateVector from_flat(std::span<const double> flat);

  std::size_t services() const noexcept { return values_.size() / 4; }
  std::size_t size() const noexcept { return values_.size(); }

  double cpu_util(std::size_t i) const { return values_[i]; }
  double mem_util(std::size_t i) const { return values_[services() + i]; }
  double latency_norm(std::size_t i) const { return values_[2 * services() + i]; }
  double qps_norm(std::size_t i) const { return values_[3 * services() + i]; }

  std::span<const double> flat() const noexcept { return values_; }

  bool operator==(const StateVector&) const = default;

 private:
  std::vector<double> values_;
};

// Per-service CPU/memory allocation, flattened as [cpu | mem]. Always
// inside the box: construction clamps every component.
class ActionVector {
 public:
  ActionVector() = default;
  ActionVector(std::vector<double> cpu, std::vector<double> mem);

  static ActionVector from_flat(std::span<const double> flat);
  static ActionVector uniform(std::size_t n_services, double cpu, double mem);

  std::size_t services() const noexcept { return cpu_.size(); }

  double cpu(std::size_t i) const { return cpu_[i]; }
  double mem(std::size_t i) const { return mem_[i]; }
  std::span<const double> cpu() const noexcept { return cpu_; }
  std::span<const double> mem() const noexcept { return mem_; }

  std::vector<double> flat() const;

  bool operator==(const ActionVector&) const = default;

 private:
  std::vector<double> cpu_;
  std::vector<double> mem_;
};

struct Transition {
  StateVector state;
  ActionVector action;
  double reward = 0.0;
  StateVector next_state;
  bool done = false;

  void validate() const;
};

StateVector normalize_state(const RawMetrics& raw, const NormalizationConfig& norm);

// Affine map from the actor's tanh range onto the allocation box. Inputs
// outside [-1, 1] are clamped first.
ActionVector action_from_unit(std::span<const double> unit);

std::vector<double> unit_from_action(const ActionVector& action);

double cpu_from_unit(double u);
double mem_from_unit(double u);
double unit_from_cpu(double cpu);
double unit_from_mem(double mem);

}  // namespace td3sched
