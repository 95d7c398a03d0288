#include "td3sched/domain.hpp"

#include <algorithm>
#include <cmath>

#include "td3sched/errors.hpp"

namespace td3sched {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

void require_finite(double value, const std::string& field) {
  if (!std::isfinite(value)) throw ValidationError("non-finite value in " + field);
}

void check_field(const std::vector<double>& values, std::size_t n, const char* field) {
  if (values.size() != n) {
    throw DimensionError(std::string(field) + " has " + std::to_string(values.size()) +
                         " entries, expected " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::string name = std::string(field) + "[" + std::to_string(i) + "]";
    require_finite(values[i], name);
    if (values[i] < 0.0) throw ValidationError("negative value in " + name);
  }
}

}  // namespace

std::string_view to_string(Tier tier) { return tier == Tier::edge ? "edge" : "cloud"; }

Tier tier_from_string(std::string_view text) {
  if (text == "edge") return Tier::edge;
  if (text == "cloud") return Tier::cloud;
  throw ValidationError("unknown tier '" + std::string(text) + "'");
}

NodeSpec NodeSpec::with_defaults(int node_id, Tier tier) {
  if (tier == Tier::edge) return NodeSpec{node_id, tier, 2.0, 4096.0, 5.0};
  return NodeSpec{node_id, tier, 8.0, 16384.0, 40.0};
}

void NodeSpec::validate() const {
  const std::string who = "node " + std::to_string(node_id);
  require_finite(cpu_capacity, who + " cpu_capacity");
  require_finite(mem_capacity, who + " mem_capacity");
  require_finite(base_network_latency_ms, who + " base_network_latency_ms");
  if (cpu_capacity <= 0.0) throw ValidationError(who + ": cpu_capacity must be > 0");
  if (mem_capacity <= 0.0) throw ValidationError(who + ": mem_capacity must be > 0");
  if (base_network_latency_ms < 0.0) throw ValidationError(who + ": negative network latency");
}

void ServiceSpec::validate() const {
  const std::string who = "service " + std::to_string(service_id) + " (" + name + ")";
  for (auto [value, field] : {std::pair{cpu_cost_per_request, "cpu_cost_per_request"},
                              std::pair{mem_floor_mb, "mem_floor_mb"},
                              std::pair{mem_per_qps_mb, "mem_per_qps_mb"}}) {
    require_finite(value, who + " " + field);
    if (value < 0.0) throw ValidationError(who + ": negative " + field);
  }
  if (!(initial_cpu_request >= kCpuMin && initial_cpu_request <= kCpuMax)) {
    throw ValidationError(who + ": initial_cpu_request outside [0.1, 2.0]");
  }
  if (!(initial_mem_request >= kMemMin && initial_mem_request <= kMemMax)) {
    throw ValidationError(who + ": initial_mem_request outside [64, 2048]");
  }
  if (base_service_ms && !(std::isfinite(*base_service_ms) && *base_service_ms > 0.0)) {
    throw ValidationError(who + ": base_service_ms must be positive");
  }
}

std::vector<NodeSpec> default_nodes() {
  std::vector<NodeSpec> nodes;
  for (int i = 0; i < 4; ++i) nodes.push_back(NodeSpec::with_defaults(i, Tier::edge));
  for (int i = 4; i < 8; ++i) nodes.push_back(NodeSpec::with_defaults(i, Tier::cloud));
  return nodes;
}

std::vector<ServiceSpec> default_services() {
  struct Row {
    const char* name;
    double cpu_cost;
    double mem_floor;
    double mem_per_qps;
    double cpu_request;
    double mem_request;
  };
  // Static requests are sized for the normal scenario (100 req/s, uniform
  // split): about 75% CPU utilization on the edge services and 55% on the
  // cloud ones, with memory just above the normal-load working set.
  static constexpr Row rows[] = {
      {"frontend", 0.024, 200.0, 8.0, 0.40, 384.0},
      {"user", 0.016, 150.0, 4.0, 0.27, 256.0},
      {"cart", 0.020, 180.0, 6.0, 0.33, 320.0},
      {"catalogue", 0.016, 150.0, 4.0, 0.27, 256.0},
      {"shipping", 0.012, 120.0, 3.0, 0.27, 192.0},
      {"orders", 0.024, 200.0, 8.0, 0.55, 384.0},
      {"payment", 0.008, 100.0, 2.0, 0.18, 160.0},
      {"queue-master", 0.012, 120.0, 4.0, 0.27, 224.0},
  };
  std::vector<ServiceSpec> services;
  int id = 0;
  for (const Row& row : rows) {
    ServiceSpec spec;
    spec.service_id = id;
    spec.name = row.name;
    spec.home_node = id;
    spec.cpu_cost_per_request = row.cpu_cost;
    spec.mem_floor_mb = row.mem_floor;
    spec.mem_per_qps_mb = row.mem_per_qps;
    spec.initial_cpu_request = row.cpu_request;
    spec.initial_mem_request = row.mem_request;
    services.push_back(spec);
    ++id;
  }
  return services;
}

NormalizationConfig NormalizationConfig::for_latency_target(double l_target_ms, double q_max) {
  return NormalizationConfig{2.0 * l_target_ms, q_max};
}

void NormalizationConfig::validate() const {
  if (!(std::isfinite(l_max_ms) && l_max_ms > 0.0)) throw ValidationError("l_max_ms must be positive");
  if (!(std::isfinite(q_max) && q_max > 0.0)) throw ValidationError("q_max must be positive");
}

RawMetrics::RawMetrics(std::size_t n)
    : cpu_used(n), cpu_alloc(n), mem_used(n), mem_alloc(n), latency_ms(n), qps(n) {}

void RawMetrics::validate() const {
  const std::size_t n = latency_ms.size();
  check_field(cpu_used, n, "cpu_used");
  check_field(cpu_alloc, n, "cpu_alloc");
  check_field(mem_used, n, "mem_used");
  check_field(mem_alloc, n, "mem_alloc");
  check_field(latency_ms, n, "latency_ms");
  check_field(qps, n, "qps");
  for (std::size_t i = 0; i < n; ++i) {
    if (cpu_alloc[i] <= 0.0) throw ValidationError("cpu_alloc[" + std::to_string(i) + "] must be > 0");
    if (mem_alloc[i] <= 0.0) throw ValidationError("mem_alloc[" + std::to_string(i) + "] must be > 0");
  }
}

StateVector::StateVector(std::size_t n_services) : values_(4 * n_services, 0.0) {}

StateVector StateVector::from_flat(std::span<const double> flat) {
  if (flat.size() % 4 != 0) {
    throw DimensionError("state length " + std::to_string(flat.size()) + " is not a multiple of 4");
  }
  StateVector s;
  s.values_.reserve(flat.size());
  for (std::size_t j = 0; j < flat.size(); ++j) {
    require_finite(flat[j], "state[" + std::to_string(j) + "]");
    s.values_.push_back(clamp01(flat[j]));
  }
  return s;
}

ActionVector::ActionVector(std::vector<double> cpu, std::vector<double> mem)
    : cpu_(std::move(cpu)), mem_(std::move(mem)) {
  if (cpu_.size() != mem_.size()) {
    throw DimensionError("action has " + std::to_string(cpu_.size()) + " cpu and " +
                         std::to_string(mem_.size()) + " mem entries");
  }
  for (std::size_t i = 0; i < cpu_.size(); ++i) {
    require_finite(cpu_[i], "cpu_alloc[" + std::to_string(i) + "]");
    require_finite(mem_[i], "mem_alloc[" + std::to_string(i) + "]");
    cpu_[i] = std::clamp(cpu_[i], kCpuMin, kCpuMax);
    mem_[i] = std::clamp(mem_[i], kMemMin, kMemMax);
  }
}

ActionVector ActionVector::from_flat(std::span<const double> flat) {
  if (flat.size() % 2 != 0) {
    throw DimensionError("action length " + std::to_string(flat.size()) + " is odd");
  }
  const std::size_t n = flat.size() / 2;
  return ActionVector({flat.begin(), flat.begin() + n}, {flat.begin() + n, flat.end()});
}

ActionVector ActionVector::uniform(std::size_t n, double cpu, double mem) {
  return ActionVector(std::vector<double>(n, cpu), std::vector<double>(n, mem));
}

std::vector<double> ActionVector::flat() const {
  std::vector<double> out(cpu_);
  out.insert(out.end(), mem_.begin(), mem_.end());
  return out;
}

void Transition::validate() const {
  if (state.size() != next_state.size()) {
    throw DimensionError("state and next_state differ in length");
  }
  if (4 * action.services() != state.size()) {
    throw DimensionError("action covers " + std::to_string(action.services()) +
                         " services but state covers " + std::to_string(state.services()));
  }
  if (!std::isfinite(reward)) throw ValidationError("non-finite reward");
}

StateVector normalize_state(const RawMetrics& raw, const NormalizationConfig& norm) {
  raw.validate();
  norm.validate();
  const std::size_t n = raw.services();
  std::vector<double> flat(4 * n);
  for (std::size_t i = 0; i < n; ++i) {
    flat[i] = clamp01(raw.cpu_used[i] / raw.cpu_alloc[i]);
    flat[n + i] = clamp01(raw.mem_used[i] / raw.mem_alloc[i]);
    flat[2 * n + i] = clamp01(raw.latency_ms[i] / norm.l_max_ms);
    flat[3 * n + i] = clamp01(raw.qps[i] / norm.q_max);
  }
  return StateVector::from_flat(flat);
}

double cpu_from_unit(double u) {
  return kCpuMin + (std::clamp(u, -1.0, 1.0) + 1.0) / 2.0 * (kCpuMax - kCpuMin);
}

double mem_from_unit(double u) {
  return kMemMin + (std::clamp(u, -1.0, 1.0) + 1.0) / 2.0 * (kMemMax - kMemMin);
}

double unit_from_cpu(double cpu) { return 2.0 * (cpu - kCpuMin) / (kCpuMax - kCpuMin) - 1.0; }

double unit_from_mem(double mem) { return 2.0 * (mem - kMemMin) / (kMemMax - kMemMin) - 1.0; }

ActionVector action_from_unit(std::span<const double> unit) {
  if (unit.size() % 2 != 0) {
    throw DimensionError("unit action length " + std::to_string(unit.size()) + " is odd");
  }
  const std::size_t n = unit.size() / 2;
  std::vector<double> cpu(n);
  std::vector<double> mem(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(unit[i]) || !std::isfinite(unit[n + i])) {
      throw ValidationError("non-finite unit action component");
    }
    cpu[i] = cpu_from_unit(unit[i]);
    mem[i] = mem_from_unit(unit[n + i]);
  }
  return ActionVector(std::move(cpu), std::move(mem));
}

std::vector<double> unit_from_action(const ActionVector& action) {
  const std::size_t n = action.services();
  std::vector<double> unit(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    unit[i] = unit_from_cpu(action.cpu(i));
    unit[n + i] = unit_from_mem(action.mem(i));
  }
  return unit;
}

}  // namespace td3sched
