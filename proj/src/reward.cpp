#include "td3sched/reward.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "td3sched/errors.hpp"

namespace td3sched {

namespace {

void require_size(std::size_t got, std::size_t expected, const char* what) {
  if (got != expected) {
    throw DimensionError(std::string(what) + " has " + std::to_string(got) + " entries, expected " +
                         std::to_string(expected));
  }
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

void RewardWeights::validate() const {
  for (double w : {alpha, beta, lambda, mu}) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("reward weights must be finite and >= 0");
  }
}

std::string_view to_string(LatencyPenaltyMode mode) {
  return mode == LatencyPenaltyMode::normalized ? "normalized" : "raw_ms";
}

LatencyPenaltyMode latency_penalty_mode_from_string(std::string_view text) {
  if (text == "normalized") return LatencyPenaltyMode::normalized;
  if (text == "raw_ms") return LatencyPenaltyMode::raw_ms;
  throw ValidationError("unknown latency penalty mode '" + std::string(text) + "'");
}

double latency_penalty(std::span<const double> latency_ms, double l_target_ms, LatencyPenaltyMode mode) {
  double excess = 0.0;
  for (double l : latency_ms) excess += std::max(0.0, l - l_target_ms);
  return mode == LatencyPenaltyMode::normalized ? -excess / l_target_ms : -excess;
}

double resource_waste(const ActionVector& alloc, std::span<const double> cpu_used,
                      std::span<const double> mem_used) {
  const std::size_t n = alloc.services();
  require_size(cpu_used.size(), n, "cpu_used");
  require_size(mem_used.size(), n, "mem_used");
  double waste = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    waste += clamp01((alloc.cpu(i) - cpu_used[i]) / alloc.cpu(i));
    waste += clamp01((alloc.mem(i) - mem_used[i]) / alloc.mem(i));
  }
  return -waste;
}

double slo_satisfaction(std::span<const double> latency_ms, double l_target_ms) {
  return static_cast<double>(
      std::count_if(latency_ms.begin(), latency_ms.end(), [&](double l) { return l <= l_target_ms; }));
}

double migration_cost(const ActionVector& action, const ActionVector& prev_action) {
  const std::size_t n = action.services();
  require_size(prev_action.services(), n, "prev_action");
  double cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cost += std::abs(action.cpu(i) - prev_action.cpu(i)) / (kCpuMax - kCpuMin);
    cost += std::abs(action.mem(i) - prev_action.mem(i)) / (kMemMax - kMemMin);
  }
  return -cost;
}

RewardBreakdown total_reward(const RewardInputs& in, const RewardConfig& config) {
  require_size(in.latency_ms.size(), in.alloc.services(), "latency");
  RewardBreakdown b;
  b.r_latency = latency_penalty(in.latency_ms, in.l_target_ms, config.latency_mode);
  b.r_waste = resource_waste(in.alloc, in.cpu_used, in.mem_used);
  b.r_slo = slo_satisfaction(in.latency_ms, in.l_target_ms);
  b.r_migration = migration_cost(in.alloc, in.prev_alloc);
  const RewardWeights& w = config.weights;
  b.total = w.alpha * b.r_latency + w.beta * b.r_waste + w.lambda * b.r_slo + w.mu * b.r_migration;
  return b;
}

RewardBreakdown compute_reward(const RawMetrics& raw, const ActionVector& alloc,
                               const ActionVector& prev_alloc, double l_target_ms,
                               const RewardConfig& config) {
  return total_reward(RewardInputs{raw.latency_ms, alloc, raw.cpu_used, raw.mem_used, prev_alloc, l_target_ms},
                      config);
}

EpisodeMetrics episode_metrics(std::span<const StepRecord> trajectory, double l_target_ms) {
  if (trajectory.empty()) throw ValidationError("episode_metrics needs a non-empty trajectory");
  EpisodeMetrics m;
  double latency_sum = 0.0;
  double efficiency_sum = 0.0;
  double violations = 0.0;
  for (const StepRecord& step : trajectory) {
    const RawMetrics& raw = step.raw;
    const std::size_t n = raw.services();
    if (n == 0) throw ValidationError("episode step without services");
    double step_latency = 0.0;
    double step_efficiency = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      step_latency += raw.latency_ms[i];
      step_efficiency += (clamp01(raw.cpu_used[i] / raw.cpu_alloc[i]) +
                          clamp01(raw.mem_used[i] / raw.mem_alloc[i])) / 2.0;
    }
    step_latency /= static_cast<double>(n);
    step_efficiency /= static_cast<double>(n);
    latency_sum += step_latency;
    efficiency_sum += step_efficiency;
    if (step_latency > l_target_ms) violations += 1.0;
    m.total_reward += step.reward;
  }
  const double steps = static_cast<double>(trajectory.size());
  m.mean_latency_ms = latency_sum / steps;
  m.resource_efficiency = efficiency_sum / steps;
  m.slo_violation_rate = violations / steps;
  return m;
}

}  // namespace td3sched
