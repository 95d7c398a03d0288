#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "td3sched/domain.hpp"

namespace td3sched {

struct RewardWeights {
  double alpha = 0.5;   // latency penalty
  double beta = 0.1;    // resource waste
  double lambda = 0.2;  // SLO satisfaction
  double mu = 0.1;      // migration cost

  void validate() const;
};

// normalized: excess latency measured in units of the target.
// raw_ms: excess latency in milliseconds (ablation only).
enum class LatencyPenaltyMode { normalized, raw_ms };

std::string_view to_string(LatencyPenaltyMode mode);
LatencyPenaltyMode latency_penalty_mode_from_string(std::string_view text);

struct RewardConfig {
  RewardWeights weights;
  LatencyPenaltyMode latency_mode = LatencyPenaltyMode::normalized;
};

struct RewardBreakdown {
  double r_latency = 0.0;
  double r_waste = 0.0;
  double r_slo = 0.0;
  double r_migration = 0.0;
  double total = 0.0;
};

double latency_penalty(std::span<const double> latency_ms, double l_target_ms,
                       LatencyPenaltyMode mode = LatencyPenaltyMode::normalized);

// Idle fraction of each allocation, usage capped at the allocation.
double resource_waste(const ActionVector& alloc, std::span<const double> cpu_used,
                      std::span<const double> mem_used);

// Number of services with latency <= target.
double slo_satisfaction(std::span<const double> latency_ms, double l_target_ms);

// Allocation change measured in unit-box coordinates (full range = 1).
double migration_cost(const ActionVector& action, const ActionVector& prev_action);

struct RewardInputs {
  std::span<const double> latency_ms;
  const ActionVector& alloc;
  std::span<const double> cpu_used;
  std::span<const double> mem_used;
  const ActionVector& prev_alloc;
  double l_target_ms;
};

RewardBreakdown total_reward(const RewardInputs& in, const RewardConfig& config);

RewardBreakdown compute_reward(const RawMetrics& raw, const ActionVector& alloc,
                               const ActionVector& prev_alloc, double l_target_ms,
                               const RewardConfig& config);

struct EpisodeMetrics {
  int episode = 0;
  std::uint64_t seed = 0;
  double mean_latency_ms = 0.0;
  double resource_efficiency = 0.0;
  double slo_violation_rate = 0.0;
  double total_reward = 0.0;
  double wall_time_s = 0.0;
};

struct StepRecord {
  RawMetrics raw;
  double reward = 0.0;
};

// Averages over the steps of one episode. episode/seed/wall_time are left
// for the caller to fill in.
EpisodeMetrics episode_metrics(std::span<const StepRecord> trajectory, double l_target_ms);

}  // namespace td3sched
