#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "td3sched/agent.hpp"
#include "td3sched/cluster_sim.hpp"
#include "td3sched/config.hpp"
#include "td3sched/reward.hpp"

namespace td3sched {

inline constexpr int kManifestVersion = 1;
inline constexpr std::string_view kMetricsHeader =
    "episode,seed,mean_latency_ms,resource_efficiency,slo_violation_rate,total_reward,wall_time_s";

// Environment seed of one episode. Training and evaluation share it, so a
// non-learning policy sees the same trajectory in both.
std::uint64_t episode_seed(std::uint64_t seed, int episode);

ClusterSim make_sim(const ExperimentConfig& config);
ActionVector initial_requests(const SimConfig& sim);
std::unique_ptr<Agent> make_agent(const ExperimentConfig& config, std::uint64_t seed);

struct EpisodeOptions {
  bool explore = true;
  bool learn = true;
  bool record_wall_time = true;
};

// One episode of the observe -> act -> store -> train loop. Returns the
// episode metrics and adds the number of environment steps taken.
EpisodeMetrics run_episode(ClusterSim& sim, Agent& agent, const RewardConfig& reward, std::uint64_t seed,
                           int episode, const EpisodeOptions& options, long& env_steps);

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<EpisodeMetrics> metrics;
  long env_steps = 0;
  long critic_updates = 0;
  long actor_updates = 0;
  std::unique_ptr<Agent> agent;
};

// Counters for the learned agents; zero for the rule-based scheduler.
void collect_counters(const Agent& agent, long& critic_updates, long& actor_updates);

// In-memory training of one seed. `on_episode` (optional) sees every
// finished episode.
using EpisodeCallback = std::function<void(const EpisodeMetrics&)>;
SeedRun train_seed(const ExperimentConfig& config, std::uint64_t seed, const EpisodeCallback& on_episode = {});

// Greedy rollouts: no exploration, no buffer writes, no updates.
std::vector<EpisodeMetrics> evaluate_agent(const ExperimentConfig& config, Agent& agent, std::uint64_t seed,
                                           int episodes);

struct SeedStatus {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::filesystem::path dir;
};

struct TrainingResult {
  std::filesystem::path output_dir;
  std::vector<SeedStatus> seeds;
  std::vector<EpisodeMetrics> metrics;  // all seeds, config order
};

// Writes config.json, metrics.csv and seed_<S>/{metrics.csv, policy.params,
// manifest.json}. A seed that fails gets a manifest with status "failed";
// the error is rethrown after its artifacts are flagged.
TrainingResult run_training(const ExperimentConfig& config);

// Loads `params` into a fresh agent and evaluates it for every configured
// seed. The rule-based scheduler accepts an empty path.
std::vector<EpisodeMetrics> run_evaluation(const ExperimentConfig& config, const std::filesystem::path& params,
                                           int episodes);

void write_metrics_csv(std::ostream& out, std::span<const EpisodeMetrics> metrics);
void export_csv(std::span<const EpisodeMetrics> metrics, const std::filesystem::path& path);
std::vector<EpisodeMetrics> parse_metrics_csv(std::istream& in);
std::vector<EpisodeMetrics> read_metrics_csv(const std::filesystem::path& path);

// Comparison across completed runs.
inline constexpr std::array<std::string_view, 4> kMetricNames = {"mean_latency_ms", "resource_efficiency",
                                                                 "slo_violation_rate", "total_reward"};

struct MetricStat {
  double mean = 0.0;
  double std = 0.0;  // sample std across seeds; 0 for a single seed
};

struct RunRow {
  std::string label;
  std::string algorithm;
  int seeds = 0;
  int episodes = 0;
  int last_window = 0;
  std::array<MetricStat, 4> all{};
  std::array<MetricStat, 4> last{};
  // Per-episode means across seeds, one array per episode.
  std::vector<std::array<double, 4>> curve;
};

struct ComparisonReport {
  std::string scenario;
  int steps_per_episode = 0;
  std::vector<RunRow> rows;
};

inline constexpr int kLastWindow = 10;

// Per-seed episode means over all episodes and over the last `last_window`.
RunRow summarize_run(std::string label, std::string algorithm,
                     const std::vector<std::vector<EpisodeMetrics>>& per_seed, int last_window = kLastWindow);

ComparisonReport compare_runs(const std::vector<std::filesystem::path>& run_dirs);

void write_report(std::ostream& out, const ComparisonReport& report);
void write_summary_csv(std::ostream& out, const ComparisonReport& report);
void write_curves_csv(std::ostream& out, const ComparisonReport& report);
void write_report_files(const ComparisonReport& report, const std::filesystem::path& dir);

std::string format_double(double value);

}  // namespace td3sched
