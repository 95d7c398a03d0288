#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "td3sched/agent.hpp"
#include "td3sched/basek.hpp"
#include "td3sched/cluster_sim.hpp"
#include "td3sched/reward.hpp"
#include "td3sched/workload.hpp"

namespace td3sched {

inline constexpr int kConfigVersion = 1;

// Workload preset: normal_100, high_300, or trace:<path>.
struct Scenario {
  enum class Kind { normal_100, high_300, trace };
  Kind kind = Kind::normal_100;
  std::string trace_path;

  static Scenario parse(std::string_view text);
  std::string name() const;
  double constant_rate() const;  // 100 or 300 for the presets

  bool operator==(const Scenario&) const = default;
};

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::td3;
  int episodes = 50;
  int steps_per_episode = 20;
  Scenario scenario;
  std::string workload_weights = "uniform";  // uniform | frontend_heavy
  double workload_noise_sigma = 0.0;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3};
  SimConfig sim;
  AgentConfig agent;
  RewardConfig reward;
  std::filesystem::path output_dir = "runs/td3";
  bool record_wall_time = true;

  void validate() const;
};

// Strict parse: every key optional, unknown keys rejected with their path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

// Fully resolved document (every field, defaults included).
nlohmann::json to_json(const ExperimentConfig& config);

// FNV-1a 64 of the canonical resolved document, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

WorkloadSource make_workload(const ExperimentConfig& config);

}  // namespace td3sched
