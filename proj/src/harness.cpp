#include "td3sched/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "td3sched/actor_critic.hpp"
#include "td3sched/basek.hpp"
#include "td3sched/dqn.hpp"
#include "td3sched/errors.hpp"

namespace td3sched {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::array<double, 4> metric_values(const EpisodeMetrics& m) {
  return {m.mean_latency_ms, m.resource_efficiency, m.slo_violation_rate, m.total_reward};
}

MetricStat stat_of(const std::vector<double>& xs) {
  MetricStat s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

std::ofstream open_for_write(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish_write(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

void write_json_file(const fs::path& path, const json& doc) {
  auto out = open_for_write(path);
  out << doc.dump(2) << '\n';
  finish_write(out, path);
}

std::string metrics_row(const EpisodeMetrics& m) {
  std::string row = std::to_string(m.episode);
  row += ',';
  row += std::to_string(m.seed);
  for (double v : {m.mean_latency_ms, m.resource_efficiency, m.slo_violation_rate, m.total_reward, m.wall_time_s}) {
    row += ',';
    row += format_double(v);
  }
  return row;
}

template <typename T>
T parse_field(std::string_view text, std::size_t line, const char* name) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("bad " + std::string(name) + " value '" + std::string(text) + "'", line);
  }
  return value;
}

std::string seed_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

json manifest_json(const ExperimentConfig& config, const SeedRun* run, std::uint64_t seed, bool ok,
                   const std::string& error, const std::string& error_category, bool has_params) {
  json m = {
      {"manifest_version", kManifestVersion},
      {"status", ok ? "ok" : "failed"},
      {"algorithm", std::string(to_string(config.algorithm))},
      {"scenario", config.scenario.name()},
      {"seed", seed},
      {"config_hash", config_hash(config)},
      {"config_version", kConfigVersion},
      {"tool_version", TD3SCHED_VERSION},
      {"episodes", config.episodes},
      {"steps_per_episode", config.steps_per_episode},
  };
  if (run != nullptr) {
    m["episodes_completed"] = run->metrics.size();
    m["env_steps"] = run->env_steps;
    m["critic_updates"] = run->critic_updates;
    m["actor_updates"] = run->actor_updates;
  }
  if (ok && has_params) {
    m["params_file"] = "policy.params";
    m["params_format_version"] = 1;
  }
  if (!ok) {
    m["error_category"] = error_category;
    m["error"] = error;
  }
  return m;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw ContractViolation("cannot format number");
  return std::string(buf, ptr);
}

std::uint64_t episode_seed(std::uint64_t seed, int episode) {
  return seed ^ (static_cast<std::uint64_t>(episode) * 0x9E3779B97F4A7C15ULL);
}

ClusterSim make_sim(const ExperimentConfig& config) { return ClusterSim(config.sim, make_workload(config)); }

ActionVector initial_requests(const SimConfig& sim) {
  std::vector<double> cpu;
  std::vector<double> mem;
  for (const ServiceSpec& s : sim.services) {
    cpu.push_back(s.initial_cpu_request);
    mem.push_back(s.initial_mem_request);
  }
  return ActionVector(std::move(cpu), std::move(mem));
}

std::unique_ptr<Agent> make_agent(const ExperimentConfig& config, std::uint64_t seed) {
  return make_agent(config.algorithm, config.sim.n_services(), config.agent, initial_requests(config.sim), seed);
}

EpisodeMetrics run_episode(ClusterSim& sim, Agent& agent, const RewardConfig& reward, std::uint64_t seed,
                           int episode, const EpisodeOptions& options, long& env_steps) {
  const auto start = std::chrono::steady_clock::now();
  const double l_target = sim.config().l_target_ms;
  StateVector state = sim.reset(episode_seed(seed, episode));
  std::vector<StepRecord> trajectory;
  trajectory.reserve(static_cast<std::size_t>(sim.config().episode_len));
  while (!sim.done()) {
    const ActionVector current = sim.state().alloc;
    ActionVector action = agent.act(state, current, options.explore);
    StepResult result = sim.step(action);
    ++env_steps;
    const RewardBreakdown r =
        compute_reward(result.raw, sim.state().alloc, sim.state().prev_alloc, l_target, reward);
    if (options.learn) {
      agent.observe(Transition{state, std::move(action), r.total, result.obs, result.done});
      agent.train_step();
    }
    trajectory.push_back(StepRecord{std::move(result.raw), r.total});
    state = std::move(result.obs);
    if (result.done) break;
  }
  EpisodeMetrics m = episode_metrics(trajectory, l_target);
  m.episode = episode;
  m.seed = seed;
  if (options.record_wall_time) {
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return m;
}

void collect_counters(const Agent& agent, long& critic_updates, long& actor_updates) {
  critic_updates = 0;
  actor_updates = 0;
  if (const auto* ac = dynamic_cast<const ActorCriticAgent*>(&agent)) {
    critic_updates = ac->critic_update_count();
    actor_updates = ac->actor_update_count();
  } else if (const auto* dqn = dynamic_cast<const DqnAgent*>(&agent)) {
    critic_updates = dqn->train_count();
  }
}

SeedRun train_seed(const ExperimentConfig& config, std::uint64_t seed, const EpisodeCallback& on_episode) {
  SeedRun run;
  run.seed = seed;
  run.agent = make_agent(config, seed);
  ClusterSim sim = make_sim(config);
  const EpisodeOptions options{true, true, config.record_wall_time};
  for (int ep = 1; ep <= config.episodes; ++ep) {
    run.metrics.push_back(run_episode(sim, *run.agent, config.reward, seed, ep, options, run.env_steps));
    if (on_episode) on_episode(run.metrics.back());
  }
  collect_counters(*run.agent, run.critic_updates, run.actor_updates);
  return run;
}

std::vector<EpisodeMetrics> evaluate_agent(const ExperimentConfig& config, Agent& agent, std::uint64_t seed,
                                           int episodes) {
  if (episodes < 1) throw ValidationError("evaluation needs at least one episode");
  ClusterSim sim = make_sim(config);
  const EpisodeOptions options{false, false, config.record_wall_time};
  std::vector<EpisodeMetrics> out;
  long steps = 0;
  for (int ep = 1; ep <= episodes; ++ep) out.push_back(run_episode(sim, agent, config.reward, seed, ep, options, steps));
  return out;
}

TrainingResult run_training(const ExperimentConfig& config) {
  config.validate();
  TrainingResult result;
  result.output_dir = config.output_dir;
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create " + config.output_dir.string() + ": " + ec.message());
  write_json_file(config.output_dir / "config.json", to_json(config));

  for (std::uint64_t seed : config.seeds) {
    SeedStatus status;
    status.seed = seed;
    status.dir = config.output_dir / seed_dir_name(seed);
    fs::create_directories(status.dir, ec);
    if (ec) throw IoError("cannot create " + status.dir.string() + ": " + ec.message());

    const fs::path csv_path = status.dir / "metrics.csv";
    auto csv = open_for_write(csv_path, std::ios::out | std::ios::trunc);
    csv << kMetricsHeader << '\n';
    finish_write(csv, csv_path);

    SeedRun run;
    try {
      run = train_seed(config, seed, [&](const EpisodeMetrics& m) {
        csv << metrics_row(m) << '\n';
        finish_write(csv, csv_path);
      });
      if (run.agent->has_policy_params()) run.agent->save_policy(status.dir / "policy.params");
    } catch (const Error& e) {
      write_json_file(status.dir / "manifest.json",
                      manifest_json(config, nullptr, seed, false, e.what(), e.category(), false));
      throw;
    }
    write_json_file(status.dir / "manifest.json",
                    manifest_json(config, &run, seed, true, {}, {}, run.agent->has_policy_params()));
    status.ok = true;
    result.metrics.insert(result.metrics.end(), run.metrics.begin(), run.metrics.end());
    result.seeds.push_back(std::move(status));
  }
  export_csv(result.metrics, config.output_dir / "metrics.csv");
  return result;
}

std::vector<EpisodeMetrics> run_evaluation(const ExperimentConfig& config, const fs::path& params, int episodes) {
  config.validate();
  std::vector<EpisodeMetrics> out;
  for (std::uint64_t seed : config.seeds) {
    std::unique_ptr<Agent> agent = make_agent(config, seed);
    if (agent->has_policy_params()) {
      if (params.empty()) throw ConfigError(std::string(to_string(config.algorithm)) + " evaluation needs --params");
      agent->load_policy(params);
    }
    const std::uint64_t before = agent->policy_checksum();
    std::vector<EpisodeMetrics> m = evaluate_agent(config, *agent, seed, episodes);
    if (agent->policy_checksum() != before) throw ContractViolation("evaluation modified policy parameters");
    out.insert(out.end(), m.begin(), m.end());
  }
  return out;
}

void write_metrics_csv(std::ostream& out, std::span<const EpisodeMetrics> metrics) {
  out << kMetricsHeader << '\n';
  for (const EpisodeMetrics& m : metrics) out << metrics_row(m) << '\n';
}

void export_csv(std::span<const EpisodeMetrics> metrics, const fs::path& path) {
  auto out = open_for_write(path, std::ios::out | std::ios::trunc);
  write_metrics_csv(out, metrics);
  finish_write(out, path);
}

std::vector<EpisodeMetrics> parse_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing metrics header", 1);
  if (line != kMetricsHeader) throw ParseError("unexpected metrics header '" + line + "'", 1);
  std::vector<EpisodeMetrics> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) throw ParseError("empty row", line_no);
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 7) {
      throw ParseError("expected 7 fields, got " + std::to_string(fields.size()), line_no);
    }
    EpisodeMetrics m;
    m.episode = parse_field<int>(fields[0], line_no, "episode");
    m.seed = parse_field<std::uint64_t>(fields[1], line_no, "seed");
    m.mean_latency_ms = parse_field<double>(fields[2], line_no, "mean_latency_ms");
    m.resource_efficiency = parse_field<double>(fields[3], line_no, "resource_efficiency");
    m.slo_violation_rate = parse_field<double>(fields[4], line_no, "slo_violation_rate");
    m.total_reward = parse_field<double>(fields[5], line_no, "total_reward");
    m.wall_time_s = parse_field<double>(fields[6], line_no, "wall_time_s");
    out.push_back(m);
  }
  return out;
}

std::vector<EpisodeMetrics> read_metrics_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return parse_metrics_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

RunRow summarize_run(std::string label, std::string algorithm, const std::vector<std::vector<EpisodeMetrics>>& per_seed,
                     int last_window) {
  if (per_seed.empty()) throw ValidationError("run " + label + " has no seeds");
  RunRow row;
  row.label = std::move(label);
  row.algorithm = std::move(algorithm);
  row.seeds = static_cast<int>(per_seed.size());
  row.episodes = static_cast<int>(per_seed.front().size());
  if (row.episodes == 0) throw ValidationError("run " + row.label + " has no episodes");
  for (const auto& seed_metrics : per_seed) {
    if (static_cast<int>(seed_metrics.size()) != row.episodes) {
      throw ValidationError("run " + row.label + " has seeds with different episode counts");
    }
  }
  row.last_window = std::min(last_window, row.episodes);
  for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
    std::vector<double> all_means;
    std::vector<double> last_means;
    for (const auto& seed_metrics : per_seed) {
      double all = 0.0;
      double last = 0.0;
      for (int e = 0; e < row.episodes; ++e) {
        const double v = metric_values(seed_metrics[static_cast<std::size_t>(e)])[k];
        all += v;
        if (e >= row.episodes - row.last_window) last += v;
      }
      all_means.push_back(all / row.episodes);
      last_means.push_back(last / row.last_window);
    }
    row.all[k] = stat_of(all_means);
    row.last[k] = stat_of(last_means);
  }
  row.curve.assign(static_cast<std::size_t>(row.episodes), {});
  for (int e = 0; e < row.episodes; ++e) {
    std::array<double, 4>& point = row.curve[static_cast<std::size_t>(e)];
    for (const auto& seed_metrics : per_seed) {
      const auto v = metric_values(seed_metrics[static_cast<std::size_t>(e)]);
      for (std::size_t k = 0; k < 4; ++k) point[k] += v[k];
    }
    for (double& x : point) x /= static_cast<double>(per_seed.size());
  }
  return row;
}

ComparisonReport compare_runs(const std::vector<fs::path>& run_dirs) {
  if (run_dirs.size() < 2) throw ValidationError("compare needs at least two runs");
  ComparisonReport report;
  std::string first_label;
  double l_target = 0.0;
  for (const fs::path& dir : run_dirs) {
    const ExperimentConfig config = load_config(dir / "config.json");
    std::string label = dir.filename().string();
    if (label.empty()) label = dir.parent_path().filename().string();
    if (report.rows.empty()) {
      report.scenario = config.scenario.name();
      report.steps_per_episode = config.steps_per_episode;
      l_target = config.sim.l_target_ms;
      first_label = label;
    } else {
      if (config.scenario.name() != report.scenario) {
        throw ValidationError("incompatible runs: " + label + " uses scenario " + config.scenario.name() + " but " +
                              first_label + " uses " + report.scenario);
      }
      if (config.steps_per_episode != report.steps_per_episode) {
        throw ValidationError("incompatible runs: " + label + " uses " + std::to_string(config.steps_per_episode) +
                              " steps per episode but " + first_label + " uses " +
                              std::to_string(report.steps_per_episode));
      }
      if (config.sim.l_target_ms != l_target) {
        throw ValidationError("incompatible runs: " + label + " and " + first_label + " use different latency targets");
      }
    }
    std::vector<std::vector<EpisodeMetrics>> per_seed;
    for (std::uint64_t seed : config.seeds) {
      const fs::path seed_dir = dir / seed_dir_name(seed);
      std::ifstream manifest_in(seed_dir / "manifest.json");
      if (!manifest_in) throw IoError("run " + label + " has no manifest for seed " + std::to_string(seed));
      json manifest;
      try {
        manifest = json::parse(manifest_in);
      } catch (const json::exception& e) {
        throw ParseError((seed_dir / "manifest.json").string() + ": " + e.what(), 0);
      }
      if (manifest.value("status", std::string()) != "ok") {
        throw ValidationError("run " + label + " seed " + std::to_string(seed) + " did not complete");
      }
      per_seed.push_back(read_metrics_csv(seed_dir / "metrics.csv"));
    }
    report.rows.push_back(summarize_run(label, std::string(to_string(config.algorithm)), per_seed));
  }
  return report;
}

void write_report(std::ostream& out, const ComparisonReport& report) {
  out << "scenario: " << report.scenario << " (" << report.steps_per_episode << " steps/episode)\n";
  const RunRow& ref = report.rows.front();
  char buf[256];
  for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
    out << '\n' << kMetricNames[k] << '\n';
    std::snprintf(buf, sizeof buf, "%-20s %-9s %5s %14s %12s %14s %12s %16s\n", "run", "algorithm", "seeds",
                  "all_mean", "all_std", "last_mean", "last_std", "delta_last");
    out << buf;
    for (const RunRow& row : report.rows) {
      std::snprintf(buf, sizeof buf, "%-20s %-9s %5d %14.4f %12.4f %14.4f %12.4f %+16.4f\n", row.label.c_str(),
                    row.algorithm.c_str(), row.seeds, row.all[k].mean, row.all[k].std, row.last[k].mean,
                    row.last[k].std, row.last[k].mean - ref.last[k].mean);
      out << buf;
    }
  }
  out << "\nall = mean over every episode; last = mean over the final " << ref.last_window
      << " episodes; std across seeds; delta_last relative to " << ref.label << '\n';
}

void write_summary_csv(std::ostream& out, const ComparisonReport& report) {
  out << "run,algorithm,seeds,metric,window,episodes,mean,std\n";
  for (const RunRow& row : report.rows) {
    for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
      out << row.label << ',' << row.algorithm << ',' << row.seeds << ',' << kMetricNames[k] << ",all,"
          << row.episodes << ',' << format_double(row.all[k].mean) << ',' << format_double(row.all[k].std) << '\n';
      out << row.label << ',' << row.algorithm << ',' << row.seeds << ',' << kMetricNames[k] << ",last,"
          << row.last_window << ',' << format_double(row.last[k].mean) << ',' << format_double(row.last[k].std)
          << '\n';
    }
  }
}

void write_curves_csv(std::ostream& out, const ComparisonReport& report) {
  out << "run,algorithm,episode";
  for (std::string_view name : kMetricNames) out << ',' << name;
  out << '\n';
  for (const RunRow& row : report.rows) {
    for (std::size_t e = 0; e < row.curve.size(); ++e) {
      out << row.label << ',' << row.algorithm << ',' << (e + 1);
      for (double v : row.curve[e]) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

void write_report_files(const ComparisonReport& report, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    auto out = open_for_write(dir / "report.txt", std::ios::out | std::ios::trunc);
    write_report(out, report);
    finish_write(out, dir / "report.txt");
  }
  {
    auto out = open_for_write(dir / "summary.csv", std::ios::out | std::ios::trunc);
    write_summary_csv(out, report);
    finish_write(out, dir / "summary.csv");
  }
  {
    auto out = open_for_write(dir / "curves.csv", std::ios::out | std::ios::trunc);
    write_curves_csv(out, report);
    finish_write(out, dir / "curves.csv");
  }
}

}  // namespace td3sched
