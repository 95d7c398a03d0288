#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "td3sched/config.hpp"
#include "td3sched/errors.hpp"
#include "td3sched/harness.hpp"
#include "td3sched/workload.hpp"

namespace fs = std::filesystem;
using namespace td3sched;

namespace {

int fail(const std::string& category, const std::string& message) {
  std::cerr << nlohmann::json{{"error", category}, {"message", message}}.dump() << '\n';
  return 1;
}

int cmd_train(const std::string& config_path, const std::string& algo, std::optional<std::uint64_t> seed,
              const std::string& out) {
  ExperimentConfig config = load_config(config_path);
  if (!algo.empty()) config.algorithm = algorithm_from_string(algo);
  if (seed) config.seeds = {*seed};
  if (!out.empty()) config.output_dir = out;
  const TrainingResult result = run_training(config);
  for (const SeedStatus& s : result.seeds) {
    std::cout << "seed " << s.seed << ": ok (" << s.dir.string() << ")\n";
  }
  std::cout << "metrics: " << (result.output_dir / "metrics.csv").string() << '\n';
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& params, int episodes,
             std::optional<std::uint64_t> seed, const std::string& out) {
  ExperimentConfig config = load_config(config_path);
  if (seed) config.seeds = {*seed};
  const std::vector<EpisodeMetrics> metrics = run_evaluation(config, params, episodes);
  if (!out.empty()) export_csv(metrics, out);
  write_metrics_csv(std::cout, metrics);
  return 0;
}

int cmd_compare(const std::vector<std::string>& runs, const std::string& out) {
  std::vector<fs::path> dirs(runs.begin(), runs.end());
  const ComparisonReport report = compare_runs(dirs);
  write_report(std::cout, report);
  if (!out.empty()) write_report_files(report, out);
  return 0;
}

struct TraceOptions {
  std::string kind = "constant";
  std::string out;
  long steps = 20;
  std::size_t services = 8;
  std::string weights = "uniform";
  double rate = 100.0;
  double mean = 100.0;
  double amplitude = 50.0;
  double period = 20.0;
  double base_rate = 100.0;
  double burst_rate = 300.0;
  long burst_start = 5;
  long burst_len = 5;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

int cmd_gen_trace(const TraceOptions& o) {
  if (o.steps < 1) throw ValidationError("--steps must be >= 1");
  if (o.services < 1) throw ValidationError("--services must be >= 1");
  std::vector<double> weights;
  if (o.weights == "uniform") {
    weights = uniform_weights(o.services);
  } else if (o.weights == "frontend_heavy") {
    weights = frontend_heavy_weights(o.services);
  } else {
    throw ValidationError("--weights must be uniform or frontend_heavy");
  }
  std::optional<WorkloadSource> source;
  switch (workload_kind_from_string(o.kind)) {
    case WorkloadKind::constant:
      source = WorkloadSource::constant(o.rate, weights);
      break;
    case WorkloadKind::sinusoidal:
      source = WorkloadSource::sinusoidal(o.mean, o.amplitude, o.period, weights);
      break;
    case WorkloadKind::burst:
      source = WorkloadSource::burst(o.base_rate, o.burst_rate, o.burst_start, o.burst_len, weights);
      break;
    case WorkloadKind::trace:
      throw ValidationError("gen-trace generates constant, sinusoidal or burst workloads");
  }
  write_trace(fs::path(o.out), generate_trace(source->with_noise(o.noise), o.steps, o.seed));
  std::cout << "wrote " << o.steps * static_cast<long>(o.services) << " rows to " << o.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated cloud-edge resource scheduling with TD3 and baselines"};
  app.set_version_flag("--version", std::string(TD3SCHED_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::string algo;
  std::optional<std::uint64_t> seed;
  std::string out;

  auto* train = app.add_subcommand("train", "Train one algorithm for every configured seed");
  train->add_option("--config", config_path, "Experiment config (JSON)")->required();
  train->add_option("--algo", algo, "td3 | ddpg | dqn | basek (overrides the config)");
  train->add_option("--seed", seed, "Train this seed only");
  train->add_option("--out", out, "Output directory (overrides the config)");

  std::string params;
  int episodes = 1;
  auto* eval = app.add_subcommand("eval", "Greedy evaluation of saved policy parameters");
  eval->add_option("--config", config_path, "Experiment config (JSON)")->required();
  eval->add_option("--params", params, "Policy parameter file (not needed for basek)");
  eval->add_option("--episodes", episodes, "Episodes per seed")->required()->check(CLI::PositiveNumber);
  eval->add_option("--seed", seed, "Evaluate this seed only");
  eval->add_option("--out", out, "Also write the metrics CSV here");

  std::vector<std::string> runs;
  auto* compare = app.add_subcommand("compare", "Compare completed training runs");
  compare->add_option("--runs", runs, "Run directories")->required()->expected(2, -1);
  compare->add_option("--out", out, "Write report.txt, summary.csv and curves.csv here");

  TraceOptions trace;
  auto* gen = app.add_subcommand("gen-trace", "Write a synthetic step,service,qps trace");
  gen->add_option("--kind", trace.kind, "constant | sinusoidal | burst")->required();
  gen->add_option("--out", trace.out, "Output file")->required();
  gen->add_option("--steps", trace.steps, "Number of steps")->required();
  gen->add_option("--services", trace.services, "Number of services");
  gen->add_option("--weights", trace.weights, "uniform | frontend_heavy");
  gen->add_option("--rate", trace.rate, "Constant aggregate rate (req/s)");
  gen->add_option("--mean", trace.mean, "Sinusoid mean (req/s)");
  gen->add_option("--amplitude", trace.amplitude, "Sinusoid amplitude (req/s)");
  gen->add_option("--period", trace.period, "Sinusoid period (steps)");
  gen->add_option("--base-rate", trace.base_rate, "Burst base rate (req/s)");
  gen->add_option("--burst-rate", trace.burst_rate, "Burst rate (req/s)");
  gen->add_option("--burst-start", trace.burst_start, "First burst step");
  gen->add_option("--burst-len", trace.burst_len, "Burst length (steps)");
  gen->add_option("--noise", trace.noise, "Multiplicative per-step noise sigma");
  gen->add_option("--seed", trace.seed, "Noise seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*train) return cmd_train(config_path, algo, seed, out);
    if (*eval) return cmd_eval(config_path, params, episodes, seed, out);
    if (*compare) return cmd_compare(runs, out);
    if (*gen) return cmd_gen_trace(trace);
  } catch (const Error& e) {
    return fail(e.category(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return fail("usage", "no subcommand");
}
