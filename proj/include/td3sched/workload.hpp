#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace td3sched {

// One row of a replayable trace: request rate of one service during one
// 30-second window.
struct TraceRecord {
  long step_index = 0;
  int service_id = 0;
  double qps = 0.0;

  bool operator==(const TraceRecord&) const = default;
};

enum class WorkloadKind { constant, sinusoidal, burst, trace };

std::string_view to_string(WorkloadKind kind);
WorkloadKind workload_kind_from_string(std::string_view text);

std::vector<double> uniform_weights(std::size_t n_services);
// First service (the entry point) takes three shares, every other service one.
std::vector<double> frontend_heavy_weights(std::size_t n_services);

// Per-step, per-service request rate. Read-only after construction.
class WorkloadSource {
 public:
  static WorkloadSource constant(double rate, std::vector<double> weights);
  static WorkloadSource sinusoidal(double mean, double amplitude, double period_steps,
                                   std::vector<double> weights);
  static WorkloadSource burst(double base_rate, double burst_rate, long burst_start, long burst_len,
                              std::vector<double> weights);
  static WorkloadSource from_trace(const std::vector<TraceRecord>& records, std::size_t n_services);
  static WorkloadSource from_trace_file(const std::filesystem::path& path, std::size_t n_services);

  // Multiplicative per-step jitter, N(0, sigma) drawn from (seed, step).
  // Zero by default.
  WorkloadSource with_noise(double sigma) const;

  WorkloadKind kind() const noexcept { return kind_; }
  std::size_t services() const noexcept { return n_services_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  // Generator's aggregate rate before the per-service split and clamping.
  // For traces, the sum of the (held) row.
  double aggregate_rate(long step) const;

  std::vector<double> qps_at(long step, std::uint64_t seed) const;

 private:
  WorkloadSource() = default;

  WorkloadKind kind_ = WorkloadKind::constant;
  std::size_t n_services_ = 0;
  std::vector<double> weights_;
  double rate_ = 0.0;
  double mean_ = 0.0;
  double amplitude_ = 0.0;
  double period_steps_ = 1.0;
  double base_rate_ = 0.0;
  double burst_rate_ = 0.0;
  long burst_start_ = 0;
  long burst_len_ = 0;
  double noise_sigma_ = 0.0;
  std::vector<std::vector<double>> table_;  // [step][service], trace only
};

// Reads `step,service,qps` rows. Output is sorted by (step, service).
std::vector<TraceRecord> parse_trace(std::istream& in, std::size_t n_services);
std::vector<TraceRecord> load_trace(const std::filesystem::path& path, std::size_t n_services);

void write_trace(std::ostream& out, const std::vector<TraceRecord>& records);
void write_trace(const std::filesystem::path& path, const std::vector<TraceRecord>& records);

// Samples `steps` windows of a generator into trace rows.
std::vector<TraceRecord> generate_trace(const WorkloadSource& source, long steps, std::uint64_t seed);

}  // namespace td3sched
