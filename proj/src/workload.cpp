#include "td3sched/workload.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "td3sched/errors.hpp"
#include "td3sched/random.hpp"

namespace td3sched {

namespace {

void check_weights(const std::vector<double>& weights) {
  if (weights.empty()) throw ValidationError("workload needs at least one service weight");
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("workload weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("workload weights must sum to 1");
}

void check_rate(double value, const char* field) {
  if (!std::isfinite(value) || value < 0.0) {
    throw ValidationError(std::string("workload ") + field + " must be finite and >= 0");
  }
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view field, const char* what, long line) {
  field = trim(field);
  T value{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw ParseError("malformed " + std::string(what) + " '" + std::string(field) + "'", line);
  }
  return value;
}

}  // namespace

std::string_view to_string(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::constant: return "constant";
    case WorkloadKind::sinusoidal: return "sinusoidal";
    case WorkloadKind::burst: return "burst";
    case WorkloadKind::trace: return "trace";
  }
  return "unknown";
}

WorkloadKind workload_kind_from_string(std::string_view text) {
  if (text == "constant") return WorkloadKind::constant;
  if (text == "sinusoidal") return WorkloadKind::sinusoidal;
  if (text == "burst") return WorkloadKind::burst;
  if (text == "trace") return WorkloadKind::trace;
  throw ValidationError("unknown workload kind '" + std::string(text) + "'");
}

std::vector<double> uniform_weights(std::size_t n) {
  if (n == 0) throw ValidationError("uniform_weights needs n > 0");
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

std::vector<double> frontend_heavy_weights(std::size_t n) {
  if (n == 0) throw ValidationError("frontend_heavy_weights needs n > 0");
  const double shares = static_cast<double>(n) + 2.0;
  std::vector<double> w(n, 1.0 / shares);
  w[0] = 3.0 / shares;
  return w;
}

WorkloadSource WorkloadSource::constant(double rate, std::vector<double> weights) {
  check_rate(rate, "rate");
  check_weights(weights);
  WorkloadSource s;
  s.kind_ = WorkloadKind::constant;
  s.n_services_ = weights.size();
  s.weights_ = std::move(weights);
  s.rate_ = rate;
  return s;
}

WorkloadSource WorkloadSource::sinusoidal(double mean, double amplitude, double period_steps,
                                          std::vector<double> weights) {
  check_rate(mean, "mean");
  if (!std::isfinite(amplitude)) throw ValidationError("workload amplitude must be finite");
  if (!(std::isfinite(period_steps) && period_steps > 0.0)) {
    throw ValidationError("workload period_steps must be > 0");
  }
  check_weights(weights);
  WorkloadSource s;
  s.kind_ = WorkloadKind::sinusoidal;
  s.n_services_ = weights.size();
  s.weights_ = std::move(weights);
  s.mean_ = mean;
  s.amplitude_ = amplitude;
  s.period_steps_ = period_steps;
  return s;
}

WorkloadSource WorkloadSource::burst(double base_rate, double burst_rate, long burst_start,
                                     long burst_len, std::vector<double> weights) {
  check_rate(base_rate, "base_rate");
  check_rate(burst_rate, "burst_rate");
  if (burst_start < 0 || burst_len < 0) throw ValidationError("burst window must be non-negative");
  check_weights(weights);
  WorkloadSource s;
  s.kind_ = WorkloadKind::burst;
  s.n_services_ = weights.size();
  s.weights_ = std::move(weights);
  s.base_rate_ = base_rate;
  s.burst_rate_ = burst_rate;
  s.burst_start_ = burst_start;
  s.burst_len_ = burst_len;
  return s;
}

WorkloadSource WorkloadSource::from_trace(const std::vector<TraceRecord>& records,
                                          std::size_t n_services) {
  if (n_services == 0) throw ValidationError("trace workload needs n_services > 0");
  WorkloadSource s;
  s.kind_ = WorkloadKind::trace;
  s.n_services_ = n_services;
  s.weights_ = uniform_weights(n_services);
  long last_step = -1;
  for (const TraceRecord& r : records) last_step = std::max(last_step, r.step_index);
  s.table_.assign(static_cast<std::size_t>(last_step + 1), std::vector<double>(n_services, 0.0));
  for (const TraceRecord& r : records) {
    if (r.service_id < 0 || static_cast<std::size_t>(r.service_id) >= n_services) {
      throw ValidationError("trace service_id " + std::to_string(r.service_id) + " out of range");
    }
    check_rate(r.qps, "trace qps");
    s.table_[static_cast<std::size_t>(r.step_index)][static_cast<std::size_t>(r.service_id)] = r.qps;
  }
  return s;
}

WorkloadSource WorkloadSource::from_trace_file(const std::filesystem::path& path,
                                               std::size_t n_services) {
  return from_trace(load_trace(path, n_services), n_services);
}

WorkloadSource WorkloadSource::with_noise(double sigma) const {
  if (!std::isfinite(sigma) || sigma < 0.0) throw ValidationError("workload noise sigma must be >= 0");
  WorkloadSource copy = *this;
  copy.noise_sigma_ = sigma;
  return copy;
}

double WorkloadSource::aggregate_rate(long step) const {
  if (step < 0) throw ContractViolation("workload step must be >= 0");
  switch (kind_) {
    case WorkloadKind::constant:
      return rate_;
    case WorkloadKind::sinusoidal:
      return mean_ + amplitude_ * std::sin(2.0 * std::numbers::pi * static_cast<double>(step) /
                                           period_steps_);
    case WorkloadKind::burst: {
      const bool in_burst = step >= burst_start_ && step - burst_start_ < burst_len_;
      return in_burst ? burst_rate_ : base_rate_;
    }
    case WorkloadKind::trace: {
      if (table_.empty()) return 0.0;
      const auto& row = table_[std::min(static_cast<std::size_t>(step), table_.size() - 1)];
      return std::accumulate(row.begin(), row.end(), 0.0);
    }
  }
  return 0.0;
}

std::vector<double> WorkloadSource::qps_at(long step, std::uint64_t seed) const {
  if (step < 0) throw ContractViolation("workload step must be >= 0");
  std::vector<double> qps(n_services_, 0.0);
  if (kind_ == WorkloadKind::trace) {
    // Past the end, hold the last row.
    if (!table_.empty()) qps = table_[std::min(static_cast<std::size_t>(step), table_.size() - 1)];
  } else {
    const double total = aggregate_rate(step);
    for (std::size_t i = 0; i < n_services_; ++i) qps[i] = total * weights_[i];
  }
  if (noise_sigma_ > 0.0) {
    Rng rng = make_stream(seed, Stream::workload, static_cast<std::uint64_t>(step));
    std::normal_distribution<double> jitter(0.0, noise_sigma_);
    for (double& q : qps) q *= 1.0 + jitter(rng);
  }
  for (double& q : qps) q = std::max(q, 0.0);
  return qps;
}

std::vector<TraceRecord> parse_trace(std::istream& in, std::size_t n_services) {
  std::vector<TraceRecord> records;
  std::map<std::pair<long, int>, long> seen;  // (step, service) -> line
  std::string line;
  long line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (text == "step,service,qps") continue;
      throw ParseError("expected header 'step,service,qps'", line_no);
    }
    const auto c1 = text.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : text.find(',', c1 + 1);
    if (c2 == std::string_view::npos || text.find(',', c2 + 1) != std::string_view::npos) {
      throw ParseError("expected 3 comma-separated fields", line_no);
    }
    TraceRecord r;
    r.step_index = parse_number<long>(text.substr(0, c1), "step", line_no);
    r.service_id = parse_number<int>(text.substr(c1 + 1, c2 - c1 - 1), "service", line_no);
    r.qps = parse_number<double>(text.substr(c2 + 1), "qps", line_no);
    if (r.step_index < 0) throw ParseError("negative step", line_no);
    if (!std::isfinite(r.qps) || r.qps < 0.0) throw ParseError("qps must be finite and >= 0", line_no);
    if (r.service_id < 0 || static_cast<std::size_t>(r.service_id) >= n_services) {
      throw ValidationError("service_id " + std::to_string(r.service_id) + " out of range [0, " +
                            std::to_string(n_services) + ") at line " + std::to_string(line_no));
    }
    auto [it, inserted] = seen.emplace(std::pair{r.step_index, r.service_id}, line_no);
    if (!inserted) {
      throw ParseError("duplicate (step " + std::to_string(r.step_index) + ", service " +
                           std::to_string(r.service_id) + "), first seen at line " +
                           std::to_string(it->second),
                       line_no);
    }
    records.push_back(r);
  }
  std::sort(records.begin(), records.end(), [](const TraceRecord& a, const TraceRecord& b) {
    return std::pair{a.step_index, a.service_id} < std::pair{b.step_index, b.service_id};
  });
  return records;
}

std::vector<TraceRecord> load_trace(const std::filesystem::path& path, std::size_t n_services) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file " + path.string());
  return parse_trace(in, n_services);
}

void write_trace(std::ostream& out, const std::vector<TraceRecord>& records) {
  out << "step,service,qps\n";
  char buf[64];
  for (const TraceRecord& r : records) {
    auto res = std::to_chars(buf, buf + sizeof buf, r.qps);
    out << r.step_index << ',' << r.service_id << ',' << std::string_view(buf, res.ptr - buf) << '\n';
  }
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write trace file " + path.string());
  write_trace(out, records);
  if (!out) throw IoError("failed writing trace file " + path.string());
}

std::vector<TraceRecord> generate_trace(const WorkloadSource& source, long steps, std::uint64_t seed) {
  if (steps < 0) throw ValidationError("trace length must be >= 0");
  std::vector<TraceRecord> records;
  for (long t = 0; t < steps; ++t) {
    const auto qps = source.qps_at(t, seed);
    for (std::size_t i = 0; i < qps.size(); ++i) {
      records.push_back(TraceRecord{t, static_cast<int>(i), qps[i]});
    }
  }
  return records;
}

}  // namespace td3sched
