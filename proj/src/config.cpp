#include "td3sched/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "td3sched/errors.hpp"

namespace td3sched {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects whatever was not consumed.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    const json* v = take(key);
    if (v == nullptr) return;
    try {
      out = v->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  const json* take(const char* key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  std::string child_path(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError("unknown key " + path_ + "." + it.key());
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

void read_adam(Section& parent, const char* key, AdamConfig& opt) {
  const json* v = parent.take(key);
  if (v == nullptr) return;
  Section s(*v, parent.child_path(key));
  s.read("learning_rate", opt.learning_rate);
  s.read("beta1", opt.beta1);
  s.read("beta2", opt.beta2);
  s.read("epsilon", opt.epsilon);
  s.finish();
}

json adam_json(const AdamConfig& opt) {
  return json{{"learning_rate", opt.learning_rate},
              {"beta1", opt.beta1},
              {"beta2", opt.beta2},
              {"epsilon", opt.epsilon}};
}

void read_sim(const json& doc, const std::string& path, SimConfig& sim, bool& l_max_given) {
  Section s(doc, path);
  s.read("l_target_ms", sim.l_target_ms);
  s.read("step_duration_s", sim.step_duration_s);
  if (const json* v = s.take("latency")) {
    Section l(*v, s.child_path("latency"));
    l.read("base_service_ms", sim.latency.base_service_ms);
    l.read("saturation_cap_ms", sim.latency.saturation_cap_ms);
    l.read("mem_pressure_multiplier", sim.latency.mem_pressure_multiplier);
    l.read("rho_cap", sim.latency.rho_cap);
    l.read("noise_sigma", sim.latency.noise_sigma);
    l.finish();
  }
  if (const json* v = s.take("normalization")) {
    Section n(*v, s.child_path("normalization"));
    if (n.take("l_max_ms") != nullptr) {
      n.read("l_max_ms", sim.normalization.l_max_ms);
      l_max_given = true;
    }
    n.read("q_max", sim.normalization.q_max);
    n.finish();
  }
  if (const json* v = s.take("nodes")) {
    if (!v->is_array()) throw ConfigError(path + ".nodes must be an array");
    sim.nodes.clear();
    for (std::size_t k = 0; k < v->size(); ++k) {
      Section n((*v)[k], path + ".nodes[" + std::to_string(k) + "]");
      int id = static_cast<int>(k);
      std::string tier = "edge";
      n.read("id", id);
      n.read("tier", tier);
      NodeSpec node;
      try {
        node = NodeSpec::with_defaults(id, tier_from_string(tier));
      } catch (const ValidationError& e) {
        throw ConfigError(path + ".nodes[" + std::to_string(k) + "]: " + e.what());
      }
      n.read("cpu_capacity", node.cpu_capacity);
      n.read("mem_capacity", node.mem_capacity);
      n.read("network_ms", node.base_network_latency_ms);
      n.finish();
      sim.nodes.push_back(node);
    }
  }
  if (const json* v = s.take("services")) {
    if (!v->is_array()) throw ConfigError(path + ".services must be an array");
    sim.services.clear();
    for (std::size_t k = 0; k < v->size(); ++k) {
      Section e((*v)[k], path + ".services[" + std::to_string(k) + "]");
      ServiceSpec svc;
      svc.service_id = static_cast<int>(k);
      svc.home_node = static_cast<int>(k);
      svc.name = "service-" + std::to_string(k);
      e.read("name", svc.name);
      e.read("home_node", svc.home_node);
      e.read("cpu_cost_per_request", svc.cpu_cost_per_request);
      e.read("mem_floor_mb", svc.mem_floor_mb);
      e.read("mem_per_qps_mb", svc.mem_per_qps_mb);
      e.read("initial_cpu_request", svc.initial_cpu_request);
      e.read("initial_mem_request", svc.initial_mem_request);
      if (e.take("base_service_ms") != nullptr) {
        double base = 0.0;
        e.read("base_service_ms", base);
        svc.base_service_ms = base;
      }
      e.finish();
      sim.services.push_back(svc);
    }
  }
  s.finish();
}

}  // namespace

Scenario Scenario::parse(std::string_view text) {
  if (text == "normal_100") return Scenario{Kind::normal_100, {}};
  if (text == "high_300") return Scenario{Kind::high_300, {}};
  if (text.starts_with("trace:") && text.size() > 6) return Scenario{Kind::trace, std::string(text.substr(6))};
  throw ConfigError("unknown scenario '" + std::string(text) + "' (expected normal_100|high_300|trace:<path>)");
}

std::string Scenario::name() const {
  switch (kind) {
    case Kind::normal_100: return "normal_100";
    case Kind::high_300: return "high_300";
    case Kind::trace: return "trace:" + trace_path;
  }
  return "unknown";
}

double Scenario::constant_rate() const {
  switch (kind) {
    case Kind::normal_100: return 100.0;
    case Kind::high_300: return 300.0;
    case Kind::trace: break;
  }
  throw ContractViolation("trace scenarios have no constant rate");
}

void ExperimentConfig::validate() const {
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (steps_per_episode < 1) throw ConfigError("steps_per_episode must be >= 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (workload_weights != "uniform" && workload_weights != "frontend_heavy") {
    throw ConfigError("workload.weights must be uniform or frontend_heavy");
  }
  if (!(workload_noise_sigma >= 0.0)) throw ConfigError("workload.noise_sigma must be >= 0");
  if (sim.episode_len != steps_per_episode) throw ConfigError("sim episode length disagrees with steps_per_episode");
  try {
    sim.validate();
    reward.weights.validate();
    agent.td3.validate();
    agent.dqn.validate();
    agent.basek.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (scenario.kind == Scenario::Kind::trace && !std::filesystem::exists(scenario.trace_path)) {
    throw ConfigError("trace file not found: " + scenario.trace_path);
  }
}

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig c;
  Section top(doc, "");
  int version = kConfigVersion;
  top.read("config_version", version);
  if (version != kConfigVersion) {
    throw ConfigError("config_version " + std::to_string(version) + " unsupported (expected " +
                      std::to_string(kConfigVersion) + ")");
  }
  std::string text;
  if (top.take("algorithm") != nullptr) {
    top.read("algorithm", text);
    try {
      c.algorithm = algorithm_from_string(text);
    } catch (const ValidationError& e) {
      throw ConfigError(e.what());
    }
  }
  top.read("episodes", c.episodes);
  top.read("steps_per_episode", c.steps_per_episode);
  if (top.take("scenario") != nullptr) {
    top.read("scenario", text);
    c.scenario = Scenario::parse(text);
  }
  top.read("seeds", c.seeds);
  std::string out = c.output_dir.string();
  top.read("output_dir", out);
  c.output_dir = out;
  top.read("record_wall_time", c.record_wall_time);

  if (const json* v = top.take("workload")) {
    Section w(*v, ".workload");
    w.read("weights", c.workload_weights);
    w.read("noise_sigma", c.workload_noise_sigma);
    w.finish();
  }

  bool l_max_given = false;
  if (const json* v = top.take("sim")) read_sim(*v, ".sim", c.sim, l_max_given);
  c.sim.episode_len = c.steps_per_episode;
  if (!l_max_given) c.sim.normalization.l_max_ms = 2.0 * c.sim.l_target_ms;

  if (const json* v = top.take("reward")) {
    Section r(*v, ".reward");
    r.read("alpha", c.reward.weights.alpha);
    r.read("beta", c.reward.weights.beta);
    r.read("lambda", c.reward.weights.lambda);
    r.read("mu", c.reward.weights.mu);
    if (r.take("latency_penalty") != nullptr) {
      r.read("latency_penalty", text);
      try {
        c.reward.latency_mode = latency_penalty_mode_from_string(text);
      } catch (const ValidationError& e) {
        throw ConfigError(e.what());
      }
    }
    r.finish();
  }

  if (const json* v = top.take("td3")) {
    Td3Hyper& h = c.agent.td3;
    Section t(*v, ".td3");
    t.read("gamma", h.gamma);
    t.read("tau", h.tau);
    t.read("policy_freq", h.policy_freq);
    t.read("smoothing_sigma", h.smoothing_sigma);
    t.read("smoothing_clip", h.smoothing_clip);
    t.read("sigma_init", h.sigma_init);
    t.read("tau_decay", h.tau_decay);
    t.read("batch_size", h.batch_size);
    t.read("warmup_transitions", h.warmup_transitions);
    t.read("buffer_capacity", h.buffer_capacity);
    t.read("hidden_width", h.hidden_width);
    read_adam(t, "actor_opt", h.actor_opt);
    read_adam(t, "critic_opt", h.critic_opt);
    t.finish();
  }
  if (const json* v = top.take("dqn")) {
    DqnHyper& h = c.agent.dqn;
    Section d(*v, ".dqn");
    d.read("gamma", h.gamma);
    d.read("levels", h.levels);
    d.read("epsilon_start", h.epsilon_start);
    d.read("epsilon_end", h.epsilon_end);
    d.read("epsilon_decay_steps", h.epsilon_decay_steps);
    d.read("target_sync_interval", h.target_sync_interval);
    d.read("batch_size", h.batch_size);
    d.read("buffer_capacity", h.buffer_capacity);
    d.read("hidden_width", h.hidden_width);
    read_adam(d, "opt", h.opt);
    d.finish();
  }
  if (const json* v = top.take("basek")) {
    BaseKConfig& b = c.agent.basek;
    Section k(*v, ".basek");
    if (k.take("mode") != nullptr) {
      k.read("mode", text);
      try {
        b.mode = basek_mode_from_string(text);
      } catch (const ValidationError& e) {
        throw ConfigError(e.what());
      }
    }
    k.read("scale_up_above", b.scale_up_above);
    k.read("scale_down_below", b.scale_down_below);
    k.read("step_fraction", b.step_fraction);
    k.finish();
  }
  top.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json nodes = json::array();
  for (const NodeSpec& n : c.sim.nodes) {
    nodes.push_back({{"id", n.node_id},
                     {"tier", std::string(to_string(n.tier))},
                     {"cpu_capacity", n.cpu_capacity},
                     {"mem_capacity", n.mem_capacity},
                     {"network_ms", n.base_network_latency_ms}});
  }
  json services = json::array();
  for (const ServiceSpec& s : c.sim.services) {
    json e = {{"name", s.name},
              {"home_node", s.home_node},
              {"cpu_cost_per_request", s.cpu_cost_per_request},
              {"mem_floor_mb", s.mem_floor_mb},
              {"mem_per_qps_mb", s.mem_per_qps_mb},
              {"initial_cpu_request", s.initial_cpu_request},
              {"initial_mem_request", s.initial_mem_request}};
    if (s.base_service_ms) e["base_service_ms"] = *s.base_service_ms;
    services.push_back(std::move(e));
  }
  const LatencyModel& lm = c.sim.latency;
  const Td3Hyper& t = c.agent.td3;
  const DqnHyper& d = c.agent.dqn;
  const BaseKConfig& b = c.agent.basek;
  return json{
      {"config_version", kConfigVersion},
      {"algorithm", std::string(to_string(c.algorithm))},
      {"episodes", c.episodes},
      {"steps_per_episode", c.steps_per_episode},
      {"scenario", c.scenario.name()},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir.string()},
      {"record_wall_time", c.record_wall_time},
      {"workload", {{"weights", c.workload_weights}, {"noise_sigma", c.workload_noise_sigma}}},
      {"sim",
       {{"l_target_ms", c.sim.l_target_ms},
        {"step_duration_s", c.sim.step_duration_s},
        {"latency",
         {{"base_service_ms", lm.base_service_ms},
          {"saturation_cap_ms", lm.saturation_cap_ms},
          {"mem_pressure_multiplier", lm.mem_pressure_multiplier},
          {"rho_cap", lm.rho_cap},
          {"noise_sigma", lm.noise_sigma}}},
        {"normalization", {{"l_max_ms", c.sim.normalization.l_max_ms}, {"q_max", c.sim.normalization.q_max}}},
        {"nodes", nodes},
        {"services", services}}},
      {"reward",
       {{"alpha", c.reward.weights.alpha},
        {"beta", c.reward.weights.beta},
        {"lambda", c.reward.weights.lambda},
        {"mu", c.reward.weights.mu},
        {"latency_penalty", std::string(to_string(c.reward.latency_mode))}}},
      {"td3",
       {{"gamma", t.gamma},
        {"tau", t.tau},
        {"policy_freq", t.policy_freq},
        {"smoothing_sigma", t.smoothing_sigma},
        {"smoothing_clip", t.smoothing_clip},
        {"sigma_init", t.sigma_init},
        {"tau_decay", t.tau_decay},
        {"batch_size", t.batch_size},
        {"warmup_transitions", t.warmup_transitions},
        {"buffer_capacity", t.buffer_capacity},
        {"hidden_width", t.hidden_width},
        {"actor_opt", adam_json(t.actor_opt)},
        {"critic_opt", adam_json(t.critic_opt)}}},
      {"dqn",
       {{"gamma", d.gamma},
        {"levels", d.levels},
        {"epsilon_start", d.epsilon_start},
        {"epsilon_end", d.epsilon_end},
        {"epsilon_decay_steps", d.epsilon_decay_steps},
        {"target_sync_interval", d.target_sync_interval},
        {"batch_size", d.batch_size},
        {"buffer_capacity", d.buffer_capacity},
        {"hidden_width", d.hidden_width},
        {"opt", adam_json(d.opt)}}},
      {"basek",
       {{"mode", std::string(to_string(b.mode))},
        {"scale_up_above", b.scale_up_above},
        {"scale_down_below", b.scale_down_below},
        {"step_fraction", b.step_fraction}}},
  };
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = to_json(config).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

WorkloadSource make_workload(const ExperimentConfig& config) {
  const std::size_t n = config.sim.n_services();
  if (config.scenario.kind == Scenario::Kind::trace) {
    return WorkloadSource::from_trace_file(config.scenario.trace_path, n).with_noise(config.workload_noise_sigma);
  }
  std::vector<double> weights =
      config.workload_weights == "frontend_heavy" ? frontend_heavy_weights(n) : uniform_weights(n);
  return WorkloadSource::constant(config.scenario.constant_rate(), std::move(weights))
      .with_noise(config.workload_noise_sigma);
}

}  // namespace td3sched
