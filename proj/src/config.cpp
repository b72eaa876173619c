#include "msim/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "msim/errors.hpp"

namespace msim {

void ScenarioConfig::validate() const {
  if (generator.num_clients < 1)
    throw ValidationError("generator.num_clients must be >= 1");
  if (!(generator.spawn_rate > 0))
    throw ValidationError("generator.spawn_rate must be > 0");
  if (!(generator.wait_min > 0) || generator.wait_min > generator.wait_max)
    throw ValidationError("generator wait interval requires 0 < wait_min <= wait_max");
  if (!std::isfinite(generator.time_limit) &&
      generator.num_limit == std::numeric_limits<std::int64_t>::max())
    throw ValidationError("at least one of generator.time_limit / generator.num_limit must be finite");
  if (!(cloudlet.mean_length > 0) || cloudlet.std_dev < 0)
    throw ValidationError("cloudlet length requires mean_length > 0 and std_dev >= 0");
  for (const auto& [name, p] : cloudlet_overrides)
    if (!(p.mean_length > 0) || p.std_dev < 0)
      throw ValidationError("cloudlet override for \"" + name + "\" is invalid");
  if (!(scaling.upper_threshold > 0) || scaling.upper_threshold > 1.0)
    throw ValidationError("scaling.upper_threshold must be in (0,1]");
  if (scaling.lower_threshold < 0 ||
      scaling.lower_threshold >= scaling.upper_threshold)
    throw ValidationError("scaling.lower_threshold must be in [0,1) and below upper_threshold");
  if (scaling.consecutive_breaches < 1)
    throw ValidationError("scaling.consecutive_breaches must be >= 1");
  if (!(scaling.vs_factor > 0))
    throw ValidationError("scaling.vs_factor must be > 0");
  if (!(scaling.check_interval > 0))
    throw ValidationError("scaling.check_interval must be > 0");
  if (metrics_sample_interval < 0)
    throw ValidationError("metrics_sample_interval must be >= 0 (0 disables sampling)");
  if (migration.vm_overload_threshold <= 0 || migration.vm_overload_threshold > 1.0)
    throw ValidationError("migration.vm_overload_threshold must be in (0,1]");
  if (concurrency_cap < 0)
    throw ValidationError("concurrency_cap must be >= 0");
}

namespace {

struct FlatToml {
  std::map<std::string, std::string> values;  // raw value text per key
  std::string source;

  void parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      // Strip comments outside of string values.
      bool in_str = false;
      std::string clean;
      for (char c : line) {
        if (c == '"') in_str = !in_str;
        if (c == '#' && !in_str) break;
        clean += c;
      }
      auto trim = [](std::string s) {
        std::size_t b = s.find_first_not_of(" \t\r");
        std::size_t e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      clean = trim(clean);
      if (clean.empty()) continue;
      auto eq = clean.find('=');
      if (eq == std::string::npos)
        throw SchemaError(source + ":" + std::to_string(lineno),
                          "expected key = value");
      std::string key = trim(clean.substr(0, eq));
      std::string val = trim(clean.substr(eq + 1));
      if (key.empty() || val.empty())
        throw SchemaError(source + ":" + std::to_string(lineno),
                          "expected key = value");
      if (!values.emplace(key, val).second)
        throw SchemaError(source + "." + key, "duplicate key");
    }
  }

  bool has(const std::string& key) const { return values.count(key) != 0; }

  std::string str(const std::string& key) {
    std::string v = take(key);
    if (v.size() < 2 || v.front() != '"' || v.back() != '"')
      throw SchemaError(source + "." + key, "expected a quoted string");
    return v.substr(1, v.size() - 2);
  }

  bool boolean(const std::string& key) {
    std::string v = take(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw SchemaError(source + "." + key, "expected true or false");
  }

  double number(const std::string& key) {
    std::string v = take(key);
    try {
      std::size_t used = 0;
      double x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw SchemaError(source + "." + key, "expected a number, got \"" + v + "\"");
    }
  }

  std::int64_t integer(const std::string& key) {
    std::string v = take(key);
    std::int64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
      throw SchemaError(source + "." + key, "expected an integer, got \"" + v + "\"");
    return x;
  }

  std::string take(const std::string& key) {
    auto it = values.find(key);
    if (it == values.end()) throw SchemaError(source + "." + key, "missing key");
    std::string v = it->second;
    values.erase(it);
    return v;
  }
};

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
  FlatToml t;
  t.source = "scenario";
  t.parse(text);

  ScenarioConfig cfg;
  auto opt_num = [&](const std::string& k, double& out) {
    if (t.has(k)) out = t.number(k);
  };
  auto opt_int = [&](const std::string& k, std::int64_t& out) {
    if (t.has(k)) out = t.integer(k);
  };

  opt_int("generator.num_clients", cfg.generator.num_clients);
  opt_num("generator.spawn_rate", cfg.generator.spawn_rate);
  opt_num("generator.wait_min", cfg.generator.wait_min);
  opt_num("generator.wait_max", cfg.generator.wait_max);
  opt_num("generator.time_limit", cfg.generator.time_limit);
  opt_int("generator.num_limit", cfg.generator.num_limit);

  opt_num("cloudlet.mean_length", cfg.cloudlet.mean_length);
  opt_num("cloudlet.std_dev", cfg.cloudlet.std_dev);

  opt_num("slo_threshold_ms", cfg.slo_threshold_ms);

  if (t.has("scaling.policy")) cfg.scaling.policy = t.str("scaling.policy");
  if (cfg.scaling.policy == "none") cfg.scaling.kind = ScalingPolicyKind::None;
  else if (cfg.scaling.policy == "horizontal") cfg.scaling.kind = ScalingPolicyKind::Horizontal;
  else if (cfg.scaling.policy == "vertical") cfg.scaling.kind = ScalingPolicyKind::Vertical;
  else cfg.scaling.kind = ScalingPolicyKind::UserDefined;

  opt_num("scaling.check_interval", cfg.scaling.check_interval);
  opt_num("scaling.upper_threshold", cfg.scaling.upper_threshold);
  opt_num("scaling.lower_threshold", cfg.scaling.lower_threshold);
  if (t.has("scaling.consecutive_breaches"))
    cfg.scaling.consecutive_breaches =
        static_cast<int>(t.integer("scaling.consecutive_breaches"));
  opt_num("scaling.vs_factor", cfg.scaling.vs_factor);

  if (t.has("migration.enabled")) cfg.migration.enabled = t.boolean("migration.enabled");
  opt_num("migration.vm_overload_threshold", cfg.migration.vm_overload_threshold);

  if (t.has("seed")) cfg.seed = static_cast<std::uint64_t>(t.integer("seed"));
  opt_num("metrics_sample_interval", cfg.metrics_sample_interval);
  opt_num("run_until", cfg.run_until);

  if (t.has("lb_policy")) cfg.lb_policy = t.str("lb_policy");
  if (t.has("queue_order")) cfg.queue_order = t.str("queue_order");
  if (t.has("concurrency_cap"))
    cfg.concurrency_cap = static_cast<int>(t.integer("concurrency_cap"));
  opt_num("starvation_timeout", cfg.starvation_timeout);

  opt_num("cpu_per_cloudlet", cfg.cpu_per_cloudlet);
  opt_num("ram_per_cloudlet", cfg.ram_per_cloudlet);
  opt_num("bw_per_derivation", cfg.bw_per_derivation);
  opt_num("idle_cpu_floor", cfg.idle_cpu_floor);
  opt_num("idle_ram_floor", cfg.idle_ram_floor);
  if (t.has("wait_in_delay")) cfg.wait_in_delay = t.boolean("wait_in_delay");
  if (t.has("ram_bw_gating")) cfg.ram_bw_gating = t.boolean("ram_bw_gating");
  if (t.has("retain_finished")) cfg.retain_finished = t.boolean("retain_finished");
  if (t.has("export_request_trace"))
    cfg.export_request_trace = t.boolean("export_request_trace");
  if (t.has("max_chains_per_api"))
    cfg.max_chains_per_api = static_cast<std::size_t>(t.integer("max_chains_per_api"));

  // Per-service cloudlet overrides: cloudlet.override.<service>.<field>
  std::vector<std::string> keys;
  for (const auto& [k, v] : t.values) keys.push_back(k);
  const std::string prefix = "cloudlet.override.";
  for (const auto& k : keys) {
    if (k.rfind(prefix, 0) != 0) continue;
    std::string rest = k.substr(prefix.size());
    auto dot = rest.rfind('.');
    if (dot == std::string::npos)
      throw SchemaError("scenario." + k, "expected cloudlet.override.<service>.<field>");
    std::string svc = rest.substr(0, dot);
    std::string field = rest.substr(dot + 1);
    auto& ov = cfg.cloudlet_overrides.try_emplace(svc, cfg.cloudlet).first->second;
    if (field == "mean_length") ov.mean_length = t.number(k);
    else if (field == "std_dev") ov.std_dev = t.number(k);
    else throw SchemaError("scenario." + k, "unknown override field \"" + field + "\"");
  }

  if (!t.values.empty())
    throw SchemaError("scenario." + t.values.begin()->first, "unknown key");

  cfg.validate();
  return cfg;
}

std::string serialize_scenario(const ScenarioConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "seed = " << cfg.seed << "\n";
  out << "generator.num_clients = " << cfg.generator.num_clients << "\n";
  out << "generator.spawn_rate = " << cfg.generator.spawn_rate << "\n";
  out << "generator.wait_min = " << cfg.generator.wait_min << "\n";
  out << "generator.wait_max = " << cfg.generator.wait_max << "\n";
  if (std::isfinite(cfg.generator.time_limit))
    out << "generator.time_limit = " << cfg.generator.time_limit << "\n";
  if (cfg.generator.num_limit != std::numeric_limits<std::int64_t>::max())
    out << "generator.num_limit = " << cfg.generator.num_limit << "\n";
  out << "cloudlet.mean_length = " << cfg.cloudlet.mean_length << "\n";
  out << "cloudlet.std_dev = " << cfg.cloudlet.std_dev << "\n";
  for (const auto& [svc, p] : cfg.cloudlet_overrides) {
    out << "cloudlet.override." << svc << ".mean_length = " << p.mean_length << "\n";
    out << "cloudlet.override." << svc << ".std_dev = " << p.std_dev << "\n";
  }
  out << "slo_threshold_ms = " << cfg.slo_threshold_ms << "\n";
  out << "scaling.policy = \"" << cfg.scaling.policy << "\"\n";
  out << "scaling.check_interval = " << cfg.scaling.check_interval << "\n";
  out << "scaling.upper_threshold = " << cfg.scaling.upper_threshold << "\n";
  out << "scaling.lower_threshold = " << cfg.scaling.lower_threshold << "\n";
  out << "scaling.consecutive_breaches = " << cfg.scaling.consecutive_breaches << "\n";
  out << "scaling.vs_factor = " << cfg.scaling.vs_factor << "\n";
  out << "migration.enabled = " << (cfg.migration.enabled ? "true" : "false") << "\n";
  out << "migration.vm_overload_threshold = " << cfg.migration.vm_overload_threshold << "\n";
  out << "metrics_sample_interval = " << cfg.metrics_sample_interval << "\n";
  if (std::isfinite(cfg.run_until)) out << "run_until = " << cfg.run_until << "\n";
  out << "lb_policy = \"" << cfg.lb_policy << "\"\n";
  out << "queue_order = \"" << cfg.queue_order << "\"\n";
  out << "concurrency_cap = " << cfg.concurrency_cap << "\n";
  out << "starvation_timeout = " << cfg.starvation_timeout << "\n";
  out << "cpu_per_cloudlet = " << cfg.cpu_per_cloudlet << "\n";
  out << "ram_per_cloudlet = " << cfg.ram_per_cloudlet << "\n";
  out << "bw_per_derivation = " << cfg.bw_per_derivation << "\n";
  out << "idle_cpu_floor = " << cfg.idle_cpu_floor << "\n";
  out << "idle_ram_floor = " << cfg.idle_ram_floor << "\n";
  out << "wait_in_delay = " << (cfg.wait_in_delay ? "true" : "false") << "\n";
  out << "ram_bw_gating = " << (cfg.ram_bw_gating ? "true" : "false") << "\n";
  out << "retain_finished = " << (cfg.retain_finished ? "true" : "false") << "\n";
  out << "export_request_trace = " << (cfg.export_request_trace ? "true" : "false") << "\n";
  out << "max_chains_per_api = " << cfg.max_chains_per_api << "\n";
  return out.str();
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const SchemaError& e) {
    throw SchemaError(path, e.what());
  }
}

}  // namespace msim
