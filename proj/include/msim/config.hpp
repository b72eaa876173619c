#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>

#include "msim/engine.hpp"

namespace msim {

enum class ScalingPolicyKind : std::uint8_t { None, Horizontal, Vertical, UserDefined };

struct CloudletParams {
  double mean_length = 1000;  // MI
  double std_dev = 0;         // MI
};

struct ScenarioConfig {
  struct Generator {
    std::int64_t num_clients = 1;       // Nc
    double spawn_rate = 1;              // v, clients/second
    double wait_min = 1;                // p0
    double wait_max = 1;                // p1
    double time_limit = kNoTimeLimit;   // seconds
    std::int64_t num_limit = std::numeric_limits<std::int64_t>::max();
  } generator;

  CloudletParams cloudlet;
  std::map<std::string, CloudletParams> cloudlet_overrides;  // by service name

  double slo_threshold_ms = 3000;

  struct Scaling {
    std::string policy = "none";  // none | horizontal | vertical | <registered>
    ScalingPolicyKind kind = ScalingPolicyKind::None;
    double check_interval = 10;
    double upper_threshold = 0.8;
    double lower_threshold = 0.2;
    int consecutive_breaches = 3;  // k
    double vs_factor = 2.0;
  } scaling;

  struct Migration {
    bool enabled = false;
    double vm_overload_threshold = 0.9;
  } migration;

  std::uint64_t seed = 1;
  double metrics_sample_interval = 1.0;

  // Scheduling knobs.
  std::string lb_policy = "MaxIdle";     // MaxIdle | Random | <registered>
  std::string queue_order = "Fifo";      // Fifo | Priority | <registered>
  int concurrency_cap = 0;               // per-instance executing cap; 0 = unbounded
  double starvation_timeout = 60;        // seconds in waiting before flagged

  // Usage model knobs (telemetry).
  double cpu_per_cloudlet = 0;    // milicores; 0 -> instance requested_shares
  double ram_per_cloudlet = 0;    // MB per executing cloudlet
  double bw_per_derivation = 0;   // Mbps units per derivation in window
  double idle_cpu_floor = 0;      // milicores while idle
  double idle_ram_floor = 0;      // MB while idle
  bool wait_in_delay = true;      // include queueing wait in per-node delay

  double run_until = kNoTimeLimit;  // hard event-loop horizon (seconds)
  bool ram_bw_gating = false;     // gate allocation on RAM+BW too (RAM always gates)
  bool retain_finished = true;    // keep per-service finished queues and cloudlet records
  bool export_request_trace = false;
  std::size_t max_chains_per_api = 10000;

  void validate() const;
};

// scenario.toml is a flat key/value file (dotted keys, scalar values). This
// parses exactly that subset: comments, strings, booleans, integers, floats.
ScenarioConfig parse_scenario(const std::string& text);
std::string serialize_scenario(const ScenarioConfig& cfg);

ScenarioConfig load_scenario_file(const std::string& path);

}  // namespace msim
