#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "msim/cloudlet.hpp"
#include "msim/config.hpp"
#include "msim/model.hpp"

namespace msim {

enum class RequestStatus : std::uint8_t { InFlight, Completed, Failed };

struct RequestRec {
  SimTime arrival = 0;
  std::int32_t api = -1;
  RequestStatus status = RequestStatus::InFlight;
  double response_ms = -1;   // event-time response (authoritative)
  double cp_ms = -1;         // path-sum estimate over the critical path
  std::int32_t cp_chain = -1;  // index into model.chains[api]
  std::int32_t root = -1;
  std::int32_t outstanding = 0;  // unfinished cloudlets
  SimTime last_finish = -1;
};

struct UsageRecord {
  SimTime t = 0;
  bool is_vm = false;
  std::int32_t entity = -1;
  double cpu = 0;  // milicores
  double ram = 0;  // MB
  double bw = 0;   // Mbps
  std::int32_t n_executing = 0;
};

enum class ScaleDirection : std::uint8_t { Out, In, Up, Down };
enum class ScaleOutcome : std::uint8_t { Applied, Failed, Skipped };

const char* to_string(ScaleDirection d);
const char* to_string(ScaleOutcome o);

struct ScalingRecord {
  SimTime t = 0;
  std::int32_t service = -1;
  ScaleDirection direction = ScaleDirection::Out;
  ScaleOutcome outcome = ScaleOutcome::Skipped;
  double trigger_util = 0;
  int replicas_after = 0;
  double limits_after = 0;  // mean limit shares across the service's instances
};

struct MigrationRecord {
  SimTime t = 0;
  std::int32_t instance = -1;
  std::int32_t from_vm = -1;
  std::int32_t to_vm = -1;  // -1 when skipped (no target)
};

struct ApiStats {
  std::int64_t count = 0;       // completed
  std::int64_t failed = 0;
  double mean_ms = 0;
  double median_ms = 0;
  double p95_ms = 0;
  double p99_ms = 0;
  double slo_violation_rate = 0;
  double mean_rps = 0;
};

// Usage-history updating, response-time finalization with critical-path
// identification, QoS aggregation and CSV export.
class Telemetry {
 public:
  Telemetry(Model& model, CloudletArena& arena, const ScenarioConfig& cfg)
      : model_(model), arena_(arena), cfg_(cfg) {}

  // ---- request lifecycle ----
  std::int64_t request_generated(std::int32_t api, SimTime t);
  void attach_root(std::int64_t req, std::int32_t root);
  void request_failed(std::int64_t req);
  void cloudlet_created(std::int64_t req);
  // Decrements the outstanding count; finalizes the request when it hits 0.
  void cloudlet_finished(std::int64_t req, SimTime t);

  // Computes (event response, cp estimate, critical path) for a request whose
  // cloudlets are all Finished. Exposed for direct testing.
  void finalize_request(std::int64_t req, SimTime t);

  std::int64_t in_flight() const { return in_flight_; }
  std::int64_t generated() const { return static_cast<std::int64_t>(requests_.size()); }
  std::int64_t completed() const { return completed_; }
  std::int64_t failed() const { return failed_; }

  // ---- usage accounting ----
  void instance_allocated(std::int32_t inst, SimTime t);
  void instance_deallocated(std::int32_t inst, SimTime t);
  // Accrues integrals up to t with the previous count, then sets the count.
  void set_exec(std::int32_t inst, SimTime t, int n);
  // Accrue before limits/requests change (vertical scaling).
  void params_changed(std::int32_t inst, SimTime t);
  void derivation_on(std::int32_t inst);

  double cpu_per_cloudlet(std::int32_t inst) const;
  double current_cpu(std::int32_t inst) const;
  double current_ram(std::int32_t inst) const;
  double utilization(std::int32_t inst) const;  // cpu / limit_shares
  int exec_count(std::int32_t inst) const { return usage_[inst].n; }

  // Appends one UsageRecord per allocated instance plus per-VM aggregates.
  void sample_usage(SimTime t);
  UsageRecord update_usage(std::int32_t inst, SimTime t);

  // Accrues and returns (cpu milicore-seconds, alive seconds) so callers can
  // form window means between two points in time.
  std::pair<double, double> usage_snapshot(std::int32_t inst, SimTime t);
  void close(SimTime t);  // final accrual for all alive instances

  // Time-weighted mean CPU milicores per instance-second over the whole run.
  double mean_instance_cpu() const;
  double mean_instance_ram() const;

  void count_starved(std::int64_t n) { starved_ += n; }
  std::int64_t starved() const { return starved_; }

  void record_scaling(const ScalingRecord& r) { scaling_log_.push_back(r); }
  void record_migration(const MigrationRecord& r) { migration_log_.push_back(r); }
  const std::vector<ScalingRecord>& scaling_log() const { return scaling_log_; }
  const std::vector<MigrationRecord>& migration_log() const { return migration_log_; }

  // ---- aggregation / export ----
  ApiStats api_stats(std::int32_t api, SimTime horizon) const;
  double mean_response_ms() const;
  const std::vector<RequestRec>& requests() const { return requests_; }
  const std::vector<UsageRecord>& usage_history() const { return usage_history_; }
  const std::vector<std::vector<std::uint32_t>>& rps_bins() const { return rps_bins_; }

  // Writes requests.csv, usage.csv, rps.csv, scaling.csv, summary.txt.
  void export_csv(const std::string& dir, const SimSummary& summary) const;
  std::string render_summary(const SimSummary& summary) const;

  // Nearest-rank percentile of a sorted sample, q in (0,1].
  static double percentile(const std::vector<double>& sorted, double q);

 private:
  struct InstUsage {
    int n = 0;
    bool alive = false;
    SimTime last_t = 0;
    double cpu_integral = 0;  // milicore-seconds
    double ram_integral = 0;
    double alive_seconds = 0;
    std::uint32_t deriv_window = 0;
    std::uint64_t derivations = 0;
  };

  void accrue(std::int32_t inst, SimTime t);
  void ensure_usage_slot(std::int32_t inst);

  Model& model_;
  CloudletArena& arena_;
  const ScenarioConfig& cfg_;

  std::vector<RequestRec> requests_;
  std::int64_t completed_ = 0;
  std::int64_t failed_ = 0;
  std::int64_t in_flight_ = 0;
  std::int64_t starved_ = 0;
  double cp_discrepancy_sum_ms_ = 0;  // sum |response - cp_estimate|

  std::vector<InstUsage> usage_;
  std::vector<UsageRecord> usage_history_;
  std::vector<std::vector<std::uint32_t>> rps_bins_;  // per api, 1 s windows
  std::vector<ScalingRecord> scaling_log_;
  std::vector<MigrationRecord> migration_log_;
};

}  // namespace msim
