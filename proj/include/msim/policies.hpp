#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msim/config.hpp"
#include "msim/model.hpp"
#include "msim/scheduling.hpp"
#include "msim/telemetry.hpp"

namespace msim {

// Per-VM resource ledgers and per-instance grants. Idle = total - sum(grants)
// holds at every event boundary; a grant larger than the remaining idle
// amount is a logic error.
class Provisioner {
 public:
  struct Grant {
    std::int32_t vm = -1;
    double shares = 0;
    double ram = 0;
    double bw = 0;
  };

  void reset(const Model& model);
  bool fits(const Model& model, std::int32_t vm, double shares, double ram,
            double bw, bool gate_bw) const;
  void grant(const Model& model, std::int32_t vm, std::int32_t inst,
             double shares, double ram, double bw);
  void release(std::int32_t inst);
  void ensure_slot(std::int32_t inst);

  double used_shares(std::int32_t vm) const { return used_[vm].shares; }
  double used_ram(std::int32_t vm) const { return used_[vm].ram; }
  double idle_shares(const Model& model, std::int32_t vm) const {
    return model.vms[vm].total_shares - used_[vm].shares;
  }
  double idle_ram(const Model& model, std::int32_t vm) const {
    return model.vms[vm].ram - used_[vm].ram;
  }
  double utilization(const Model& model, std::int32_t vm) const {
    return model.vms[vm].total_shares > 0
               ? used_[vm].shares / model.vms[vm].total_shares
               : 0;
  }
  const Grant& grant_of(std::int32_t inst) const { return grants_[inst]; }
  bool has_grant(std::int32_t inst) const {
    return static_cast<std::size_t>(inst) < grants_.size() &&
           grants_[inst].vm >= 0;
  }

  // Canonical dump for rollback comparisons.
  std::string snapshot(const Model& model) const;

  // Throws LogicError unless idle = total - sum(grants) for every VM.
  void check_exact(const Model& model) const;

 private:
  struct Used {
    double shares = 0;
    double ram = 0;
    double bw = 0;
  };
  std::vector<Used> used_;     // per vm
  std::vector<Grant> grants_;  // per instance
};

// Resource-management policies: first-fit-decreasing allocation, threshold
// migration, horizontal/vertical scaling, all sharing the provisioner.
class Policies {
 public:
  Policies(Model& model, Provisioner& prov, Scheduling& sched,
           Telemetry& telemetry, const ScenarioConfig& cfg);

  // Initial placement for every service in registration order. Returns the
  // number of services with at least one allocated instance.
  int allocate_all(SimTime t);
  bool allocate_service(std::int32_t service, SimTime t);

  void scaling_check(SimTime t);
  void migration_check(SimTime t);

  bool scale_horizontal(std::int32_t service, ScaleDirection dir, SimTime t);
  bool scale_vertical(std::int32_t service, ScaleDirection dir, SimTime t);

  // Threshold trigger: the sample at each check is the time-weighted mean
  // CPU utilization (usage/limit) of the service's instances over the window
  // since the previous check; k consecutive breaches fire a direction.
  std::optional<ScaleDirection> scaling_trigger(std::int32_t service, SimTime t);

  // Window-mean utilization since the last check (primed at the first call).
  double window_utilization(std::int32_t service, SimTime t);

  // Finishes a drain started by horizontal scale-in (wired as the
  // scheduler's idle hook).
  void finish_drain(std::int32_t inst, SimTime t);

  // Mappings + provisioner + replica membership, canonically ordered; used
  // by rollback soundness checks.
  std::string state_fingerprint() const;

  double mean_service_utilization(std::int32_t service) const;

 private:
  std::vector<std::int32_t> vms_sorted_by_idle() const;
  std::int32_t first_fit(double shares, double ram, double bw) const;
  void bind_instance(std::int32_t inst, std::int32_t vm, SimTime t);
  void unbind_instance(std::int32_t inst, SimTime t);
  std::vector<std::int32_t> replica_sets_of(std::int32_t service) const;
  double mean_limit_shares(std::int32_t service) const;
  int replicas_after(std::int32_t service) const;

  Model& model_;
  Provisioner& prov_;
  Scheduling& sched_;
  Telemetry& telemetry_;
  const ScenarioConfig& cfg_;

  std::vector<int> breach_up_;
  std::vector<int> breach_down_;
  struct UsageMark {
    double cpu_integral = 0;
    double alive_seconds = 0;
    bool primed = false;
  };
  std::vector<UsageMark> marks_;  // per instance
};

}  // namespace msim
