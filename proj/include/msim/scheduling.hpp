#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "msim/cloudlet.hpp"
#include "msim/config.hpp"
#include "msim/engine.hpp"
#include "msim/model.hpp"
#include "msim/telemetry.hpp"

namespace msim {

class Scheduling;

// Named extension points selected by scenario config. A balancer returns the
// chosen instance index or -1 when nothing is eligible; an admitter inserts a
// freshly admitted cloudlet into the waiting queue.
using LoadBalancerFn =
    std::function<std::int32_t(Scheduling&, std::int32_t service)>;
using QueueOrderFn = std::function<void(std::deque<std::int32_t>&, std::int32_t,
                                        const CloudletArena&)>;

void register_load_balancer(const std::string& name, LoadBalancerFn fn);
void register_queue_order(const std::string& name, QueueOrderFn fn);

// Per-service cloudlet schedulers (waiting/execution/finished queues) plus
// the time-shared execution engine. Execution uses a per-instance virtual
// clock: with executing set W and rate M, the clock advances at M/sum(w) and
// a cloudlet finishes when the clock reaches its target, giving exact
// processor-sharing finish times in O(log n) per transition.
class Scheduling {
 public:
  Scheduling(Model& model, CloudletArena& arena, SimulationEngine& engine,
             Telemetry& telemetry, const ScenarioConfig& cfg);

  // ---- spec operations ----
  double sample_length(std::int32_t service);
  std::int32_t create_root(std::int64_t request, std::int32_t service, SimTime t);
  void admit(std::int32_t cloudlet, SimTime t);
  int try_start(std::int32_t service, SimTime t);  // number started
  void on_complete_event(const SimEvent& ev);      // engine handler

  // ---- notifications from allocation / policies ----
  void instance_activated(std::int32_t inst, SimTime t);
  void instance_rate_changed(std::int32_t inst, SimTime t);
  void instance_deactivated(std::int32_t inst);

  // Called when a draining instance runs dry.
  void set_idle_hook(std::function<void(std::int32_t, SimTime)> fn) {
    idle_hook_ = std::move(fn);
  }

  // Flags cloudlets waiting longer than the starvation timeout and re-admits
  // them at the queue tail.
  void starvation_sweep(SimTime t);

  // ---- queries ----
  bool has_active_instance(std::int32_t service) const;
  int n_executing(std::int32_t inst) const;
  double instance_mips(std::int32_t inst) const;
  double remaining_now(std::int32_t cloudlet, SimTime t) const;
  std::size_t waiting_count(std::int32_t service) const;
  const std::deque<std::int32_t>& waiting_ids(std::int32_t service) const;
  std::uint64_t admitted_count(std::int32_t service) const;
  std::uint64_t finished_count(std::int32_t service) const;
  const std::vector<std::int32_t>& finished_ids(std::int32_t service) const;
  std::int64_t total_executing() const { return total_executing_; }

  std::int32_t pick_max_idle(std::int32_t service);
  std::int32_t pick_random(std::int32_t service);
  bool eligible(std::int32_t inst) const;

 private:
  struct ExecState {
    double v = 0;        // accrued virtual work per unit weight
    double sum_w = 0;
    double mips = 0;
    SimTime settled_at = 0;
    std::uint64_t generation = 0;
    // min-heap of (v_target, cloudlet id)
    std::priority_queue<std::pair<double, std::int32_t>,
                        std::vector<std::pair<double, std::int32_t>>,
                        std::greater<>>
        heap;
  };

  struct ServiceQueues {
    std::deque<std::int32_t> waiting;
    std::vector<std::int32_t> finished;  // kept when cfg.retain_finished
    std::uint64_t admitted = 0;
    std::uint64_t started = 0;
    std::uint64_t finished_count = 0;
  };

  void settle(ExecState& ex, SimTime t) const;
  void schedule_head(std::int32_t inst, SimTime t);
  void start_on(std::int32_t cloudlet, std::int32_t inst, SimTime t);
  double compute_mips(std::int32_t inst) const;

  Model& model_;
  CloudletArena& arena_;
  SimulationEngine& engine_;
  Telemetry& telemetry_;
  const ScenarioConfig& cfg_;

  std::vector<ExecState> exec_;
  std::vector<ServiceQueues> queues_;
  LoadBalancerFn balancer_;
  QueueOrderFn admitter_;
  std::function<void(std::int32_t, SimTime)> idle_hook_;
  std::int64_t total_executing_ = 0;
  std::vector<std::int32_t> due_scratch_;
};

}  // namespace msim
