#pragma once

#include <memory>
#include <string>

#include "msim/cloudlet.hpp"
#include "msim/config.hpp"
#include "msim/engine.hpp"
#include "msim/model.hpp"
#include "msim/policies.hpp"
#include "msim/scheduling.hpp"
#include "msim/telemetry.hpp"
#include "msim/workload.hpp"

namespace msim {

// Wires the modules together and drives one run: initial allocation, the
// generator, periodic scaling/migration/metrics events, then the event loop
// until all work drains.
class Simulation {
 public:
  Simulation(Model model, ScenarioConfig cfg);

  SimSummary run(SimTime until = kNoTimeLimit);

  // Initial placement; run() invokes it when not already done. Exposed so
  // tests can drive the scheduler against an allocated cluster directly.
  void allocate();

  Model& model() { return model_; }
  const ScenarioConfig& config() const { return cfg_; }
  SimulationEngine& engine() { return *engine_; }
  CloudletArena& arena() { return *arena_; }
  Telemetry& telemetry() { return *telemetry_; }
  Scheduling& scheduling() { return *scheduling_; }
  Policies& policies() { return *policies_; }
  Provisioner& provisioner() { return *provisioner_; }
  Workload& workload() { return *workload_; }
  const SimSummary& summary() const { return summary_; }

  void export_csv(const std::string& dir) const {
    telemetry_->export_csv(dir, summary_);
  }

 private:
  bool keep_periodic() const;

  Model model_;
  ScenarioConfig cfg_;
  std::unique_ptr<SimulationEngine> engine_;
  std::unique_ptr<CloudletArena> arena_;
  std::unique_ptr<Telemetry> telemetry_;
  std::unique_ptr<Scheduling> scheduling_;
  std::unique_ptr<Provisioner> provisioner_;
  std::unique_ptr<Policies> policies_;
  std::unique_ptr<Workload> workload_;
  SimSummary summary_;
  bool allocated_ = false;
};

}  // namespace msim
