#include "msim/simulation.hpp"

namespace msim {

Simulation::Simulation(Model model, ScenarioConfig cfg)
    : model_(std::move(model)), cfg_(std::move(cfg)) {
  cfg_.validate();
  engine_ = std::make_unique<SimulationEngine>(cfg_.seed);
  arena_ = std::make_unique<CloudletArena>();
  telemetry_ = std::make_unique<Telemetry>(model_, *arena_, cfg_);
  scheduling_ = std::make_unique<Scheduling>(model_, *arena_, *engine_,
                                             *telemetry_, cfg_);
  provisioner_ = std::make_unique<Provisioner>();
  provisioner_->reset(model_);
  policies_ = std::make_unique<Policies>(model_, *provisioner_, *scheduling_,
                                         *telemetry_, cfg_);
  workload_ = std::make_unique<Workload>(model_, *engine_, *scheduling_,
                                         *telemetry_, cfg_);

  scheduling_->set_idle_hook(
      [this](std::int32_t inst, SimTime t) { policies_->finish_drain(inst, t); });

  engine_->on(EventKind::Generate,
              [this](const SimEvent& ev) { workload_->on_generate(ev); });
  engine_->on(EventKind::Dispatch,
              [this](const SimEvent& ev) { workload_->on_dispatch(ev); });
  engine_->on(EventKind::CloudletComplete, [this](const SimEvent& ev) {
    scheduling_->on_complete_event(ev);
  });
  engine_->on(EventKind::ScalingCheck, [this](const SimEvent& ev) {
    policies_->scaling_check(ev.fire_at);
    if (keep_periodic())
      engine_->schedule(ev.fire_at + cfg_.scaling.check_interval,
                        EventKind::ScalingCheck);
  });
  engine_->on(EventKind::MigrationCheck, [this](const SimEvent& ev) {
    policies_->migration_check(ev.fire_at);
    if (keep_periodic())
      engine_->schedule(ev.fire_at + cfg_.scaling.check_interval,
                        EventKind::MigrationCheck);
  });
  engine_->on(EventKind::MetricsSample, [this](const SimEvent& ev) {
    telemetry_->sample_usage(ev.fire_at);
    scheduling_->starvation_sweep(ev.fire_at);
    if (keep_periodic())
      engine_->schedule(ev.fire_at + cfg_.metrics_sample_interval,
                        EventKind::MetricsSample);
  });
  engine_->on(EventKind::EndSimulation, [](const SimEvent&) {});
}

bool Simulation::keep_periodic() const {
  return !workload_->halted() || telemetry_->in_flight() > 0;
}

void Simulation::allocate() {
  if (allocated_) return;
  allocated_ = true;
  policies_->allocate_all(engine_->now());
}

SimSummary Simulation::run(SimTime until) {
  if (until > cfg_.run_until) until = cfg_.run_until;
  allocate();
  workload_->start();
  // Scaling first, then migration at the same timestamp: insertion order
  // keeps the intra-tick ordering deterministic.
  if (cfg_.scaling.kind != ScalingPolicyKind::None)
    engine_->schedule(cfg_.scaling.check_interval, EventKind::ScalingCheck);
  if (cfg_.migration.enabled)
    engine_->schedule(cfg_.scaling.check_interval, EventKind::MigrationCheck);
  if (cfg_.metrics_sample_interval > 0)
    engine_->schedule(cfg_.metrics_sample_interval, EventKind::MetricsSample);
  summary_ = engine_->run(until);
  telemetry_->close(engine_->now());
  return summary_;
}

}  // namespace msim
