#pragma once

#include <cstdint>
#include <vector>

#include "msim/config.hpp"
#include "msim/engine.hpp"
#include "msim/model.hpp"
#include "msim/scheduling.hpp"
#include "msim/telemetry.hpp"

namespace msim {

// Closed-form predictors for the open-workload generator.
struct Prediction {
  double clients = 0;     // N(t) = min(Nc, v t)
  double rate = 0;        // lambda(t) = N(t) * 2/(p0+p1)
  double cumulative = 0;  // R(t), quadratic then affine
};

Prediction predict(double t, double num_clients, double spawn_rate, double p0,
                   double p1);

// Open-loop request generator driven by 1-second Generate ticks. Clients grow
// at the spawn rate; each client fires when its countdown timer crosses zero,
// draws the target API from the weight distribution and resets the timer
// uniformly on [p0, p1]. A fresh client's first timer comes from the
// stationary residual law of that interval, so the per-client request rate is
// 1/E(p) from the moment it spawns.
class Workload {
 public:
  Workload(Model& model, SimulationEngine& engine, Scheduling& sched,
           Telemetry& telemetry, const ScenarioConfig& cfg);

  void start();  // schedules the first Generate tick at t = 0
  void on_generate(const SimEvent& ev);
  void on_dispatch(const SimEvent& ev);

  bool halted() const { return halted_; }
  std::int64_t emitted() const { return emitted_; }
  std::int64_t current_clients() const { return active_; }
  // current_clients at each integer tick 0,1,2,...
  const std::vector<std::int64_t>& clients_curve() const { return curve_; }

  double draw_residual_wait();  // exposed for distribution tests

 private:
  Model& model_;
  SimulationEngine& engine_;
  Scheduling& sched_;
  Telemetry& telemetry_;
  const ScenarioConfig::Generator gen_;

  std::vector<double> timers_;
  std::int64_t active_ = 0;
  std::int64_t emitted_ = 0;
  bool halted_ = false;
  std::vector<std::int64_t> curve_;
};

}  // namespace msim
