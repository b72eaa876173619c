#include "msim/workload.hpp"

#include <algorithm>
#include <cmath>

namespace msim {

Prediction predict(double t, double num_clients, double spawn_rate, double p0,
                   double p1) {
  Prediction p;
  p.clients = std::min(num_clients, spawn_rate * t);
  double mean_wait = (p0 + p1) / 2.0;
  p.rate = p.clients / mean_wait;
  double ramp_end = num_clients / spawn_rate;
  if (t <= ramp_end) {
    p.cumulative = spawn_rate / (p0 + p1) * t * t;
  } else {
    p.cumulative = 2.0 * num_clients / (p0 + p1) * t -
                   num_clients * num_clients / (spawn_rate * (p0 + p1));
  }
  return p;
}

Workload::Workload(Model& model, SimulationEngine& engine, Scheduling& sched,
                   Telemetry& telemetry, const ScenarioConfig& cfg)
    : model_(model), engine_(engine), sched_(sched), telemetry_(telemetry),
      gen_(cfg.generator) {
  timers_.resize(static_cast<std::size_t>(gen_.num_clients));
}

void Workload::start() {
  if (model_.apis.empty()) throw ValidationError("no APIs registered");
  engine_.schedule(0, EventKind::Generate);
}

double Workload::draw_residual_wait() {
  // Stationary residual of Uniform[p0,p1]: density (1 - F(x)) / E(p).
  double p0 = gen_.wait_min, p1 = gen_.wait_max;
  double mean = (p0 + p1) / 2.0;
  double u = engine_.rng().uniform01();
  if (p1 == p0) return u * p0;
  double head_mass = p0 / mean;
  if (u <= head_mass) return u * mean;
  double span = p1 - p0;
  double rad = span * span - 2.0 * span * (mean * u - p0);
  return p1 - std::sqrt(std::max(0.0, rad));
}

void Workload::on_generate(const SimEvent& ev) {
  SimTime t = ev.fire_at;
  if (t >= gen_.time_limit || emitted_ >= gen_.num_limit) {
    halted_ = true;
    return;
  }

  auto target = static_cast<std::int64_t>(
      std::min(static_cast<double>(gen_.num_clients), gen_.spawn_rate * t));
  while (active_ < target) timers_[active_++] = draw_residual_wait();
  curve_.push_back(active_);

  for (std::int64_t i = 0; i < active_ && emitted_ < gen_.num_limit; ++i) {
    timers_[i] -= 1.0;
    if (timers_[i] <= 0) {
      auto api = static_cast<std::int32_t>(engine_.rng().pick_cdf(model_.api_cdf));
      std::int64_t req = telemetry_.request_generated(api, t);
      engine_.schedule(t, EventKind::Dispatch, req);
      ++emitted_;
      // Carry the overshoot so long-run inter-request time is exactly the
      // drawn wait; the clamp only binds when waits are shorter than a tick.
      timers_[i] = std::max(timers_[i] + engine_.rng().uniform(gen_.wait_min,
                                                               gen_.wait_max),
                            -1.0);
    }
  }

  if (emitted_ < gen_.num_limit && t + 1 < gen_.time_limit) {
    engine_.schedule(t + 1, EventKind::Generate);
  } else {
    halted_ = true;
  }
}

void Workload::on_dispatch(const SimEvent& ev) {
  std::int64_t req = ev.a;
  const RequestRec& rec = telemetry_.requests()[req];
  std::int32_t entry = model_.api_entry[rec.api];
  if (!sched_.has_active_instance(entry)) {
    telemetry_.request_failed(req);
    return;
  }
  std::int32_t root = sched_.create_root(req, entry, ev.fire_at);
  telemetry_.attach_root(req, root);
}

}  // namespace msim
