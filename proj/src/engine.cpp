#include "msim/engine.hpp"

namespace msim {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Generate: return "Generate";
    case EventKind::Dispatch: return "Dispatch";
    case EventKind::StartExecution: return "StartExecution";
    case EventKind::Derive: return "Derive";
    case EventKind::CloudletComplete: return "CloudletComplete";
    case EventKind::ScalingCheck: return "ScalingCheck";
    case EventKind::MigrationCheck: return "MigrationCheck";
    case EventKind::MetricsSample: return "MetricsSample";
    case EventKind::EndSimulation: return "EndSimulation";
  }
  return "?";
}

SimSummary SimulationEngine::run(SimTime until) {
  while (!queue_.empty() && queue_.top().fire_at <= until) {
    SimEvent ev = queue_.top();
    queue_.pop();
    clock_ = ev.fire_at;
    auto& handler = handlers_[static_cast<std::size_t>(ev.kind)];
    if (!handler)
      throw LogicError(std::string("no handler registered for ") +
                       to_string(ev.kind));
    ++delivered_[static_cast<std::size_t>(ev.kind)];
    handler(ev);
  }
  return summary();
}

SimSummary SimulationEngine::summary() const {
  SimSummary s;
  s.clock = clock_;
  s.scheduled = scheduled_;
  s.per_kind = delivered_;
  for (auto n : delivered_) s.delivered += n;
  s.remaining = queue_.size();
  return s;
}

}  // namespace msim
