#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "msim/errors.hpp"
#include "msim/rng.hpp"

namespace msim {

// Simulated time in seconds.
using SimTime = double;

constexpr SimTime kNoTimeLimit = std::numeric_limits<double>::infinity();

enum class EventKind : std::uint8_t {
  Generate,
  Dispatch,
  StartExecution,
  Derive,
  CloudletComplete,
  ScalingCheck,
  MigrationCheck,
  MetricsSample,
  EndSimulation,
};

constexpr std::size_t kEventKindCount = 9;

const char* to_string(EventKind kind);

struct SimEvent {
  SimTime fire_at = 0;
  EventKind kind = EventKind::Generate;
  // Kind-specific payload: entity ids, generation counters.
  std::int64_t a = 0;
  std::int64_t b = 0;
  // Insertion counter; (fire_at, seq) totally orders all events ever queued.
  std::uint64_t seq = 0;
};

struct SimSummary {
  SimTime clock = 0;
  std::uint64_t scheduled = 0;
  std::uint64_t delivered = 0;
  std::uint64_t remaining = 0;
  std::array<std::uint64_t, kEventKindCount> per_kind{};
};

// Deterministic discrete-event kernel: a future-event list ordered by
// (fire_at, seq), a virtual clock, and one handler per event kind. The kernel
// also owns the run's only RNG so that all stochastic draws happen in
// handler-execution order.
class SimulationEngine {
 public:
  using Handler = std::function<void(const SimEvent&)>;

  explicit SimulationEngine(std::uint64_t seed = 0) : rng_(seed) {}

  void on(EventKind kind, Handler handler) {
    handlers_[static_cast<std::size_t>(kind)] = std::move(handler);
  }

  void schedule(SimTime fire_at, EventKind kind, std::int64_t a = 0,
                std::int64_t b = 0) {
    if (!(fire_at >= clock_) || !std::isfinite(fire_at))
      throw LogicError("schedule: event in the past or non-finite time");
    queue_.push(SimEvent{fire_at, kind, a, b, next_seq_++});
    ++scheduled_;
  }

  // Processes events with fire_at <= until in (fire_at, seq) order. The clock
  // ends at the time of the last processed event; an empty queue terminates
  // normally.
  SimSummary run(SimTime until = kNoTimeLimit);

  SimTime now() const { return clock_; }
  bool empty() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }
  Rng& rng() { return rng_; }

  SimSummary summary() const;

 private:
  struct Later {
    bool operator()(const SimEvent& x, const SimEvent& y) const {
      if (x.fire_at != y.fire_at) return x.fire_at > y.fire_at;
      return x.seq > y.seq;
    }
  };

  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue_;
  std::array<Handler, kEventKindCount> handlers_{};
  SimTime clock_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t scheduled_ = 0;
  std::array<std::uint64_t, kEventKindCount> delivered_{};
  Rng rng_;
};

}  // namespace msim
