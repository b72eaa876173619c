#include "msim/scheduling.hpp"

#include <algorithm>
#include <cmath>

namespace msim {

namespace {

std::map<std::string, LoadBalancerFn>& lb_registry() {
  static std::map<std::string, LoadBalancerFn> reg;
  return reg;
}

std::map<std::string, QueueOrderFn>& order_registry() {
  static std::map<std::string, QueueOrderFn> reg;
  return reg;
}

}  // namespace

void register_load_balancer(const std::string& name, LoadBalancerFn fn) {
  lb_registry()[name] = std::move(fn);
}

void register_queue_order(const std::string& name, QueueOrderFn fn) {
  order_registry()[name] = std::move(fn);
}

Scheduling::Scheduling(Model& model, CloudletArena& arena,
                       SimulationEngine& engine, Telemetry& telemetry,
                       const ScenarioConfig& cfg)
    : model_(model), arena_(arena), engine_(engine), telemetry_(telemetry),
      cfg_(cfg) {
  exec_.resize(model_.instances.size());
  queues_.resize(model_.services.size());

  if (cfg_.lb_policy == "MaxIdle") {
    balancer_ = [](Scheduling& s, std::int32_t svc) { return s.pick_max_idle(svc); };
  } else if (cfg_.lb_policy == "Random") {
    balancer_ = [](Scheduling& s, std::int32_t svc) { return s.pick_random(svc); };
  } else {
    auto it = lb_registry().find(cfg_.lb_policy);
    if (it == lb_registry().end())
      throw ValidationError("unknown lb_policy \"" + cfg_.lb_policy + "\"");
    balancer_ = it->second;
  }

  if (cfg_.queue_order == "Fifo") {
    admitter_ = [](std::deque<std::int32_t>& q, std::int32_t id,
                   const CloudletArena&) { q.push_back(id); };
  } else if (cfg_.queue_order == "Priority") {
    // Higher priority first; FIFO among equals.
    admitter_ = [](std::deque<std::int32_t>& q, std::int32_t id,
                   const CloudletArena& arena) {
      auto pos = q.end();
      while (pos != q.begin() &&
             arena[*(pos - 1)].priority < arena[id].priority)
        --pos;
      q.insert(pos, id);
    };
  } else {
    auto it = order_registry().find(cfg_.queue_order);
    if (it == order_registry().end())
      throw ValidationError("unknown queue_order \"" + cfg_.queue_order + "\"");
    admitter_ = it->second;
  }
}

double Scheduling::compute_mips(std::int32_t inst) const {
  const Instance& in = model_.instances[inst];
  if (in.host_vm < 0) return 0;
  return in.limit_shares / 1000.0 * model_.vms[in.host_vm].mips_per_pe;
}

void Scheduling::settle(ExecState& ex, SimTime t) const {
  if (ex.sum_w > 0 && t > ex.settled_at)
    ex.v += (t - ex.settled_at) * ex.mips / ex.sum_w;
  ex.settled_at = t;
}

void Scheduling::schedule_head(std::int32_t inst, SimTime t) {
  ExecState& ex = exec_[inst];
  ++ex.generation;
  if (ex.heap.empty()) return;
  if (!(ex.mips > 0))
    throw LogicError("instance executing with zero rate");
  double head = ex.heap.top().first;
  SimTime fire = ex.settled_at + (head - ex.v) * ex.sum_w / ex.mips;
  if (fire < t) fire = t;
  engine_.schedule(fire, EventKind::CloudletComplete, inst,
                   static_cast<std::int64_t>(ex.generation));
}

double Scheduling::sample_length(std::int32_t service) {
  const CloudletParams* p = &cfg_.cloudlet;
  auto it = cfg_.cloudlet_overrides.find(model_.services[service].name);
  if (it != cfg_.cloudlet_overrides.end()) p = &it->second;
  double len = p->std_dev > 0
                   ? engine_.rng().normal(p->mean_length, p->std_dev)
                   : p->mean_length;
  return std::max(1.0, len);
}

std::int32_t Scheduling::create_root(std::int64_t request, std::int32_t service,
                                     SimTime t) {
  std::int32_t id = arena_.create();
  RpcCloudlet& c = arena_[id];
  c.request_id = request;
  c.service = service;
  c.length = c.remaining = sample_length(service);
  c.created_at = t;
  telemetry_.cloudlet_created(request);
  admit(id, t);
  try_start(service, t);
  return id;
}

void Scheduling::admit(std::int32_t cloudlet, SimTime t) {
  RpcCloudlet& c = arena_[cloudlet];
  if (c.status != CloudletStatus::Waiting)
    throw LogicError("admit: cloudlet not in Waiting state");
  (void)t;
  ServiceQueues& q = queues_[c.service];
  ++q.admitted;
  admitter_(q.waiting, cloudlet, arena_);
}

bool Scheduling::eligible(std::int32_t inst) const {
  const Instance& in = model_.instances[inst];
  if (!in.allocated || in.draining) return false;
  if (cfg_.concurrency_cap > 0 &&
      n_executing(inst) >= cfg_.concurrency_cap)
    return false;
  return in.limit_shares > 0;
}

std::int32_t Scheduling::pick_max_idle(std::int32_t service) {
  std::int32_t best = -1;
  double best_idle = -1;
  for (std::int32_t inst : model_.service_instances[service]) {
    if (!eligible(inst)) continue;
    const Instance& in = model_.instances[inst];
    double idle = in.limit_shares - std::min(in.limit_shares,
                                             telemetry_.cpu_per_cloudlet(inst) *
                                                 n_executing(inst));
    if (idle > best_idle) {
      best_idle = idle;
      best = inst;
    }
  }
  return best;
}

std::int32_t Scheduling::pick_random(std::int32_t service) {
  const auto& pool = model_.service_instances[service];
  if (pool.empty()) return -1;
  std::size_t n = pool.size();
  std::size_t at = static_cast<std::size_t>(engine_.rng().uniform01() * n);
  if (at >= n) at = n - 1;
  // Scan forward from the drawn position so a draw on an ineligible instance
  // still lands deterministically.
  for (std::size_t k = 0; k < n; ++k) {
    std::int32_t inst = pool[(at + k) % n];
    if (eligible(inst)) return inst;
  }
  return -1;
}

bool Scheduling::has_active_instance(std::int32_t service) const {
  for (std::int32_t inst : model_.service_instances[service]) {
    const Instance& in = model_.instances[inst];
    if (in.allocated && !in.draining && in.limit_shares > 0) return true;
  }
  return false;
}

int Scheduling::try_start(std::int32_t service, SimTime t) {
  ServiceQueues& q = queues_[service];
  int started = 0;
  while (!q.waiting.empty()) {
    std::int32_t inst = balancer_(*this, service);
    if (inst < 0) break;
    std::int32_t c = q.waiting.front();
    q.waiting.pop_front();
    start_on(c, inst, t);
    ++q.started;
    ++started;
  }
  return started;
}

void Scheduling::start_on(std::int32_t cloudlet, std::int32_t inst, SimTime t) {
  RpcCloudlet& c = arena_[cloudlet];
#ifndef NDEBUG
  {
    const auto& owners = model_.instance_services[inst];
    if (std::find(owners.begin(), owners.end(), c.service) == owners.end())
      throw LogicError("start_on: instance not mapped to cloudlet's service");
  }
#endif
  ExecState& ex = exec_[inst];
  telemetry_.set_exec(inst, t, static_cast<int>(ex.heap.size()) + 1);
  settle(ex, t);
  c.status = CloudletStatus::Executing;
  c.started_at = t;
  c.instance = inst;
  ex.sum_w += c.weight;
  c.v_target = ex.v + c.remaining / c.weight;
  ex.heap.emplace(c.v_target, cloudlet);
  ++total_executing_;
  schedule_head(inst, t);
}

void Scheduling::on_complete_event(const SimEvent& ev) {
  auto inst = static_cast<std::int32_t>(ev.a);
  ExecState& ex = exec_[inst];
  if (static_cast<std::uint64_t>(ev.b) != ex.generation) return;  // stale
  SimTime t = ev.fire_at;
  settle(ex, t);

  due_scratch_.clear();
  double eps = 1e-9 * (1.0 + std::abs(ex.v));
  while (!ex.heap.empty() && ex.heap.top().first <= ex.v + eps) {
    due_scratch_.push_back(ex.heap.top().second);
    ex.heap.pop();
  }
  if (due_scratch_.empty()) {
    // Rounding left the clock a hair short of the head target.
    ex.v = ex.heap.top().first;
    due_scratch_.push_back(ex.heap.top().second);
    ex.heap.pop();
  }

  telemetry_.set_exec(inst, t, static_cast<int>(ex.heap.size()));
  for (std::int32_t id : due_scratch_) {
    RpcCloudlet& c = arena_[id];
    ex.sum_w -= c.weight;
    c.status = CloudletStatus::Finished;
    c.remaining = 0;
    c.finished_at = t;
    --total_executing_;
    ServiceQueues& q = queues_[c.service];
    ++q.finished_count;
    if (cfg_.retain_finished) q.finished.push_back(id);
  }
  if (ex.heap.empty()) ex.sum_w = 0;  // absorb fp residue

  // Derivation: one child per callee, then request bookkeeping. Children may
  // land back on this instance (shared via labels); generation bumps keep the
  // pending completion event consistent.
  std::size_t n_due = due_scratch_.size();
  for (std::size_t i = 0; i < n_due; ++i) {
    std::int32_t id = due_scratch_[i];
    std::int64_t req = arena_[id].request_id;
    std::int32_t svc = arena_[id].service;
    const auto& callees = model_.forward[svc];
    for (std::int32_t callee : callees) {
      std::int32_t child = arena_.create();
      RpcCloudlet& ch = arena_[child];
      ch.request_id = req;
      ch.service = callee;
      ch.parent = id;
      ch.length = ch.remaining = sample_length(callee);
      ch.created_at = t;
      ch.next_sibling = arena_[id].first_child;
      arena_[id].first_child = child;
      telemetry_.cloudlet_created(req);
      telemetry_.derivation_on(inst);
      admit(child, t);
      try_start(callee, t);
    }
    telemetry_.cloudlet_finished(req, t);
  }

  // A completion may free capacity for queued work on this instance.
  if (cfg_.concurrency_cap > 0) {
    for (std::int32_t svc : model_.instance_services[inst])
      if (!queues_[svc].waiting.empty()) try_start(svc, t);
  }

  schedule_head(inst, t);

  if (ex.heap.empty() && model_.instances[inst].draining && idle_hook_)
    idle_hook_(inst, t);
}

void Scheduling::instance_activated(std::int32_t inst, SimTime t) {
  if (static_cast<std::size_t>(inst) >= exec_.size())
    exec_.resize(inst + 1);
  ExecState& ex = exec_[inst];
  ex.mips = compute_mips(inst);
  ex.settled_at = t;
  // Fresh capacity: queued work on this instance's services can start.
  for (std::int32_t svc : model_.instance_services[inst])
    if (!queues_[svc].waiting.empty()) try_start(svc, t);
}

void Scheduling::instance_rate_changed(std::int32_t inst, SimTime t) {
  ExecState& ex = exec_[inst];
  settle(ex, t);
  ex.mips = compute_mips(inst);
  schedule_head(inst, t);
}

void Scheduling::instance_deactivated(std::int32_t inst) {
  if (n_executing(inst) != 0)
    throw LogicError("deactivating instance with executing cloudlets");
}

void Scheduling::starvation_sweep(SimTime t) {
  if (cfg_.starvation_timeout <= 0) return;
  std::int64_t newly = 0;
  for (auto& q : queues_) {
    if (q.waiting.empty()) continue;
    std::deque<std::int32_t> keep;
    std::vector<std::int32_t> starved;
    for (std::int32_t id : q.waiting) {
      RpcCloudlet& c = arena_[id];
      if (!c.starved && t - c.created_at >= cfg_.starvation_timeout) {
        c.starved = true;
        starved.push_back(id);
        ++newly;
      } else {
        keep.push_back(id);
      }
    }
    if (!starved.empty()) {
      for (std::int32_t id : starved) keep.push_back(id);
      q.waiting.swap(keep);
    }
  }
  if (newly > 0) telemetry_.count_starved(newly);
}

int Scheduling::n_executing(std::int32_t inst) const {
  return static_cast<int>(exec_[inst].heap.size());
}

double Scheduling::instance_mips(std::int32_t inst) const {
  return exec_[inst].mips;
}

double Scheduling::remaining_now(std::int32_t cloudlet, SimTime t) const {
  const RpcCloudlet& c = arena_[cloudlet];
  if (c.status == CloudletStatus::Waiting) return c.remaining;
  if (c.status == CloudletStatus::Finished) return 0;
  ExecState ex = exec_[c.instance];  // copy; settle without mutating
  settle(ex, t);
  return std::max(0.0, (c.v_target - ex.v) * c.weight);
}

std::size_t Scheduling::waiting_count(std::int32_t service) const {
  return queues_[service].waiting.size();
}

const std::deque<std::int32_t>& Scheduling::waiting_ids(
    std::int32_t service) const {
  return queues_[service].waiting;
}

std::uint64_t Scheduling::admitted_count(std::int32_t service) const {
  return queues_[service].admitted;
}

std::uint64_t Scheduling::finished_count(std::int32_t service) const {
  return queues_[service].finished_count;
}

const std::vector<std::int32_t>& Scheduling::finished_ids(
    std::int32_t service) const {
  return queues_[service].finished;
}

}  // namespace msim
