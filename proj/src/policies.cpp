#include "msim/policies.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace msim {

void Provisioner::reset(const Model& model) {
  used_.assign(model.vms.size(), {});
  grants_.assign(model.instances.size(), {});
}

void Provisioner::ensure_slot(std::int32_t inst) {
  if (grants_.size() <= static_cast<std::size_t>(inst))
    grants_.resize(inst + 1);
}

bool Provisioner::fits(const Model& model, std::int32_t vm, double shares,
                       double ram, double bw, bool gate_bw) const {
  const Vm& v = model.vms[vm];
  if (used_[vm].shares + shares > v.total_shares + 1e-9) return false;
  if (used_[vm].ram + ram > v.ram + 1e-9) return false;
  if (gate_bw && used_[vm].bw + bw > v.bw + 1e-9) return false;
  return true;
}

void Provisioner::grant(const Model& model, std::int32_t vm, std::int32_t inst,
                        double shares, double ram, double bw) {
  ensure_slot(inst);
  if (grants_[inst].vm >= 0)
    throw LogicError("instance already holds a grant");
  if (used_[vm].shares + shares > model.vms[vm].total_shares + 1e-9 ||
      used_[vm].ram + ram > model.vms[vm].ram + 1e-9)
    throw LogicError("grant exceeds idle resources on vm " + model.vms[vm].id);
  used_[vm].shares += shares;
  used_[vm].ram += ram;
  used_[vm].bw += bw;
  grants_[inst] = Grant{vm, shares, ram, bw};
}

void Provisioner::release(std::int32_t inst) {
  Grant& g = grants_[inst];
  if (g.vm < 0) throw LogicError("releasing instance without a grant");
  used_[g.vm].shares -= g.shares;
  used_[g.vm].ram -= g.ram;
  used_[g.vm].bw -= g.bw;
  g = Grant{};
}

std::string Provisioner::snapshot(const Model& model) const {
  std::ostringstream out;
  out.precision(12);
  for (std::size_t v = 0; v < used_.size(); ++v)
    out << "vm " << model.vms[v].id << " used " << used_[v].shares << ' '
        << used_[v].ram << ' ' << used_[v].bw << '\n';
  for (std::size_t i = 0; i < grants_.size(); ++i)
    if (grants_[i].vm >= 0)
      out << "grant " << i << " -> vm" << grants_[i].vm << ' '
          << grants_[i].shares << ' ' << grants_[i].ram << ' ' << grants_[i].bw
          << '\n';
  return out.str();
}

void Provisioner::check_exact(const Model& model) const {
  std::vector<Used> sum(used_.size());
  for (std::size_t i = 0; i < grants_.size(); ++i) {
    if (grants_[i].vm < 0) continue;
    sum[grants_[i].vm].shares += grants_[i].shares;
    sum[grants_[i].vm].ram += grants_[i].ram;
    sum[grants_[i].vm].bw += grants_[i].bw;
  }
  for (std::size_t v = 0; v < used_.size(); ++v) {
    if (std::abs(sum[v].shares - used_[v].shares) > 1e-6 ||
        std::abs(sum[v].ram - used_[v].ram) > 1e-6 ||
        std::abs(sum[v].bw - used_[v].bw) > 1e-6)
      throw LogicError("provisioner ledger out of sync on vm " +
                       model.vms[v].id);
  }
}

Policies::Policies(Model& model, Provisioner& prov, Scheduling& sched,
                   Telemetry& telemetry, const ScenarioConfig& cfg)
    : model_(model), prov_(prov), sched_(sched), telemetry_(telemetry),
      cfg_(cfg) {
  breach_up_.assign(model_.services.size(), 0);
  breach_down_.assign(model_.services.size(), 0);
}

std::vector<std::int32_t> Policies::vms_sorted_by_idle() const {
  std::vector<std::int32_t> order(model_.vms.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = static_cast<std::int32_t>(i);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    double ia = prov_.idle_shares(model_, a);
    double ib = prov_.idle_shares(model_, b);
    if (ia != ib) return ia > ib;
    return a < b;
  });
  return order;
}

std::int32_t Policies::first_fit(double shares, double ram, double bw) const {
  for (std::int32_t vm : vms_sorted_by_idle())
    if (prov_.fits(model_, vm, shares, ram, bw, cfg_.ram_bw_gating)) return vm;
  return -1;
}

void Policies::bind_instance(std::int32_t inst, std::int32_t vm, SimTime t) {
  Instance& in = model_.instances[inst];
  prov_.grant(model_, vm, inst, in.requested_shares, in.requested_ram,
              in.bandwidth);
  in.host_vm = vm;
  in.allocated = true;
  model_.vms[vm].hosted.push_back(inst);
  telemetry_.instance_allocated(inst, t);
  sched_.instance_activated(inst, t);
}

void Policies::unbind_instance(std::int32_t inst, SimTime t) {
  Instance& in = model_.instances[inst];
  telemetry_.instance_deallocated(inst, t);
  prov_.release(inst);
  auto& hosted = model_.vms[in.host_vm].hosted;
  hosted.erase(std::find(hosted.begin(), hosted.end(), inst));
  in.host_vm = -1;
  in.allocated = false;
}

bool Policies::allocate_service(std::int32_t service, SimTime t) {
  // Alg. 3: match by labels (done at registration), sort VMs by idle PE
  // resources descending, first-fit each instance, re-sort after each grant.
  for (std::int32_t inst : model_.service_instances[service]) {
    Instance& in = model_.instances[inst];
    if (in.allocated) continue;
    std::int32_t vm = first_fit(in.requested_shares, in.requested_ram,
                                in.bandwidth);
    if (vm >= 0) bind_instance(inst, vm, t);
  }
  for (std::int32_t inst : model_.service_instances[service])
    if (model_.instances[inst].allocated) return true;
  return false;
}

int Policies::allocate_all(SimTime t) {
  int placed = 0;
  for (std::size_t s = 0; s < model_.services.size(); ++s) {
    if (allocate_service(static_cast<std::int32_t>(s), t)) ++placed;
    else model_.warnings.push_back("service \"" + model_.services[s].name +
                                   "\" has no allocated instances");
  }
  return placed;
}

double Policies::mean_service_utilization(std::int32_t service) const {
  double sum = 0;
  int n = 0;
  for (std::int32_t inst : model_.service_instances[service]) {
    const Instance& in = model_.instances[inst];
    if (!in.allocated || in.draining) continue;
    sum += telemetry_.utilization(inst);
    ++n;
  }
  return n > 0 ? sum / n : 0;
}

double Policies::window_utilization(std::int32_t service, SimTime t) {
  if (marks_.size() < model_.instances.size())
    marks_.resize(model_.instances.size());
  double sum = 0;
  int n = 0;
  for (std::int32_t inst : model_.service_instances[service]) {
    const Instance& in = model_.instances[inst];
    if (!in.allocated || in.draining) continue;
    auto [cpu, alive] = telemetry_.usage_snapshot(inst, t);
    UsageMark& mark = marks_[inst];
    if (mark.primed && alive > mark.alive_seconds) {
      double util = (cpu - mark.cpu_integral) /
                    ((alive - mark.alive_seconds) * in.limit_shares);
      sum += util;
      ++n;
    }
    mark = UsageMark{cpu, alive, true};
  }
  return n > 0 ? sum / n : -1;  // -1: no window yet
}

std::optional<ScaleDirection> Policies::scaling_trigger(std::int32_t service,
                                                        SimTime t) {
  bool horizontal = cfg_.scaling.kind == ScalingPolicyKind::Horizontal;
  double u = window_utilization(service, t);
  if (u < 0) return std::nullopt;
  int& up = breach_up_[service];
  int& down = breach_down_[service];
  if (u > cfg_.scaling.upper_threshold) {
    ++up;
    down = 0;
  } else if (u < cfg_.scaling.lower_threshold) {
    ++down;
    up = 0;
  } else {
    up = down = 0;
  }
  if (up >= cfg_.scaling.consecutive_breaches) {
    up = 0;
    return horizontal ? ScaleDirection::Out : ScaleDirection::Up;
  }
  if (down >= cfg_.scaling.consecutive_breaches) {
    down = 0;
    return horizontal ? ScaleDirection::In : ScaleDirection::Down;
  }
  return std::nullopt;
}

std::vector<std::int32_t> Policies::replica_sets_of(std::int32_t service) const {
  std::vector<std::int32_t> out;
  for (std::size_t r = 0; r < model_.replica_sets.size(); ++r)
    if (labels_match(model_.services[service].labels,
                     model_.replica_sets[r].instance_template.labels))
      out.push_back(static_cast<std::int32_t>(r));
  return out;
}

double Policies::mean_limit_shares(std::int32_t service) const {
  double sum = 0;
  int n = 0;
  for (std::int32_t inst : model_.service_instances[service]) {
    const Instance& in = model_.instances[inst];
    if (!in.allocated) continue;
    sum += in.limit_shares;
    ++n;
  }
  return n > 0 ? sum / n : 0;
}

int Policies::replicas_after(std::int32_t service) const {
  int n = 0;
  for (std::int32_t inst : model_.service_instances[service]) {
    const Instance& in = model_.instances[inst];
    if (in.allocated && !in.draining) ++n;
  }
  return n;
}

bool Policies::scale_horizontal(std::int32_t service, ScaleDirection dir,
                                SimTime t) {
  double trigger_util = mean_service_utilization(service);
  bool any = false;
  ScaleOutcome outcome = ScaleOutcome::Skipped;
  for (std::int32_t r : replica_sets_of(service)) {
    ReplicaSet& set = model_.replica_sets[r];
    if (dir == ScaleDirection::Out) {
      if (static_cast<int>(set.replicas.size()) >= set.max_replicas) continue;
      const Instance& tpl = set.instance_template;
      std::int32_t vm = first_fit(tpl.requested_shares, tpl.requested_ram,
                                  tpl.bandwidth);
      if (vm < 0) {
        outcome = ScaleOutcome::Failed;
        continue;
      }
      // Clone the template, register it, bind it to every matching service.
      Instance inst = tpl;
      inst.id = set.name + "-" + std::to_string(set.next_ordinal++);
      inst.replica_set = r;
      auto idx = static_cast<std::int32_t>(model_.instances.size());
      model_.instances.push_back(std::move(inst));
      model_.instance_index.emplace(model_.instances[idx].id, idx);
      model_.instance_services.push_back({});
      prov_.ensure_slot(idx);
      for (std::size_t s = 0; s < model_.services.size(); ++s) {
        if (labels_match(model_.services[s].labels,
                         model_.instances[idx].labels)) {
          model_.service_instances[s].push_back(idx);
          model_.instance_services[idx].push_back(static_cast<std::int32_t>(s));
        }
      }
      set.replicas.push_back(idx);
      bind_instance(idx, vm, t);
      any = true;
      outcome = ScaleOutcome::Applied;
    } else {  // In
      int live = 0;
      for (std::int32_t i : set.replicas)
        if (model_.instances[i].allocated && !model_.instances[i].draining)
          ++live;
      if (live <= set.min_replicas) continue;
      // Victim: fewest executing cloudlets, newest replica among ties.
      std::int32_t victim = -1;
      int best_n = -1;
      for (std::int32_t i : set.replicas) {
        const Instance& in = model_.instances[i];
        if (!in.allocated || in.draining) continue;
        int n = sched_.n_executing(i);
        if (victim < 0 || n <= best_n) {
          victim = i;
          best_n = n;
        }
      }
      if (victim < 0) continue;
      model_.instances[victim].draining = true;
      if (sched_.n_executing(victim) == 0) finish_drain(victim, t);
      any = true;
      outcome = ScaleOutcome::Applied;
    }
  }
  ScalingRecord rec;
  rec.t = t;
  rec.service = service;
  rec.direction = dir;
  rec.outcome = any ? ScaleOutcome::Applied : outcome;
  rec.trigger_util = trigger_util;
  rec.replicas_after = replicas_after(service);
  rec.limits_after = mean_limit_shares(service);
  telemetry_.record_scaling(rec);
  return any;
}

void Policies::finish_drain(std::int32_t inst, SimTime t) {
  Instance& in = model_.instances[inst];
  if (!in.draining) return;
  in.draining = false;
  sched_.instance_deactivated(inst);
  unbind_instance(inst, t);
  if (in.replica_set >= 0) {
    auto& reps = model_.replica_sets[in.replica_set].replicas;
    reps.erase(std::find(reps.begin(), reps.end(), inst));
  }
  // Drop it from the service maps so future matching ignores it.
  for (std::int32_t s : model_.instance_services[inst]) {
    auto& list = model_.service_instances[s];
    list.erase(std::find(list.begin(), list.end(), inst));
  }
  model_.instance_services[inst].clear();
}

bool Policies::scale_vertical(std::int32_t service, ScaleDirection dir,
                              SimTime t) {
  const double f = cfg_.scaling.vs_factor;
  double trigger_util = mean_service_utilization(service);
  bool any = false;
  bool attempted = false;
  for (std::int32_t inst : model_.service_instances[service]) {
    Instance& in = model_.instances[inst];
    if (!in.allocated || in.draining) continue;
    double new_req_shares, new_req_ram, new_lim_shares, new_lim_ram;
    if (dir == ScaleDirection::Up) {
      // computeInstanceRequests: the new request is the scaled limit, so an
      // up-scaled instance reserves what it may now consume.
      new_lim_shares = in.limit_shares * f;
      new_lim_ram = in.limit_ram * f;
      new_req_shares = new_lim_shares;
      new_req_ram = new_lim_ram;
    } else {
      new_req_shares = std::max(in.requested_shares / f, in.orig_requested_shares);
      new_req_ram = std::max(in.requested_ram / f, in.orig_requested_ram);
      new_lim_shares = std::max(in.limit_shares / f, in.orig_requested_shares);
      new_lim_ram = std::max(in.limit_ram / f, in.orig_requested_ram);
      if (new_lim_shares == in.limit_shares && new_req_shares == in.requested_shares)
        continue;  // already at the floor
    }
    attempted = true;

    // computeInstanceRequests -> deallocate -> try its own VM, then any VM.
    Provisioner::Grant old = prov_.grant_of(inst);
    std::int32_t old_vm = in.host_vm;
    prov_.release(inst);
    std::int32_t target = -1;
    if (prov_.fits(model_, old_vm, new_req_shares, new_req_ram, in.bandwidth,
                   cfg_.ram_bw_gating)) {
      target = old_vm;
    } else {
      for (std::int32_t vm : vms_sorted_by_idle()) {
        if (vm == old_vm) continue;
        if (prov_.fits(model_, vm, new_req_shares, new_req_ram, in.bandwidth,
                       cfg_.ram_bw_gating)) {
          target = vm;
          break;
        }
      }
    }
    if (target < 0) {
      // Restore the instance to its original state.
      prov_.grant(model_, old_vm, inst, old.shares, old.ram, old.bw);
      continue;
    }
    telemetry_.params_changed(inst, t);
    in.requested_shares = new_req_shares;
    in.requested_ram = new_req_ram;
    in.limit_shares = new_lim_shares;
    in.limit_ram = new_lim_ram;
    prov_.grant(model_, target, inst, new_req_shares, new_req_ram, in.bandwidth);
    if (target != old_vm) {
      auto& hosted = model_.vms[old_vm].hosted;
      hosted.erase(std::find(hosted.begin(), hosted.end(), inst));
      model_.vms[target].hosted.push_back(inst);
      in.host_vm = target;
    }
    sched_.instance_rate_changed(inst, t);
    any = true;
  }

  ScalingRecord rec;
  rec.t = t;
  rec.service = service;
  rec.direction = dir;
  rec.outcome = any ? ScaleOutcome::Applied
                    : (attempted ? ScaleOutcome::Failed : ScaleOutcome::Skipped);
  rec.trigger_util = trigger_util;
  rec.replicas_after = replicas_after(service);
  rec.limits_after = mean_limit_shares(service);
  telemetry_.record_scaling(rec);
  return any;
}

void Policies::scaling_check(SimTime t) {
  if (cfg_.scaling.kind == ScalingPolicyKind::None) return;
  for (std::size_t s = 0; s < model_.services.size(); ++s) {
    auto svc = static_cast<std::int32_t>(s);
    auto dir = scaling_trigger(svc, t);
    if (!dir) continue;
    if (cfg_.scaling.kind == ScalingPolicyKind::Horizontal)
      scale_horizontal(svc, *dir, t);
    else if (cfg_.scaling.kind == ScalingPolicyKind::Vertical)
      scale_vertical(svc, *dir, t);
  }
#ifndef NDEBUG
  prov_.check_exact(model_);
#endif
}

void Policies::migration_check(SimTime t) {
  if (!cfg_.migration.enabled) return;
  for (std::size_t v = 0; v < model_.vms.size(); ++v) {
    auto vm = static_cast<std::int32_t>(v);
    if (prov_.utilization(model_, vm) <= cfg_.migration.vm_overload_threshold)
      continue;
    // Victim: largest grant on the overloaded VM.
    std::int32_t victim = -1;
    double best = -1;
    for (std::int32_t inst : model_.vms[vm].hosted) {
      double s = prov_.grant_of(inst).shares;
      if (s > best) {
        best = s;
        victim = inst;
      }
    }
    if (victim < 0) continue;
    const Instance& in = model_.instances[victim];
    // Target: least-utilized VM with room.
    std::int32_t target = -1;
    double target_util = 2.0;
    for (std::size_t w = 0; w < model_.vms.size(); ++w) {
      auto cand = static_cast<std::int32_t>(w);
      if (cand == vm) continue;
      if (!prov_.fits(model_, cand, in.requested_shares, in.requested_ram,
                      in.bandwidth, cfg_.ram_bw_gating))
        continue;
      double u = prov_.utilization(model_, cand);
      if (u < target_util) {
        target_util = u;
        target = cand;
      }
    }
    MigrationRecord rec;
    rec.t = t;
    rec.instance = victim;
    rec.from_vm = vm;
    rec.to_vm = target;
    telemetry_.record_migration(rec);
    if (target < 0) continue;  // NoTargetVm: skipped, recorded
    prov_.release(victim);
    prov_.grant(model_, target, victim, in.requested_shares, in.requested_ram,
                in.bandwidth);
    auto& hosted = model_.vms[vm].hosted;
    hosted.erase(std::find(hosted.begin(), hosted.end(), victim));
    model_.vms[target].hosted.push_back(victim);
    model_.instances[victim].host_vm = target;
    // Executing cloudlets continue with the rate of the new host.
    sched_.instance_rate_changed(victim, t);
  }
#ifndef NDEBUG
  prov_.check_exact(model_);
#endif
}

std::string Policies::state_fingerprint() const {
  std::ostringstream out;
  out << prov_.snapshot(model_);
  for (std::size_t s = 0; s < model_.services.size(); ++s) {
    out << "svc " << model_.services[s].name << " :";
    for (std::int32_t i : model_.service_instances[s]) out << ' ' << i;
    out << '\n';
  }
  for (std::size_t i = 0; i < model_.instances.size(); ++i) {
    const Instance& in = model_.instances[i];
    out << "inst " << in.id << " vm=" << in.host_vm
        << " alloc=" << in.allocated << " drain=" << in.draining
        << " req=" << in.requested_shares << '/' << in.requested_ram
        << " lim=" << in.limit_shares << '/' << in.limit_ram << '\n';
  }
  for (const auto& set : model_.replica_sets) {
    out << "set " << set.name << " :";
    for (std::int32_t i : set.replicas) out << ' ' << i;
    out << '\n';
  }
  return out.str();
}

}  // namespace msim
