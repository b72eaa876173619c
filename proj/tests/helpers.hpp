#pragma once

#include <string>
#include <vector>

#include "msim/registry.hpp"
#include "msim/simulation.hpp"

namespace testutil {

using namespace msim;

struct SetSpec {
  std::string name;
  int replicas = 1;
  double req_shares = 100, lim_shares = 1000;
  double req_ram = 64, lim_ram = 256;
  int min_replicas = 1, max_replicas = 1;
  std::vector<std::string> labels;  // defaults to {name}
};

struct VmSpec {
  std::string id;
  double mips_per_pe = 1000;
  int num_pes = 8;
  double ram = 1 << 20;
  double bw = 1e6;
};

inline Model make_model(std::vector<Service> services, std::vector<Api> apis,
                        std::vector<SetSpec> set_specs,
                        std::vector<VmSpec> vm_specs) {
  std::vector<ReplicaSet> sets;
  for (auto& s : set_specs) {
    ReplicaSet set;
    set.name = s.name;
    set.instance_template.labels = s.labels.empty()
                                       ? std::vector<std::string>{s.name}
                                       : s.labels;
    set.instance_template.requested_shares = s.req_shares;
    set.instance_template.limit_shares = s.lim_shares;
    set.instance_template.requested_ram = s.req_ram;
    set.instance_template.limit_ram = s.lim_ram;
    set.instance_template.orig_requested_shares = s.req_shares;
    set.instance_template.orig_requested_ram = s.req_ram;
    set.initial_replicas = s.replicas;
    set.min_replicas = s.min_replicas;
    set.max_replicas = std::max(s.max_replicas, s.replicas);
    sets.push_back(std::move(set));
  }
  std::vector<Vm> vms;
  for (auto& v : vm_specs) {
    Vm vm;
    vm.id = v.id;
    vm.mips_per_pe = v.mips_per_pe;
    vm.num_pes = v.num_pes;
    vm.total_shares = v.num_pes * 1000.0;
    vm.ram = v.ram;
    vm.bw = v.bw;
    vms.push_back(std::move(vm));
  }
  return assemble_model(std::move(apis), std::move(services), std::move(sets),
                        std::move(vms));
}

// A scenario that generates nothing: tests drive the scheduler directly.
inline ScenarioConfig quiet_config() {
  ScenarioConfig cfg;
  cfg.seed = 1;
  cfg.generator.num_clients = 1;
  cfg.generator.spawn_rate = 1;
  cfg.generator.wait_min = cfg.generator.wait_max = 1;
  cfg.generator.num_limit = 0;
  cfg.metrics_sample_interval = 0;
  cfg.scaling.policy = "none";
  cfg.scaling.kind = ScalingPolicyKind::None;
  return cfg;
}

// A request handle for injected cloudlets. The extra outstanding tick keeps
// request finalization (which needs a real derivation tree) out of play.
inline std::int64_t pseudo_request(Simulation& sim, SimTime t,
                                   std::int32_t api = 0) {
  auto req = sim.telemetry().request_generated(api, t);
  sim.telemetry().cloudlet_created(req);
  return req;
}

// Creates a cloudlet with an explicit length and admits it; returns its id.
inline std::int32_t inject(Simulation& sim, std::int64_t req,
                           std::int32_t service, double length, SimTime t,
                           float priority = 0, float weight = 1) {
  auto& arena = sim.arena();
  std::int32_t id = arena.create();
  RpcCloudlet& c = arena[id];
  c.request_id = req;
  c.service = service;
  c.length = c.remaining = length;
  c.created_at = t;
  c.priority = priority;
  c.weight = weight;
  sim.telemetry().cloudlet_created(req);
  sim.scheduling().admit(id, t);
  sim.scheduling().try_start(service, t);
  return id;
}

}  // namespace testutil
