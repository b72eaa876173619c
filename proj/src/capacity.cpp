#include "msim/capacity.hpp"

#include "msim/errors.hpp"
#include "msim/registry.hpp"

namespace msim {

namespace {

struct Row {
  const char* id;
  std::int64_t requests;
  int services;
  int instances;
};

// Entity counts mirror the capacity table rows; services form one call chain
// so cloudlets per request equal the service count.
constexpr Row kRows[] = {
    {"1a", 100000, 1, 1000},  {"1b", 1000000, 1, 1000},
    {"2a", 1000, 5000, 1},    {"2b", 1000, 50000, 1},
    {"3a", 10000, 100, 300},  {"3b", 10000, 1000, 3000},
    {"4a", 1000, 5000, 15000}, {"4b", 10000, 5000, 15000},
};

}  // namespace

CapacityCase make_capacity_case(const std::string& id) {
  const Row* row = nullptr;
  for (const auto& r : kRows)
    if (id == r.id) row = &r;
  if (!row) throw ConfigError("unknown capacity case \"" + id + "\" (1a..4b)");

  CapacityCase out;
  out.id = row->id;
  out.requests = row->requests;
  out.services = row->services;
  out.instances = row->instances;

  const bool shared_instance = row->instances < row->services;
  std::vector<Service> services(row->services);
  for (int s = 0; s < row->services; ++s) {
    services[s].name = "svc-" + std::to_string(s);
    services[s].labels = {shared_instance ? "app" : services[s].name};
    if (s + 1 < row->services)
      services[s].calls = {"svc-" + std::to_string(s + 1)};
  }
  std::vector<Api> apis{{"GET /bench", 1.0, "svc-0"}};

  std::vector<ReplicaSet> sets;
  if (shared_instance) {
    ReplicaSet set;
    set.name = "app";
    set.instance_template.labels = {"app"};
    set.instance_template.requested_shares = 100;
    set.instance_template.limit_shares = 1000;
    set.instance_template.requested_ram = 64;
    set.instance_template.limit_ram = 256;
    set.instance_template.orig_requested_shares = 100;
    set.instance_template.orig_requested_ram = 64;
    set.initial_replicas = set.min_replicas = set.max_replicas = row->instances;
    sets.push_back(std::move(set));
  } else {
    int per_service = row->instances / row->services;
    for (int s = 0; s < row->services; ++s) {
      ReplicaSet set;
      set.name = services[s].name;
      set.instance_template.labels = {services[s].name};
      set.instance_template.requested_shares = 100;
      set.instance_template.limit_shares = 1000;
      set.instance_template.requested_ram = 64;
      set.instance_template.limit_ram = 256;
      set.instance_template.orig_requested_shares = 100;
      set.instance_template.orig_requested_ram = 64;
      set.initial_replicas = set.min_replicas = set.max_replicas = per_service;
      sets.push_back(std::move(set));
    }
  }

  // VMs sized so requested shares fit with one spare machine of slack.
  std::vector<Vm> vms;
  int vm_count =
      static_cast<int>(row->instances * 100 / 100000) + 1;
  double mips_per_pe = shared_instance ? 1e6 : 1000.0;
  for (int v = 0; v < vm_count; ++v) {
    Vm vm;
    vm.id = "vm-" + std::to_string(v);
    vm.mips_per_pe = mips_per_pe;
    vm.num_pes = 100;
    vm.total_shares = vm.num_pes * 1000.0;
    vm.ram = 1e7;
    vm.bw = 1e6;
    vms.push_back(std::move(vm));
  }

  out.model = assemble_model(std::move(apis), std::move(services),
                             std::move(sets), std::move(vms));

  ScenarioConfig cfg;
  cfg.seed = 7;
  cfg.generator.num_clients = 1000;
  cfg.generator.spawn_rate = 1000;
  cfg.generator.wait_min = cfg.generator.wait_max = 1.0;
  cfg.generator.num_limit = row->requests;
  // Cloudlet sizing keeps per-service load just under capacity (3 instances
  // at 1000 MIPS each against 1000 cloudlets/s) so queues stay bounded.
  cfg.cloudlet.mean_length = shared_instance ? 1.0 : 2.5;
  cfg.cloudlet.std_dev = shared_instance ? 0.0 : 0.25;
  cfg.scaling.policy = "none";
  cfg.scaling.kind = ScalingPolicyKind::None;
  cfg.migration.enabled = false;
  cfg.metrics_sample_interval = 0;
  cfg.starvation_timeout = 0;
  cfg.retain_finished = false;
  out.config = cfg;
  return out;
}

}  // namespace msim
