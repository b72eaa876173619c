#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "msim/simulation.hpp"

using namespace msim;
using namespace testutil;

namespace {

ScenarioConfig policy_config(const std::string& policy) {
  auto cfg = quiet_config();
  cfg.scaling.policy = policy;
  if (policy == "horizontal") cfg.scaling.kind = ScalingPolicyKind::Horizontal;
  else if (policy == "vertical") cfg.scaling.kind = ScalingPolicyKind::Vertical;
  else cfg.scaling.kind = ScalingPolicyKind::None;
  return cfg;
}

}  // namespace

TEST_CASE("first fit targets the vm with the most idle shares") {
  // Idle {4000, 8000}: a 3000-share instance lands on the 8000 one.
  Model m = make_model({{"s", {"s"}, {}}}, {{"GET /", 1.0, "s"}},
                       {{.name = "s", .replicas = 1, .req_shares = 3000,
                         .lim_shares = 3000}},
                       {{.id = "small", .num_pes = 4}, {.id = "big", .num_pes = 8}});
  Simulation sim(std::move(m), quiet_config());
  sim.allocate();
  CHECK(sim.model().instances[0].host_vm == sim.model().vm_of("big"));
  CHECK(sim.provisioner().idle_shares(sim.model(), 1) == 5000);
  sim.provisioner().check_exact(sim.model());
}

TEST_CASE("allocation re-sorts after each grant") {
  // 3 x 3000 onto {8000, 4000}: first two land on vm0, third on vm1.
  Model m = make_model({{"s", {"s"}, {}}}, {{"GET /", 1.0, "s"}},
                       {{.name = "s", .replicas = 3, .req_shares = 3000,
                         .lim_shares = 3000}},
                       {{.id = "v0", .num_pes = 8}, {.id = "v1", .num_pes = 4}});
  Simulation sim(std::move(m), quiet_config());
  sim.allocate();
  const auto& inst = sim.model().instances;
  CHECK(inst[0].host_vm == 0);
  CHECK(inst[1].host_vm == 0);
  CHECK(inst[2].host_vm == 1);
  CHECK(sim.provisioner().idle_shares(sim.model(), 0) == 2000);
  CHECK(sim.provisioner().idle_shares(sim.model(), 1) == 1000);
}

TEST_CASE("an oversized instance is not placed and the lone service fails") {
  Model m = make_model({{"s", {"s"}, {}}}, {{"GET /", 1.0, "s"}},
                       {{.name = "s", .replicas = 1, .req_shares = 10000,
                         .lim_shares = 10000}},
                       {{.id = "v0", .num_pes = 8}});
  Simulation sim(std::move(m), quiet_config());
  bool placed = sim.policies().allocate_service(0, 0);
  CHECK_FALSE(placed);
  CHECK_FALSE(sim.model().instances[0].allocated);
}

TEST_CASE("ram gates allocation alongside shares") {
  Model m = make_model({{"s", {"s"}, {}}}, {{"GET /", 1.0, "s"}},
                       {{.name = "s", .replicas = 1, .req_shares = 100,
                         .lim_shares = 100, .req_ram = 4096, .lim_ram = 4096}},
                       {{.id = "tiny", .num_pes = 8, .ram = 1024},
                        {.id = "roomy", .num_pes = 1, .ram = 8192}});
  Simulation sim(std::move(m), quiet_config());
  sim.allocate();
  // tiny has more idle shares but not enough RAM.
  CHECK(sim.model().instances[0].host_vm == sim.model().vm_of("roomy"));
}

TEST_CASE("scaling trigger needs k consecutive window breaches") {
  Model m = make_model({{"s", {"s"}, {}}}, {{"GET /", 1.0, "s"}},
                       {{.name = "s", .replicas = 1, .req_shares = 100,
                         .lim_shares = 1000, .max_replicas = 4}},
                       {{.id = "vm", .num_pes = 8}});
  auto cfg = policy_config("horizontal");
  Simulation sim(std::move(m), cfg);
  sim.allocate();
  auto& tel = sim.telemetry();
  auto& pol = sim.policies();

  // Windows of utilization 0.9, 0.92, 0.88 with upper 0.8, k=3: the check
  // after the third breached window fires. The t=0 call only primes marks.
  CHECK_FALSE(pol.scaling_trigger(0, 0).has_value());
  tel.set_exec(0, 0, 9);  // util 0.9 over [0,10)
  CHECK_FALSE(pol.scaling_trigger(0, 10).has_value());
  tel.set_exec(0, 10, 9);  // steady ~0.9 over [10,20)
  CHECK_FALSE(pol.scaling_trigger(0, 20).has_value());
  tel.set_exec(0, 20, 9);
  auto d = pol.scaling_trigger(0, 30);
  REQUIRE(d.has_value());
  CHECK(*d == ScaleDirection::Out);

  // Window means 0.9, 0.5, 0.9: the middle window resets the run.
  tel.set_exec(0, 30, 9);
  CHECK_FALSE(pol.scaling_trigger(0, 40).has_value());
  tel.set_exec(0, 40, 5);
  CHECK_FALSE(pol.scaling_trigger(0, 50).has_value());
  tel.set_exec(0, 50, 9);
  CHECK_FALSE(pol.scaling_trigger(0, 60).has_value());

  // Low windows drive a scale-in once k accumulate (0.1 < lower 0.2).
  tel.set_exec(0, 60, 1);
  CHECK_FALSE(pol.scaling_trigger(0, 70).has_value());
  CHECK_FALSE(pol.scaling_trigger(0, 80).has_value());
  auto in_dir = pol.scaling_trigger(0, 90);
  REQUIRE(in_dir.has_value());
  CHECK(*in_dir == ScaleDirection::In);
}

TEST_CASE("scale out adds a replica and binds it to the service") {
  Model m = make_model({{"s", {"s"}, {}}}, {{"GET /", 1.0, "s"}},
                       {{.name = "s", .replicas = 2, .req_shares = 100,
                         .lim_shares = 1000, .max_replicas = 4}},
                       {{.id = "vm", .num_pes = 8}});
  Simulation sim(std::move(m), policy_config("horizontal"));
  sim.allocate();
  bool ok = sim.policies().scale_horizontal(0, ScaleDirection::Out, 1.0);
  CHECK(ok);
  CHECK(sim.model().replica_sets[0].replicas.size() == 3);
  CHECK(sim.model().instances[2].id == "s-2");
  CHECK(sim.model().instances[2].allocated);
  CHECK(sim.model().service_instances[0].size() == 3);
  CHECK(sim.telemetry().scaling_log().back().outcome == ScaleOutcome::Applied);
  CHECK(sim.telemetry().scaling_log().back().replicas_after == 3);
  sim.provisioner().check_exact(sim.model());
}

TEST_CASE("scale out with a full cluster fails and undoes everything") {
  Model m = make_model({{"s", {"s"}, {}}}, {{"GET /", 1.0, "s"}},
                       {{.name = "s", .replicas = 1, .req_shares = 600,
                         .lim_shares = 600, .max_replicas = 4}},
                       {{.id = "vm", .num_pes = 1}});
  Simulation sim(std::move(m), policy_config("horizontal"));
  sim.allocate();
  std::string before = sim.policies().state_fingerprint();
  bool ok = sim.policies().scale_horizontal(0, ScaleDirection::Out, 1.0);
  CHECK_FALSE(ok);
  CHECK(sim.telemetry().scaling_log().back().outcome == ScaleOutcome::Failed);
  CHECK(sim.policies().state_fingerprint() == before);
}

TEST_CASE("scale out at max replicas is skipped") {
  Model m = make_model({{"s", {"s"}, {}}}, {{"GET /", 1.0, "s"}},
                       {{.name = "s", .replicas = 4, .req_shares = 100,
                         .lim_shares = 1000, .max_replicas = 4}},
                       {{.id = "vm", .num_pes = 8}});
  Simulation sim(std::move(m), policy_config("horizontal"));
  sim.allocate();
  std::string before = sim.policies().state_fingerprint();
  CHECK_FALSE(sim.policies().scale_horizontal(0, ScaleDirection::Out, 1.0));
  CHECK(sim.telemetry().scaling_log().back().outcome == ScaleOutcome::Skipped);
  CHECK(sim.policies().state_fingerprint() == before);
}

TEST_CASE("scale in drains the replica with the fewest executing cloudlets") {
  Model m = make_model({{"s", {"s"}, {}}}, {{"GET /", 1.0, "s"}},
                       {{.name = "s", .replicas = 3, .req_shares = 100,
                         .lim_shares = 1000, .min_replicas = 1,
                         .max_replicas = 4}},
                       {{.id = "vm", .num_pes = 8}});
  Simulation sim(std::move(m), policy_config("horizontal"));
  sim.allocate();
  auto req = pseudo_request(sim, 0);
  // Max-idle spreads one cloudlet each onto s-0 and s-1; s-2 stays idle.
  inject(sim, req, 0, 1e9, 0);
  inject(sim, req, 0, 1e9, 0);
  REQUIRE(sim.scheduling().n_executing(0) == 1);
  REQUIRE(sim.scheduling().n_executing(1) == 1);
  REQUIRE(sim.scheduling().n_executing(2) == 0);
  CHECK(sim.policies().scale_horizontal(0, ScaleDirection::In, 1.0));
  // s-2 was idle: drained and deallocated immediately.
  CHECK_FALSE(sim.model().instances[2].allocated);
  CHECK(sim.model().replica_sets[0].replicas.size() == 2);
  CHECK(sim.model().service_instances[0].size() == 2);
  sim.provisioner().check_exact(sim.model());
}

TEST_CASE("scale in at min replicas is skipped") {
  Model m = make_model({{"s", {"s"}, {}}}, {{"GET /", 1.0, "s"}},
                       {{.name = "s", .replicas = 1, .req_shares = 100,
                         .lim_shares = 1000, .min_replicas = 1,
                         .max_replicas = 4}},
                       {{.id = "vm", .num_pes = 8}});
  Simulation sim(std::move(m), policy_config("horizontal"));
  sim.allocate();
  CHECK_FALSE(sim.policies().scale_horizontal(0, ScaleDirection::In, 1.0));
  CHECK(sim.telemetry().scaling_log().back().outcome == ScaleOutcome::Skipped);
  CHECK(sim.model().instances[0].allocated);
}

TEST_CASE("vertical up doubles limits and executing cloudlets speed up") {
  Model m = make_model({{"s", {"s"}, {}}}, {{"GET /", 1.0, "s"}},
                       {{.name = "s", .replicas = 1, .req_shares = 250,
                         .lim_shares = 500}},
                       {{.id = "vm", .num_pes = 8}});
  // Policy stays "none" so the run does not schedule its own checks; the
  // test fires exactly one vertical scale-up at t=1.
  Simulation sim(std::move(m), quiet_config());
  sim.allocate();
  auto req = pseudo_request(sim, 0);
  auto id = inject(sim, req, 0, 1000, 0);  // 500 MIPS: alone would end at t=2
  sim.engine().on(EventKind::ScalingCheck, [&](const SimEvent& ev) {
    sim.policies().scale_vertical(0, ScaleDirection::Up, ev.fire_at);
  });
  sim.engine().schedule(1.0, EventKind::ScalingCheck);
  sim.run();
  // 500 MI leftover at t=1 now runs at 1000 MIPS.
  CHECK(sim.arena()[id].finished_at == doctest::Approx(1.5));
  CHECK(sim.model().instances[0].limit_shares == 1000);
  // computeInstanceRequests: the new request equals the scaled limit.
  CHECK(sim.model().instances[0].requested_shares == 1000);
  CHECK(sim.telemetry().scaling_log().back().outcome == ScaleOutcome::Applied);
  sim.provisioner().check_exact(sim.model());
}

TEST_CASE("vertical up without headroom restores the instance exactly") {
  Model m = make_model({{"s", {"s"}, {}}}, {{"GET /", 1.0, "s"}},
                       {{.name = "s", .replicas = 1, .req_shares = 600,
                         .lim_shares = 600}},
                       {{.id = "vm", .num_pes = 1}});
  Simulation sim(std::move(m), policy_config("vertical"));
  sim.allocate();
  std::string before = sim.policies().state_fingerprint();
  CHECK_FALSE(sim.policies().scale_vertical(0, ScaleDirection::Up, 1.0));
  CHECK(sim.telemetry().scaling_log().back().outcome == ScaleOutcome::Failed);
  CHECK(sim.policies().state_fingerprint() == before);
  CHECK(sim.model().instances[0].limit_shares == 600);
}

TEST_CASE("vertical down clamps at the original requests") {
  Model m = make_model({{"s", {"s"}, {}}}, {{"GET /", 1.0, "s"}},
                       {{.name = "s", .replicas = 1, .req_shares = 500,
                         .lim_shares = 1000}},
                       {{.id = "vm", .num_pes = 8}});
  Simulation sim(std::move(m), policy_config("vertical"));
  sim.allocate();
  CHECK(sim.policies().scale_vertical(0, ScaleDirection::Down, 1.0));
  CHECK(sim.model().instances[0].limit_shares == 500);
  CHECK(sim.model().instances[0].requested_shares == 500);
  // Already at the floor: the second down-scale is a no-op.
  CHECK_FALSE(sim.policies().scale_vertical(0, ScaleDirection::Down, 2.0));
  CHECK(sim.telemetry().scaling_log().back().outcome == ScaleOutcome::Skipped);
  CHECK(sim.model().instances[0].limit_shares == 500);
}

TEST_CASE("migration moves the largest grant to the least loaded vm") {
  Model m = make_model(
      {{"a", {"a"}, {}}, {"b", {"b"}, {}}},
      {{"GET /", 1.0, "a"}},
      {{.name = "a", .replicas = 1, .req_shares = 700, .lim_shares = 700},
       {.name = "b", .replicas = 1, .req_shares = 250, .lim_shares = 250}},
      {{.id = "hot", .num_pes = 1}, {.id = "cold", .num_pes = 4}});
  auto cfg = quiet_config();
  cfg.migration.enabled = true;
  cfg.migration.vm_overload_threshold = 0.9;
  Simulation sim(std::move(m), cfg);
  // Force both onto the small vm to overload it (95%).
  auto& prov = sim.provisioner();
  prov.reset(sim.model());
  prov.grant(sim.model(), 0, 0, 700, 64, 0);
  prov.grant(sim.model(), 0, 1, 250, 64, 0);
  auto& inst = sim.model().instances;
  inst[0].host_vm = 0;
  inst[0].allocated = true;
  inst[1].host_vm = 0;
  inst[1].allocated = true;
  sim.model().vms[0].hosted = {0, 1};
  sim.scheduling().instance_activated(0, 0);
  sim.scheduling().instance_activated(1, 0);
  sim.telemetry().instance_allocated(0, 0);
  sim.telemetry().instance_allocated(1, 0);

  sim.policies().migration_check(1.0);
  // The 700-share grant moved to the cold vm; ledgers rebalance exactly.
  CHECK(inst[0].host_vm == 1);
  CHECK(prov.used_shares(0) == 250);
  CHECK(prov.used_shares(1) == 700);
  CHECK(sim.telemetry().migration_log().size() == 1);
  CHECK(sim.telemetry().migration_log()[0].to_vm == 1);
  prov.check_exact(sim.model());
}

TEST_CASE("migration with no feasible target is recorded and skipped") {
  Model m = make_model({{"a", {"a"}, {}}}, {{"GET /", 1.0, "a"}},
                       {{.name = "a", .replicas = 2, .req_shares = 950,
                         .lim_shares = 950}},
                       {{.id = "v0", .num_pes = 1}, {.id = "v1", .num_pes = 1}});
  auto cfg = quiet_config();
  cfg.migration.enabled = true;
  cfg.migration.vm_overload_threshold = 0.9;
  Simulation sim(std::move(m), cfg);
  sim.allocate();  // one 950 grant per vm: both at 95%
  std::string before = sim.policies().state_fingerprint();
  sim.policies().migration_check(1.0);
  REQUIRE(sim.telemetry().migration_log().size() == 2);
  CHECK(sim.telemetry().migration_log()[0].to_vm == -1);
  CHECK(sim.telemetry().migration_log()[1].to_vm == -1);
  CHECK(sim.policies().state_fingerprint() == before);
}

TEST_CASE("random failed scaling attempts never leak state") {
  // Tight cluster: scale-outs and scale-ups frequently fail; every Failed
  // outcome must leave the fingerprint untouched.
  Rng gen(404);
  for (int trial = 0; trial < 10; ++trial) {
    Model m = make_model(
        {{"a", {"a"}, {}}, {"b", {"b"}, {}}},
        {{"GET /", 1.0, "a"}},
        {{.name = "a", .replicas = 2, .req_shares = 300, .lim_shares = 400,
          .min_replicas = 1, .max_replicas = 6},
         {.name = "b", .replicas = 2, .req_shares = 200, .lim_shares = 300,
          .min_replicas = 1, .max_replicas = 6}},
        {{.id = "v0", .num_pes = 2}, {.id = "v1", .num_pes = 1}});
    auto cfg = policy_config("horizontal");
    Simulation sim(std::move(m), cfg);
    sim.allocate();
    for (int step = 0; step < 60; ++step) {
      int svc = gen.uniform01() < 0.5 ? 0 : 1;
      double roll = gen.uniform01();
      std::string before = sim.policies().state_fingerprint();
      std::size_t log_before = sim.telemetry().scaling_log().size();
      if (roll < 0.4)
        sim.policies().scale_horizontal(svc, ScaleDirection::Out, step + 1.0);
      else if (roll < 0.6)
        sim.policies().scale_horizontal(svc, ScaleDirection::In, step + 1.0);
      else if (roll < 0.8)
        sim.policies().scale_vertical(svc, ScaleDirection::Up, step + 1.0);
      else
        sim.policies().scale_vertical(svc, ScaleDirection::Down, step + 1.0);
      const auto& log = sim.telemetry().scaling_log();
      REQUIRE(log.size() == log_before + 1);
      if (log.back().outcome != ScaleOutcome::Applied)
        CHECK(sim.policies().state_fingerprint() == before);
      sim.provisioner().check_exact(sim.model());
    }
  }
}

TEST_CASE("replica counts stay within bounds under scaling pressure") {
  Model m = make_model({{"s", {"s"}, {}}}, {{"GET /", 1.0, "s"}},
                       {{.name = "s", .replicas = 2, .req_shares = 100,
                         .lim_shares = 1000, .min_replicas = 2,
                         .max_replicas = 4}},
                       {{.id = "vm", .num_pes = 64}});
  Simulation sim(std::move(m), policy_config("horizontal"));
  sim.allocate();
  for (int i = 0; i < 10; ++i)
    sim.policies().scale_horizontal(0, ScaleDirection::Out, i + 1.0);
  CHECK(sim.model().replica_sets[0].replicas.size() == 4);
  for (int i = 0; i < 10; ++i)
    sim.policies().scale_horizontal(0, ScaleDirection::In, i + 20.0);
  CHECK(sim.model().replica_sets[0].replicas.size() == 2);
}
