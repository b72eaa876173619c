#include <cmath>
#include <map>

#include "doctest.h"
#include "helpers.hpp"
#include "msim/simulation.hpp"
#include "msim/workload.hpp"

using namespace msim;
using namespace testutil;

namespace {

// One fat sink service so generated requests drain instantly.
Model sink_model(std::vector<Api> apis = {{"GET /", 1.0, "s"}}) {
  return make_model({{"s", {"s"}, {}}}, std::move(apis),
                    {{.name = "s", .replicas = 4, .req_shares = 100,
                      .lim_shares = 1000}},
                    {{.id = "vm", .mips_per_pe = 1e6, .num_pes = 64}});
}

ScenarioConfig gen_config(std::int64_t nc, double v, double p0, double p1,
                          double time_limit, std::int64_t num_limit) {
  ScenarioConfig cfg;
  cfg.seed = 12;
  cfg.generator.num_clients = nc;
  cfg.generator.spawn_rate = v;
  cfg.generator.wait_min = p0;
  cfg.generator.wait_max = p1;
  cfg.generator.time_limit = time_limit;
  cfg.generator.num_limit = num_limit;
  cfg.cloudlet.mean_length = 1;
  cfg.metrics_sample_interval = 0;
  return cfg;
}

}  // namespace

TEST_CASE("closed forms match the hand-computed values") {
  auto p = predict(0, 1000, 100, 5, 15);
  CHECK(p.clients == 0);
  CHECK(p.rate == 0);
  CHECK(p.cumulative == 0);

  p = predict(2, 500, 100, 3, 5);
  CHECK(p.clients == doctest::Approx(200));
  CHECK(p.rate == doctest::Approx(50));
  CHECK(p.cumulative == doctest::Approx(50));

  // Large-t rate converges to Nc * 2/(p0+p1).
  p = predict(1e6, 1000, 100, 5, 15);
  CHECK(p.rate == doctest::Approx(100));

  // Continuity at the ramp end.
  auto lo = predict(10 - 1e-9, 1000, 100, 5, 15);
  auto hi = predict(10 + 1e-9, 1000, 100, 5, 15);
  CHECK(lo.cumulative == doctest::Approx(hi.cumulative).epsilon(1e-6));
}

TEST_CASE("clients curve equals Eq.1 exactly at every tick") {
  auto cfg = gen_config(1000, 100, 5, 15, 40, 1 << 30);
  Simulation sim(sink_model(), cfg);
  sim.run();
  const auto& curve = sim.workload().clients_curve();
  REQUIRE(curve.size() == 40);
  for (std::size_t t = 0; t < curve.size(); ++t) {
    auto expect = static_cast<std::int64_t>(std::min<double>(1000, 100.0 * t));
    CHECK(curve[t] == expect);
  }
  CHECK(curve[10] == 1000);
  CHECK(curve[0] == 0);
}

TEST_CASE("deterministic tick case: 4 clients, unit waits, 4 requests per tick") {
  auto cfg = gen_config(4, 4, 1, 1, 6, 1 << 30);
  Simulation sim(sink_model(), cfg);
  sim.run();
  std::map<double, int> per_tick;
  for (const auto& r : sim.telemetry().requests()) ++per_tick[r.arrival];
  // Ticks 1..5 produce exactly 4 requests each; t=0 has no clients.
  CHECK(per_tick.count(0) == 0);
  for (int t = 1; t < 6; ++t) CHECK(per_tick[static_cast<double>(t)] == 4);
}

TEST_CASE("steady-state qps and cumulative count track the closed forms") {
  // 10*Nc/v = 100 s horizon (Nc=1000, v=100), p=[5,15].
  auto cfg = gen_config(1000, 100, 5, 15, 100, 1 << 30);
  Simulation sim(sink_model(), cfg);
  sim.run();
  const auto& reqs = sim.telemetry().requests();

  // Windowed mean QPS over the final half.
  std::int64_t in_window = 0;
  double r_at_ramp = 0, r_at_2ramp = 0;
  for (const auto& r : reqs) {
    if (r.arrival >= 50 && r.arrival < 100) ++in_window;
    if (r.arrival <= 10) ++r_at_ramp;
    if (r.arrival <= 20) ++r_at_2ramp;
  }
  double qps = in_window / 50.0;
  CHECK(qps == doctest::Approx(100).epsilon(0.10));
  // Eq. 4: R(10) = 500, R(20) = 1500.
  CHECK(r_at_ramp == doctest::Approx(500).epsilon(0.10));
  CHECK(r_at_2ramp == doctest::Approx(1500).epsilon(0.10));
}

TEST_CASE("per-api request fractions converge to the normalized weights") {
  // Weights 1:3 over >= 10k requests; chi-square with 1 dof at the 1% level.
  auto cfg = gen_config(200, 200, 1, 3, kNoTimeLimit, 12000);
  Simulation sim(sink_model({{"a", 1.0, "s"}, {"b", 3.0, "s"}}), cfg);
  sim.run();
  std::int64_t n[2] = {0, 0};
  for (const auto& r : sim.telemetry().requests()) ++n[r.api];
  double total = static_cast<double>(n[0] + n[1]);
  REQUIRE(total >= 10000);
  double e0 = total * 0.25, e1 = total * 0.75;
  double chi2 = (n[0] - e0) * (n[0] - e0) / e0 + (n[1] - e1) * (n[1] - e1) / e1;
  CHECK(chi2 < 6.635);  // chi2_{0.99, df=1}
}

TEST_CASE("hard stops: num_limit is exact and arrivals respect time_limit") {
  {
    auto cfg = gen_config(100, 100, 1, 2, kNoTimeLimit, 777);
    Simulation sim(sink_model(), cfg);
    sim.run();
    CHECK(sim.telemetry().generated() == 777);
  }
  {
    auto cfg = gen_config(100, 100, 1, 2, 12.0, 1 << 30);
    Simulation sim(sink_model(), cfg);
    sim.run();
    for (const auto& r : sim.telemetry().requests())
      CHECK(r.arrival <= 12.0);
    CHECK(sim.workload().halted());
  }
}

TEST_CASE("dispatch creates the root cloudlet on the api entry service") {
  Model m = make_model(
      {{"orders", {"orders"}, {"orders-db"}}, {"orders-db", {"orders-db"}, {}}},
      {{"POST /orders", 1.0, "orders"}},
      {{.name = "orders"}, {.name = "orders-db"}},
      {{.id = "vm", .mips_per_pe = 1e5, .num_pes = 8}});
  auto cfg = gen_config(1, 1, 1, 1, 3, 1);
  Simulation sim(std::move(m), cfg);
  sim.run();
  REQUIRE(sim.telemetry().generated() == 1);
  const auto& rec = sim.telemetry().requests()[0];
  CHECK(rec.status == RequestStatus::Completed);
  CHECK(sim.arena()[rec.root].service == sim.model().service_of("orders"));
}

TEST_CASE("dispatch to a service with no allocated instances fails the request") {
  // The instance wants more shares than the cluster has.
  Model m = make_model({{"s", {"s"}, {}}}, {{"GET /", 1.0, "s"}},
                       {{.name = "s", .replicas = 1, .req_shares = 64000,
                         .lim_shares = 64000}},
                       {{.id = "vm", .num_pes = 4}});
  auto cfg = gen_config(1, 1, 1, 1, 3, 2);
  Simulation sim(std::move(m), cfg);
  sim.run();
  CHECK(sim.telemetry().failed() == 2);
  CHECK(sim.telemetry().generated() == 2);
  for (const auto& r : sim.telemetry().requests())
    CHECK(r.status == RequestStatus::Failed);
}

TEST_CASE("same seed replays the same api split, different seed differs") {
  auto run_split = [&](std::uint64_t seed) {
    auto cfg = gen_config(50, 50, 1, 2, kNoTimeLimit, 100);
    cfg.seed = seed;
    Simulation sim(sink_model({{"a", 1.0, "s"}, {"b", 1.0, "s"}}), cfg);
    sim.run();
    std::vector<std::int32_t> apis;
    for (const auto& r : sim.telemetry().requests()) apis.push_back(r.api);
    return apis;
  };
  auto s1 = run_split(5);
  auto s2 = run_split(5);
  auto s3 = run_split(6);
  CHECK(s1 == s2);
  CHECK(s1 != s3);
}

TEST_CASE("residual wait draw matches the stationary distribution") {
  auto cfg = gen_config(1, 1, 5, 15, 2, 0);
  Simulation sim(sink_model(), cfg);
  auto& wl = sim.workload();
  double sum = 0, mx = 0, mn = 1e9;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double x = wl.draw_residual_wait();
    sum += x;
    mx = std::max(mx, x);
    mn = std::min(mn, x);
  }
  // E[residual] = (p0^2 + p0 p1 + p1^2) / (3 E[p]) = 325/60 for [5,15].
  CHECK(sum / n == doctest::Approx(325.0 / 60.0).epsilon(0.01));
  CHECK(mn >= 0);
  CHECK(mx <= 15.0);
}
