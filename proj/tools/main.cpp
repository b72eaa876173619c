#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msim/capacity.hpp"
#include "msim/registry.hpp"
#include "msim/simulation.hpp"
#include "msim/workload.hpp"

namespace {

struct RunArgs {
  std::string scenario_dir;
  std::string app_path, instances_path, cluster_path, config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  std::string policy;
  bool verbose = false;
};

msim::LoadedScenario load_from_args(const RunArgs& args) {
  namespace fs = std::filesystem;
  std::string app = args.app_path, inst = args.instances_path,
              clu = args.cluster_path, cfg = args.config_path;
  if (!args.scenario_dir.empty()) {
    if (app.empty()) app = (fs::path(args.scenario_dir) / "application.json").string();
    if (inst.empty()) inst = (fs::path(args.scenario_dir) / "instances.yaml").string();
    if (clu.empty()) clu = (fs::path(args.scenario_dir) / "cluster.json").string();
    if (cfg.empty()) cfg = (fs::path(args.scenario_dir) / "scenario.toml").string();
  }
  if (app.empty() || inst.empty() || clu.empty() || cfg.empty())
    throw msim::ConfigError(
        "need --scenario DIR or all of --app/--instances/--cluster/--config");
  return msim::load_scenario_files(app, inst, clu, cfg);
}

int cmd_run(const RunArgs& args) {
  auto loaded = load_from_args(args);
  if (args.seed >= 0) loaded.config.seed = static_cast<std::uint64_t>(args.seed);
  if (!args.policy.empty()) {
    loaded.config.scaling.policy = args.policy;
    if (args.policy == "none") loaded.config.scaling.kind = msim::ScalingPolicyKind::None;
    else if (args.policy == "horizontal") loaded.config.scaling.kind = msim::ScalingPolicyKind::Horizontal;
    else if (args.policy == "vertical") loaded.config.scaling.kind = msim::ScalingPolicyKind::Vertical;
    else loaded.config.scaling.kind = msim::ScalingPolicyKind::UserDefined;
  }
  for (const auto& w : loaded.model.warnings)
    std::cerr << "warning: " << w << "\n";

  std::string out_dir = args.out_dir;
  if (out_dir.empty()) {
    const char* env = std::getenv("MICROSIM_OUT");
    out_dir = env ? env : "out";
  }

  msim::Simulation sim(std::move(loaded.model), loaded.config);
  if (args.verbose)
    std::cerr << "running with seed " << sim.config().seed << ", policy "
              << sim.config().scaling.policy << "\n";
  auto t0 = std::chrono::steady_clock::now();
  msim::SimSummary summary = sim.run();
  auto t1 = std::chrono::steady_clock::now();
  sim.export_csv(out_dir);
  if (args.verbose)
    std::cerr << "wall time: "
              << std::chrono::duration<double>(t1 - t0).count() << " s\n";
  std::cout << sim.telemetry().render_summary(summary);
  std::cout << "output written to " << out_dir << "\n";
  return 0;
}

int cmd_validate(const RunArgs& args) {
  auto loaded = load_from_args(args);
  for (const auto& w : loaded.model.warnings)
    std::cerr << "warning: " << w << "\n";
  std::cout << "ok: " << loaded.model.apis.size() << " apis, "
            << loaded.model.services.size() << " services, "
            << loaded.model.instances.size() << " instances, "
            << loaded.model.vms.size() << " vms\n";
  return 0;
}

int cmd_predict(double nc, double rate, double p0, double p1,
                const std::vector<double>& times) {
  if (p0 > p1) {
    std::cerr << "error: p0 must be <= p1\n";
    return 1;
  }
  std::printf("%12s %14s %14s %16s\n", "t_s", "clients", "rate_rps", "cumulative");
  for (double t : times) {
    auto p = msim::predict(t, nc, rate, p0, p1);
    std::printf("%12.3f %14.3f %14.3f %16.3f\n", t, p.clients, p.rate,
                p.cumulative);
  }
  return 0;
}

int cmd_bench(const std::string& case_id) {
  auto c = msim::make_capacity_case(case_id);
  std::cerr << "case " << c.id << ": " << c.requests << " requests, "
            << c.services << " services, " << c.instances << " instances\n";
  msim::Simulation sim(std::move(c.model), c.config);
  auto t0 = std::chrono::steady_clock::now();
  msim::SimSummary summary = sim.run();
  auto t1 = std::chrono::steady_clock::now();
  double wall = std::chrono::duration<double>(t1 - t0).count();
  std::printf("case %s\n", c.id.c_str());
  std::printf("requests_completed %lld\n",
              static_cast<long long>(sim.telemetry().completed()));
  std::printf("cloudlets %lld\n", static_cast<long long>(sim.arena().created()));
  std::printf("events %llu\n", static_cast<unsigned long long>(summary.delivered));
  std::printf("simulated_s %.3f\n", summary.clock);
  std::printf("wall_s %.3f\n", wall);
  std::printf("events_per_s %.0f\n", wall > 0 ? summary.delivered / wall : 0.0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cloud-native application simulator"};
  app.require_subcommand(1);

  RunArgs args;
  auto add_input_flags = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", args.scenario_dir,
                    "directory with application.json, instances.yaml, "
                    "cluster.json, scenario.toml");
    cmd->add_option("--app", args.app_path, "application.json path");
    cmd->add_option("--instances", args.instances_path, "instances.yaml path");
    cmd->add_option("--cluster", args.cluster_path, "cluster.json path");
    cmd->add_option("--config", args.config_path, "scenario.toml path");
  };

  auto* run = app.add_subcommand("run", "run a simulation and export CSVs");
  add_input_flags(run);
  run->add_option("--out", args.out_dir, "output directory (default $MICROSIM_OUT or ./out)");
  run->add_option("--seed", args.seed, "override the scenario seed");
  run->add_option("--policy", args.policy, "override scaling policy (none|horizontal|vertical)");
  run->add_flag("-v,--verbose", args.verbose, "progress to stderr");

  auto* validate = app.add_subcommand("validate", "parse and validate inputs only");
  add_input_flags(validate);

  double nc = 1000, rate = 100, p0 = 5, p1 = 15;
  std::vector<double> times;
  auto* predict = app.add_subcommand("predict", "print generator closed forms");
  predict->add_option("--nc", nc, "client cap Nc");
  predict->add_option("--rate", rate, "spawn rate v (clients/s)");
  predict->add_option("--p0", p0, "min wait (s)");
  predict->add_option("--p1", p1, "max wait (s)");
  predict->add_option("--t", times, "times to evaluate (repeatable)")->required();

  std::string case_id = "3a";
  auto* bench = app.add_subcommand("bench", "run a synthesized capacity case");
  bench->add_option("--case", case_id, "one of 1a,1b,2a,2b,3a,3b,4a,4b");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(args);
    if (validate->parsed()) return cmd_validate(args);
    if (predict->parsed()) return cmd_predict(nc, rate, p0, p1, times);
    if (bench->parsed()) return cmd_bench(case_id);
  } catch (const msim::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const msim::LogicError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
