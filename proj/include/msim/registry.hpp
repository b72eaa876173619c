#pragma once

#include <string>
#include <utility>
#include <vector>

#include "msim/config.hpp"
#include "msim/model.hpp"

namespace msim {

// File-based entity registration. Parsers take document text; *_file variants
// read from disk and prefix errors with the file name.

std::pair<std::vector<Api>, std::vector<Service>> load_application(const std::string& json_doc);
std::vector<ReplicaSet> load_instances(const std::string& yaml_docs);
std::vector<Vm> load_cluster(const std::string& json_doc);

std::string save_application(const std::vector<Api>& apis,
                             const std::vector<Service>& services);
std::string save_instances(const std::vector<ReplicaSet>& sets);
std::string save_cluster(const std::vector<Vm>& vms);

std::string read_file(const std::string& path);

// Loads the four documents of a scenario directory (application.json,
// instances.yaml, cluster.json, scenario.toml), assembles and validates the
// model (graph build + label matching + replica materialization).
struct LoadedScenario {
  Model model;
  ScenarioConfig config;
};

LoadedScenario load_scenario_dir(const std::string& dir);
LoadedScenario load_scenario_files(const std::string& application_path,
                                   const std::string& instances_path,
                                   const std::string& cluster_path,
                                   const std::string& scenario_path);

Model assemble_model(std::vector<Api> apis, std::vector<Service> services,
                     std::vector<ReplicaSet> sets, std::vector<Vm> vms,
                     std::size_t max_chains_per_api = 10000);

}  // namespace msim
