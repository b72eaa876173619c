#include "msim/registry.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "msim/errors.hpp"

namespace msim {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + "." + key, "missing field");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) throw SchemaError(where + "." + key, "expected a string");
  return v.get<std::string>();
}

double require_number(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) throw SchemaError(where + "." + key, "expected a number");
  return v.get<double>();
}

std::vector<std::string> string_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string())
      throw SchemaError(where + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

}  // namespace

std::pair<std::vector<Api>, std::vector<Service>> load_application(
    const std::string& json_doc) {
  json doc;
  try {
    doc = json::parse(json_doc);
  } catch (const json::parse_error& e) {
    throw SchemaError("application", e.what());
  }
  if (!doc.is_object()) throw SchemaError("application", "expected an object");

  std::vector<Service> services;
  const json& jservices = require(doc, "services", "application");
  if (!jservices.is_array())
    throw SchemaError("application.services", "expected an array");
  for (std::size_t i = 0; i < jservices.size(); ++i) {
    std::string where = "application.services[" + std::to_string(i) + "]";
    const json& js = jservices[i];
    if (!js.is_object()) throw SchemaError(where, "expected an object");
    Service s;
    s.name = require_string(js, "name", where);
    if (js.contains("labels")) s.labels = string_list(js["labels"], where + ".labels");
    else s.labels = {s.name};
    if (js.contains("calls")) s.calls = string_list(js["calls"], where + ".calls");
    services.push_back(std::move(s));
  }

  std::vector<Api> apis;
  const json& japis = require(doc, "apis", "application");
  if (!japis.is_array()) throw SchemaError("application.apis", "expected an array");
  for (std::size_t i = 0; i < japis.size(); ++i) {
    std::string where = "application.apis[" + std::to_string(i) + "]";
    const json& ja = japis[i];
    if (!ja.is_object()) throw SchemaError(where, "expected an object");
    Api api;
    api.name = require_string(ja, "name", where);
    api.entry_service = require_string(ja, "entry", where);
    if (ja.contains("weight")) {
      if (!ja["weight"].is_number())
        throw SchemaError(where + ".weight", "expected a number");
      api.weight = ja["weight"].get<double>();
      if (!(api.weight > 0))
        throw ValidationError("api \"" + api.name + "\" has non-positive weight");
    }
    apis.push_back(std::move(api));
  }

  // Resolve names now so callers get UnknownService before graph build.
  std::unordered_map<std::string, int> names;
  for (const auto& s : services) names.emplace(s.name, 1);
  for (const auto& s : services)
    for (const auto& c : s.calls)
      if (!names.count(c)) throw UnknownServiceError(c);
  for (const auto& a : apis)
    if (!names.count(a.entry_service)) throw UnknownServiceError(a.entry_service);

  return {std::move(apis), std::move(services)};
}

std::vector<ReplicaSet> load_instances(const std::string& yaml_docs) {
  std::vector<YAML::Node> docs;
  try {
    docs = YAML::LoadAll(yaml_docs);
  } catch (const YAML::Exception& e) {
    throw SchemaError("instances", e.what());
  }

  std::vector<ReplicaSet> sets;
  int doc_no = -1;
  for (const auto& doc : docs) {
    ++doc_no;
    if (doc.IsNull() || !doc.IsDefined()) continue;
    std::string where = "instances[" + std::to_string(doc_no) + "]";
    try {
      if (!doc.IsMap()) throw SchemaError(where, "expected a mapping");
      if (!doc["apiVersion"] || doc["apiVersion"].as<std::string>() != "sim/v1")
        throw SchemaError(where + ".apiVersion", "expected \"sim/v1\"");
      if (!doc["kind"]) throw SchemaError(where + ".kind", "missing field");
      std::string kind = doc["kind"].as<std::string>();

      ReplicaSet set;
      if (kind == "Pod") set.instance_template.kind = InstanceKind::Pod;
      else if (kind == "Container") set.instance_template.kind = InstanceKind::Container;
      else throw SchemaError(where + ".kind", "expected Pod or Container");

      YAML::Node meta = doc["metadata"];
      if (!meta || !meta.IsMap()) throw SchemaError(where + ".metadata", "missing mapping");
      if (!meta["name"]) throw SchemaError(where + ".metadata.name", "missing field");
      set.name = meta["name"].as<std::string>();
      if (meta["labels"]) {
        for (const auto& l : meta["labels"])
          set.instance_template.labels.push_back(l.as<std::string>());
      } else {
        set.instance_template.labels = {set.name};
      }

      YAML::Node spec = doc["spec"];
      if (!spec || !spec.IsMap()) throw SchemaError(where + ".spec", "missing mapping");
      set.initial_replicas = spec["replicas"] ? spec["replicas"].as<int>() : 1;
      if (set.initial_replicas < 1)
        throw ValidationError(set.name + ": replicas must be >= 1");
      if (spec["size"]) set.instance_template.size_mb = spec["size"].as<double>();
      if (spec["bandwidth"]) set.instance_template.bandwidth = spec["bandwidth"].as<double>();

      YAML::Node req = spec["requests"];
      if (!req || !req.IsMap() || !req["shares"] || !req["ram"])
        throw SchemaError(where + ".spec.requests", "expected {shares, ram}");
      set.instance_template.requested_shares = req["shares"].as<double>();
      set.instance_template.requested_ram = req["ram"].as<double>();

      YAML::Node lim = spec["limits"];
      if (!lim || !lim.IsMap() || !lim["shares"] || !lim["ram"])
        throw SchemaError(where + ".spec.limits", "expected {shares, ram}");
      set.instance_template.limit_shares = lim["shares"].as<double>();
      set.instance_template.limit_ram = lim["ram"].as<double>();

      if (set.instance_template.requested_shares > set.instance_template.limit_shares ||
          set.instance_template.requested_ram > set.instance_template.limit_ram)
        throw ValidationError(set.name + ": requests exceed limits");
      if (!(set.instance_template.requested_shares > 0) ||
          !(set.instance_template.limit_shares > 0))
        throw ValidationError(set.name + ": shares must be > 0");
      if (set.instance_template.requested_ram < 0)
        throw ValidationError(set.name + ": ram must be >= 0");

      set.instance_template.orig_requested_shares = set.instance_template.requested_shares;
      set.instance_template.orig_requested_ram = set.instance_template.requested_ram;

      set.min_replicas = spec["minReplicas"] ? spec["minReplicas"].as<int>() : 1;
      set.max_replicas = spec["maxReplicas"] ? spec["maxReplicas"].as<int>()
                                             : set.initial_replicas;
      if (set.min_replicas < 1 || set.min_replicas > set.initial_replicas ||
          set.initial_replicas > set.max_replicas)
        throw ValidationError(set.name +
                              ": need minReplicas <= replicas <= maxReplicas");
      sets.push_back(std::move(set));
    } catch (const YAML::Exception& e) {
      throw SchemaError(where, e.what());
    }
  }
  return sets;
}

std::vector<Vm> load_cluster(const std::string& json_doc) {
  json doc;
  try {
    doc = json::parse(json_doc);
  } catch (const json::parse_error& e) {
    throw SchemaError("cluster", e.what());
  }
  if (!doc.is_object()) throw SchemaError("cluster", "expected an object");
  const json& jvms = require(doc, "vms", "cluster");
  if (!jvms.is_array()) throw SchemaError("cluster.vms", "expected an array");

  std::vector<Vm> vms;
  for (std::size_t i = 0; i < jvms.size(); ++i) {
    std::string where = "cluster.vms[" + std::to_string(i) + "]";
    const json& jv = jvms[i];
    if (!jv.is_object()) throw SchemaError(where, "expected an object");
    Vm vm;
    vm.id = require_string(jv, "id", where);
    vm.mips_per_pe = require_number(jv, "mipsPerPe", where);
    vm.num_pes = static_cast<int>(require_number(jv, "numPes", where));
    vm.ram = require_number(jv, "ram", where);
    vm.bw = require_number(jv, "bw", where);
    if (vm.num_pes < 1) throw ValidationError(vm.id + ": numPes must be >= 1");
    if (!(vm.mips_per_pe > 0)) throw ValidationError(vm.id + ": mipsPerPe must be > 0");
    vm.total_shares = vm.num_pes * 1000.0;
    vms.push_back(std::move(vm));
  }
  if (vms.empty()) throw ValidationError("cluster must contain at least one VM");
  return vms;
}

std::string save_application(const std::vector<Api>& apis,
                             const std::vector<Service>& services) {
  json doc;
  doc["apis"] = json::array();
  for (const auto& a : apis)
    doc["apis"].push_back({{"name", a.name}, {"weight", a.weight}, {"entry", a.entry_service}});
  doc["services"] = json::array();
  for (const auto& s : services)
    doc["services"].push_back({{"name", s.name}, {"labels", s.labels}, {"calls", s.calls}});
  return doc.dump(2) + "\n";
}

std::string save_instances(const std::vector<ReplicaSet>& sets) {
  YAML::Emitter out;
  for (const auto& set : sets) {
    out << YAML::BeginDoc << YAML::BeginMap;
    out << YAML::Key << "apiVersion" << YAML::Value << "sim/v1";
    out << YAML::Key << "kind" << YAML::Value
        << (set.instance_template.kind == InstanceKind::Container ? "Container" : "Pod");
    out << YAML::Key << "metadata" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << set.name;
    out << YAML::Key << "labels" << YAML::Value << YAML::BeginSeq;
    for (const auto& l : set.instance_template.labels) out << l;
    out << YAML::EndSeq << YAML::EndMap;
    out << YAML::Key << "spec" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "replicas" << YAML::Value << set.initial_replicas;
    out << YAML::Key << "size" << YAML::Value << set.instance_template.size_mb;
    out << YAML::Key << "bandwidth" << YAML::Value << set.instance_template.bandwidth;
    out << YAML::Key << "requests" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "shares" << YAML::Value << set.instance_template.requested_shares;
    out << YAML::Key << "ram" << YAML::Value << set.instance_template.requested_ram;
    out << YAML::EndMap;
    out << YAML::Key << "limits" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "shares" << YAML::Value << set.instance_template.limit_shares;
    out << YAML::Key << "ram" << YAML::Value << set.instance_template.limit_ram;
    out << YAML::EndMap;
    out << YAML::Key << "minReplicas" << YAML::Value << set.min_replicas;
    out << YAML::Key << "maxReplicas" << YAML::Value << set.max_replicas;
    out << YAML::EndMap << YAML::EndMap;
  }
  return std::string(out.c_str()) + "\n";
}

std::string save_cluster(const std::vector<Vm>& vms) {
  json doc;
  doc["vms"] = json::array();
  for (const auto& vm : vms)
    doc["vms"].push_back({{"id", vm.id},
                          {"mipsPerPe", vm.mips_per_pe},
                          {"numPes", vm.num_pes},
                          {"ram", vm.ram},
                          {"bw", vm.bw}});
  return doc.dump(2) + "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Model assemble_model(std::vector<Api> apis, std::vector<Service> services,
                     std::vector<ReplicaSet> sets, std::vector<Vm> vms,
                     std::size_t max_chains_per_api) {
  Model m;
  m.apis = std::move(apis);
  m.services = std::move(services);
  m.replica_sets = std::move(sets);
  m.vms = std::move(vms);
  m.vm_index.clear();
  for (std::size_t i = 0; i < m.vms.size(); ++i)
    if (!m.vm_index.emplace(m.vms[i].id, static_cast<std::int32_t>(i)).second)
      throw ValidationError("duplicate vm id \"" + m.vms[i].id + "\"");
  m.build_graph(max_chains_per_api);
  m.materialize_replicas();
  m.match_instances();
  return m;
}

namespace {

template <typename F>
auto with_file_context(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const SchemaError& e) {
    throw SchemaError(path, e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace

LoadedScenario load_scenario_files(const std::string& application_path,
                                   const std::string& instances_path,
                                   const std::string& cluster_path,
                                   const std::string& scenario_path) {
  auto [apis, services] = with_file_context(
      application_path, [&] { return load_application(read_file(application_path)); });
  auto sets = with_file_context(
      instances_path, [&] { return load_instances(read_file(instances_path)); });
  auto vms = with_file_context(
      cluster_path, [&] { return load_cluster(read_file(cluster_path)); });
  LoadedScenario out{Model{}, load_scenario_file(scenario_path)};
  out.model = with_file_context(application_path, [&] {
    return assemble_model(std::move(apis), std::move(services), std::move(sets),
                          std::move(vms), out.config.max_chains_per_api);
  });
  return out;
}

LoadedScenario load_scenario_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  return load_scenario_files((fs::path(dir) / "application.json").string(),
                             (fs::path(dir) / "instances.yaml").string(),
                             (fs::path(dir) / "cluster.json").string(),
                             (fs::path(dir) / "scenario.toml").string());
}

}  // namespace msim
