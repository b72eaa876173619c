#include "msim/model.hpp"

#include <algorithm>
#include <unordered_set>

namespace msim {

const char* to_string(InstanceKind kind) {
  switch (kind) {
    case InstanceKind::Pod: return "Pod";
    case InstanceKind::Container: return "Container";
    case InstanceKind::UserDefined: return "UserDefined";
  }
  return "?";
}

std::int32_t Model::service_of(const std::string& name) const {
  auto it = service_index.find(name);
  if (it == service_index.end()) throw UnknownServiceError(name);
  return it->second;
}

std::int32_t Model::vm_of(const std::string& name) const {
  auto it = vm_index.find(name);
  if (it == vm_index.end()) throw ConfigError("unknown vm \"" + name + "\"");
  return it->second;
}

void Model::build_graph(std::size_t max_paths_per_api) {
  const auto n = static_cast<std::int32_t>(services.size());
  service_index.clear();
  for (std::int32_t i = 0; i < n; ++i) {
    if (!service_index.emplace(services[i].name, i).second)
      throw ValidationError("duplicate service name \"" + services[i].name + "\"");
  }

  forward.assign(n, {});
  reverse.assign(n, {});
  for (std::int32_t i = 0; i < n; ++i) {
    std::unordered_set<std::int32_t> seen;
    for (const auto& callee : services[i].calls) {
      std::int32_t j = service_of(callee);
      if (!seen.insert(j).second)
        throw ValidationError("service \"" + services[i].name +
                              "\" lists callee \"" + callee + "\" twice");
      forward[i].push_back(j);
      reverse[j].push_back(i);
    }
  }

  // Cycle check: iterative tricolor DFS (chains can be very deep).
  std::vector<int> color(n, 0);  // 0 white, 1 gray, 2 black
  std::vector<std::pair<std::int32_t, std::size_t>> dfs;
  for (std::int32_t root = 0; root < n; ++root) {
    if (color[root] != 0) continue;
    dfs.clear();
    dfs.emplace_back(root, 0);
    color[root] = 1;
    while (!dfs.empty()) {
      auto& [u, next] = dfs.back();
      if (next < forward[u].size()) {
        std::int32_t v = forward[u][next++];
        if (color[v] == 1) {
          std::vector<std::string> cycle;
          auto it = std::find_if(dfs.begin(), dfs.end(),
                                 [&](const auto& f) { return f.first == v; });
          for (; it != dfs.end(); ++it) cycle.push_back(services[it->first].name);
          cycle.push_back(services[v].name);
          throw CycleError(std::move(cycle));
        }
        if (color[v] == 0) {
          color[v] = 1;
          dfs.emplace_back(v, 0);
        }
      } else {
        color[u] = 2;
        dfs.pop_back();
      }
    }
  }

  // Per-API chain enumeration: every root-to-leaf path from the entry, in
  // DFS order over the forward edges.
  api_index.clear();
  for (std::size_t i = 0; i < apis.size(); ++i) {
    if (!api_index.emplace(apis[i].name, static_cast<std::int32_t>(i)).second)
      throw ValidationError("duplicate api name \"" + apis[i].name + "\"");
  }
  api_entry.assign(apis.size(), -1);
  chains.assign(apis.size(), {});
  for (std::size_t a = 0; a < apis.size(); ++a) {
    std::int32_t entry = service_of(apis[a].entry_service);
    api_entry[a] = entry;
    Chain path;
    std::vector<std::pair<std::int32_t, std::size_t>> walk;
    walk.emplace_back(entry, 0);
    path.push_back(entry);
    while (!walk.empty()) {
      auto& [u, next] = walk.back();
      if (forward[u].empty() && next == 0) {
        if (chains[a].size() >= max_paths_per_api)
          throw ValidationError("api \"" + apis[a].name + "\" exceeds " +
                                std::to_string(max_paths_per_api) +
                                " service chains");
        chains[a].push_back(path);
        ++next;  // mark the leaf emitted
      } else if (next < forward[u].size()) {
        std::int32_t v = forward[u][next++];
        walk.emplace_back(v, 0);
        path.push_back(v);
      } else {
        walk.pop_back();
        path.pop_back();
      }
    }
  }

  // Normalized selection distribution over APIs.
  api_cdf.clear();
  double total = 0;
  for (const auto& api : apis) {
    if (!(api.weight > 0))
      throw ValidationError("api \"" + api.name + "\" has non-positive weight");
    total += api.weight;
    api_cdf.push_back(total);
  }
}

bool labels_match(const std::vector<std::string>& a,
                  const std::vector<std::string>& b) {
  for (const auto& x : a)
    for (const auto& y : b)
      if (x == y) return true;
  return false;
}

void Model::match_instances() {
  service_instances.assign(services.size(), {});
  instance_services.assign(instances.size(), {});
  std::unordered_map<std::string, std::vector<std::int32_t>> by_label;
  for (std::size_t i = 0; i < instances.size(); ++i)
    for (const auto& l : instances[i].labels)
      by_label[l].push_back(static_cast<std::int32_t>(i));
  for (std::size_t s = 0; s < services.size(); ++s) {
    auto& matched = service_instances[s];
    for (const auto& l : services[s].labels) {
      auto it = by_label.find(l);
      if (it == by_label.end()) continue;
      matched.insert(matched.end(), it->second.begin(), it->second.end());
    }
    std::sort(matched.begin(), matched.end());
    matched.erase(std::unique(matched.begin(), matched.end()), matched.end());
    for (std::int32_t i : matched)
      instance_services[i].push_back(static_cast<std::int32_t>(s));
    if (matched.empty())
      warnings.push_back("service \"" + services[s].name +
                         "\" matches no instances");
  }
}

void Model::materialize_replicas() {
  instance_index.clear();
  for (std::size_t i = 0; i < instances.size(); ++i)
    instance_index.emplace(instances[i].id, static_cast<std::int32_t>(i));
  for (std::size_t r = 0; r < replica_sets.size(); ++r) {
    auto& set = replica_sets[r];
    while (static_cast<int>(set.replicas.size()) < set.initial_replicas) {
      Instance inst = set.instance_template;
      inst.id = set.name + "-" + std::to_string(set.next_ordinal++);
      inst.replica_set = static_cast<std::int32_t>(r);
      auto idx = static_cast<std::int32_t>(instances.size());
      if (!instance_index.emplace(inst.id, idx).second)
        throw ValidationError("duplicate instance id \"" + inst.id + "\"");
      instances.push_back(std::move(inst));
      set.replicas.push_back(idx);
    }
  }
}

}  // namespace msim
