#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "msim/errors.hpp"

namespace msim {

struct Api {
  std::string name;           // e.g. "POST /orders"
  double weight = 1.0;        // selection probability mass, > 0
  std::string entry_service;
};

struct Service {
  std::string name;
  std::vector<std::string> labels;
  std::vector<std::string> calls;  // forward edges, in declaration order
};

enum class InstanceKind : std::uint8_t { Pod, Container, UserDefined };

const char* to_string(InstanceKind kind);

struct Instance {
  std::string id;
  InstanceKind kind = InstanceKind::Pod;
  std::vector<std::string> labels;
  double requested_shares = 0;  // milicores, allocation-gating
  double limit_shares = 0;      // milicores, drives execution rate
  double requested_ram = 0;     // MB
  double limit_ram = 0;         // MB
  double bandwidth = 0;         // Mbps, carried and reported only
  double size_mb = 0;           // storage footprint, carried only
  std::int32_t host_vm = -1;
  bool allocated = false;
  bool draining = false;        // scale-in victim: accepts no new cloudlets
  std::int32_t replica_set = -1;
  // Registration-time values; vertical scaling never drops limits below the
  // original requests.
  double orig_requested_shares = 0;
  double orig_requested_ram = 0;
};

struct ReplicaSet {
  std::string name;
  Instance instance_template;           // id/host fields unused
  std::vector<std::int32_t> replicas;   // instance indices
  int initial_replicas = 1;             // manifest `replicas` field
  int min_replicas = 1;
  int max_replicas = 1;
  int next_ordinal = 0;                 // monotonically increasing id suffix
};

struct Vm {
  std::string id;
  double mips_per_pe = 0;
  int num_pes = 0;
  double total_shares = 0;  // num_pes * 1000 milicores
  double ram = 0;           // MB
  double bw = 0;            // Mbps
  std::vector<std::int32_t> hosted;  // instance indices
};

// One root-to-leaf path of service indices.
using Chain = std::vector<std::int32_t>;

// The assembled application: entity stores in registration order plus the
// service DAG (forward/reverse adjacency, per-API chains) and the
// label-derived service<->instance mappings. Name lookups go through the
// index maps; iteration always uses the vectors so ordering is deterministic.
struct Model {
  std::vector<Api> apis;
  std::vector<Service> services;
  std::vector<Instance> instances;
  std::vector<ReplicaSet> replica_sets;
  std::vector<Vm> vms;

  std::unordered_map<std::string, std::int32_t> api_index;
  std::unordered_map<std::string, std::int32_t> service_index;
  std::unordered_map<std::string, std::int32_t> instance_index;
  std::unordered_map<std::string, std::int32_t> vm_index;

  std::vector<std::vector<std::int32_t>> forward;  // service -> callees
  std::vector<std::vector<std::int32_t>> reverse;  // service -> callers
  std::vector<std::vector<Chain>> chains;          // per api
  std::vector<std::int32_t> api_entry;             // per api: entry service

  std::vector<double> api_cdf;  // cumulative normalized weights

  std::vector<std::vector<std::int32_t>> service_instances;
  std::vector<std::vector<std::int32_t>> instance_services;

  std::vector<std::string> warnings;

  std::int32_t service_of(const std::string& name) const;
  std::int32_t vm_of(const std::string& name) const;

  // Builds forward/reverse adjacency and enumerates per-API chains by DFS.
  // Throws UnknownServiceError on dangling edges, CycleError on cycles and
  // ValidationError when an API would enumerate more than max_paths chains.
  void build_graph(std::size_t max_paths_per_api = 10000);

  // Label-intersection matching; fills service_instances/instance_services
  // both ways. A service with zero matches gets a warning (it cannot receive
  // cloudlets until scaling or allocation changes that).
  void match_instances();

  // Registers the instances of all replica sets into `instances`.
  void materialize_replicas();
};

// True when the label sets intersect.
bool labels_match(const std::vector<std::string>& a,
                  const std::vector<std::string>& b);

}  // namespace msim
