#pragma once

#include <string>

#include "msim/config.hpp"
#include "msim/model.hpp"

namespace msim {

// Synthesized stress cases: a service chain of the given depth, a fixed
// instance-to-service ratio, and an open workload sized to the target request
// count. Case ids follow the capacity table rows (1a..4b).
struct CapacityCase {
  std::string id;
  std::int64_t requests = 0;
  int services = 0;
  int instances = 0;
  Model model;
  ScenarioConfig config;
};

CapacityCase make_capacity_case(const std::string& id);

}  // namespace msim
