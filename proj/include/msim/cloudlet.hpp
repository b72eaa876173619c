#pragma once

#include <cstdint>
#include <vector>

#include "msim/engine.hpp"

namespace msim {

enum class CloudletStatus : std::uint8_t { Waiting, Executing, Finished };

// One service invocation within a request, sized in million instructions.
// Children are linked intrusively (first_child/next_sibling, newest first) so
// a request's whole invocation tree can be walked from the root without
// per-cloudlet containers.
struct RpcCloudlet {
  std::int64_t request_id = -1;
  std::int32_t service = -1;
  std::int32_t instance = -1;  // set when execution starts
  std::int32_t parent = -1;
  std::int32_t first_child = -1;
  std::int32_t next_sibling = -1;
  float weight = 1.0f;    // share weight under unequal time slicing
  float priority = 0.0f;  // honored by the Priority queue order
  double length = 0;      // MI
  double remaining = 0;   // MI left as of the last settle point
  double v_target = 0;    // instance virtual-clock value at which it finishes
  SimTime created_at = 0;
  SimTime started_at = -1;
  SimTime finished_at = -1;
  CloudletStatus status = CloudletStatus::Waiting;
  bool starved = false;

  double wait_time() const {
    return started_at >= 0 ? started_at - created_at : -1;
  }
  double exec_time() const {
    return finished_at >= 0 ? finished_at - started_at : -1;
  }
};

// Index-addressed store; slots of finalized requests can be recycled so
// memory is bounded by in-flight work on large runs.
class CloudletArena {
 public:
  std::int32_t create() {
    ++created_;
    if (!free_.empty()) {
      std::int32_t id = free_.back();
      free_.pop_back();
      pool_[id] = RpcCloudlet{};
      return id;
    }
    pool_.emplace_back();
    return static_cast<std::int32_t>(pool_.size() - 1);
  }

  RpcCloudlet& operator[](std::int32_t id) { return pool_[id]; }
  const RpcCloudlet& operator[](std::int32_t id) const { return pool_[id]; }

  std::int64_t created() const { return created_; }
  std::size_t slots() const { return pool_.size(); }
  void reserve(std::size_t n) { pool_.reserve(n); }

  // Returns the whole tree rooted at `root` to the freelist.
  void recycle_tree(std::int32_t root) {
    std::vector<std::int32_t> stack{root};
    while (!stack.empty()) {
      std::int32_t c = stack.back();
      stack.pop_back();
      for (std::int32_t k = pool_[c].first_child; k >= 0;
           k = pool_[k].next_sibling)
        stack.push_back(k);
      free_.push_back(c);
    }
  }

 private:
  std::vector<RpcCloudlet> pool_;
  std::vector<std::int32_t> free_;
  std::int64_t created_ = 0;
};

}  // namespace msim
