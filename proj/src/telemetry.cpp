#include "msim/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace msim {

const char* to_string(ScaleDirection d) {
  switch (d) {
    case ScaleDirection::Out: return "Out";
    case ScaleDirection::In: return "In";
    case ScaleDirection::Up: return "Up";
    case ScaleDirection::Down: return "Down";
  }
  return "?";
}

const char* to_string(ScaleOutcome o) {
  switch (o) {
    case ScaleOutcome::Applied: return "Applied";
    case ScaleOutcome::Failed: return "Failed";
    case ScaleOutcome::Skipped: return "Skipped";
  }
  return "?";
}

std::int64_t Telemetry::request_generated(std::int32_t api, SimTime t) {
  RequestRec rec;
  rec.arrival = t;
  rec.api = api;
  requests_.push_back(rec);
  ++in_flight_;
  return static_cast<std::int64_t>(requests_.size() - 1);
}

void Telemetry::attach_root(std::int64_t req, std::int32_t root) {
  requests_[req].root = root;
}

void Telemetry::request_failed(std::int64_t req) {
  RequestRec& r = requests_[req];
  r.status = RequestStatus::Failed;
  ++failed_;
  --in_flight_;
}

void Telemetry::cloudlet_created(std::int64_t req) {
  ++requests_[req].outstanding;
}

void Telemetry::cloudlet_finished(std::int64_t req, SimTime t) {
  RequestRec& r = requests_[req];
  r.last_finish = t;
  if (--r.outstanding == 0) finalize_request(req, t);
}

void Telemetry::finalize_request(std::int64_t req, SimTime t) {
  RequestRec& r = requests_[req];
  if (r.outstanding != 0 || r.root < 0)
    throw LogicError("finalize_request: request incomplete");

  // Chains were enumerated by DFS over forward edges; children were created
  // in the same per-node order (stored newest-first, so sibling lists are
  // reversed before descending). Leaf visit order therefore matches the
  // chain index exactly, and each leaf's accumulated delay is D_p.
  struct Frame {
    std::int32_t node;
    double acc;
  };
  std::vector<Frame> stack;
  std::vector<std::int32_t> kids;
  double best = -1;
  std::int32_t best_leaf = -1;
  std::int32_t leaf_counter = 0;

  auto delay_of = [&](const RpcCloudlet& c) {
    if (c.status != CloudletStatus::Finished)
      throw LogicError("finalize_request: unfinished cloudlet in tree");
    double d = c.finished_at - c.started_at;
    if (cfg_.wait_in_delay) d += c.started_at - c.created_at;
    return d;
  };

  stack.push_back({r.root, 0.0});
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    const RpcCloudlet& c = arena_[f.node];
    double acc = f.acc + delay_of(c);
    if (c.first_child < 0) {
      if (acc > best) {
        best = acc;
        best_leaf = leaf_counter;
      }
      ++leaf_counter;
    } else {
      kids.clear();
      for (std::int32_t k = c.first_child; k >= 0; k = arena_[k].next_sibling)
        kids.push_back(k);
      // kids is newest-first; push in that order so the stack pops the
      // oldest (first-created) child first.
      for (std::int32_t k : kids) stack.push_back({k, acc});
    }
  }

  const auto& api_chains = model_.chains[r.api];
  if (leaf_counter != static_cast<std::int32_t>(api_chains.size()))
    throw LogicError("finalize_request: cloudlet tree does not match chains");

  r.cp_ms = best * 1000.0;
  r.cp_chain = best_leaf;
  r.response_ms = (r.last_finish - r.arrival) * 1000.0;
  r.status = RequestStatus::Completed;
  ++completed_;
  --in_flight_;
  cp_discrepancy_sum_ms_ += std::abs(r.response_ms - r.cp_ms);

  auto bin = static_cast<std::size_t>(t);
  if (rps_bins_.empty()) rps_bins_.resize(model_.apis.size());
  auto& bins = rps_bins_[r.api];
  if (bins.size() <= bin) bins.resize(bin + 1, 0);
  ++bins[bin];

  if (!cfg_.retain_finished) {
    arena_.recycle_tree(r.root);
    r.root = -1;
  }
}

void Telemetry::ensure_usage_slot(std::int32_t inst) {
  if (usage_.size() <= static_cast<std::size_t>(inst)) usage_.resize(inst + 1);
}

double Telemetry::cpu_per_cloudlet(std::int32_t inst) const {
  if (cfg_.cpu_per_cloudlet > 0) return cfg_.cpu_per_cloudlet;
  return model_.instances[inst].requested_shares;
}

double Telemetry::current_cpu(std::int32_t inst) const {
  const InstUsage& u = usage_[inst];
  if (u.n == 0) return std::min(cfg_.idle_cpu_floor,
                                model_.instances[inst].limit_shares);
  double cpu = cfg_.idle_cpu_floor + cpu_per_cloudlet(inst) * u.n;
  return std::min(cpu, model_.instances[inst].limit_shares);
}

double Telemetry::current_ram(std::int32_t inst) const {
  const InstUsage& u = usage_[inst];
  double ram = cfg_.idle_ram_floor + cfg_.ram_per_cloudlet * u.n;
  return std::min(ram, model_.instances[inst].limit_ram);
}

double Telemetry::utilization(std::int32_t inst) const {
  double limit = model_.instances[inst].limit_shares;
  return limit > 0 ? current_cpu(inst) / limit : 0;
}

void Telemetry::accrue(std::int32_t inst, SimTime t) {
  InstUsage& u = usage_[inst];
  if (!u.alive) return;
  double dt = t - u.last_t;
  if (dt <= 0) {
    u.last_t = t;
    return;
  }
  u.cpu_integral += current_cpu(inst) * dt;
  u.ram_integral += current_ram(inst) * dt;
  u.alive_seconds += dt;
  u.last_t = t;
}

void Telemetry::instance_allocated(std::int32_t inst, SimTime t) {
  ensure_usage_slot(inst);
  InstUsage& u = usage_[inst];
  u.alive = true;
  u.last_t = t;
  u.n = 0;
  u.deriv_window = 0;
}

void Telemetry::instance_deallocated(std::int32_t inst, SimTime t) {
  accrue(inst, t);
  usage_[inst].alive = false;
}

void Telemetry::set_exec(std::int32_t inst, SimTime t, int n) {
  ensure_usage_slot(inst);
  accrue(inst, t);
  usage_[inst].n = n;
}

void Telemetry::params_changed(std::int32_t inst, SimTime t) {
  ensure_usage_slot(inst);
  accrue(inst, t);
}

void Telemetry::derivation_on(std::int32_t inst) {
  ensure_usage_slot(inst);
  ++usage_[inst].deriv_window;
  ++usage_[inst].derivations;
}

std::pair<double, double> Telemetry::usage_snapshot(std::int32_t inst,
                                                    SimTime t) {
  ensure_usage_slot(inst);
  accrue(inst, t);
  return {usage_[inst].cpu_integral, usage_[inst].alive_seconds};
}

UsageRecord Telemetry::update_usage(std::int32_t inst, SimTime t) {
  ensure_usage_slot(inst);
  accrue(inst, t);
  InstUsage& u = usage_[inst];
  UsageRecord rec;
  rec.t = t;
  rec.entity = inst;
  rec.cpu = current_cpu(inst);
  rec.ram = current_ram(inst);
  rec.bw = cfg_.bw_per_derivation * u.deriv_window;
  rec.n_executing = u.n;
  u.deriv_window = 0;
  usage_history_.push_back(rec);
  return rec;
}

void Telemetry::sample_usage(SimTime t) {
  struct VmAgg {
    double cpu = 0, ram = 0, bw = 0;
    int n = 0;
    bool any = false;
  };
  std::vector<VmAgg> agg(model_.vms.size());
  for (std::size_t i = 0; i < model_.instances.size(); ++i) {
    const Instance& in = model_.instances[i];
    if (!in.allocated) continue;
    UsageRecord rec = update_usage(static_cast<std::int32_t>(i), t);
    if (in.host_vm >= 0) {
      VmAgg& a = agg[in.host_vm];
      a.cpu += rec.cpu;
      a.ram += rec.ram;
      a.bw += rec.bw;
      a.n += rec.n_executing;
      a.any = true;
    }
  }
  for (std::size_t v = 0; v < agg.size(); ++v) {
    if (!agg[v].any) continue;
    UsageRecord rec;
    rec.t = t;
    rec.is_vm = true;
    rec.entity = static_cast<std::int32_t>(v);
    rec.cpu = agg[v].cpu;
    rec.ram = agg[v].ram;
    rec.bw = agg[v].bw;
    rec.n_executing = agg[v].n;
    usage_history_.push_back(rec);
  }
}

void Telemetry::close(SimTime t) {
  for (std::size_t i = 0; i < usage_.size(); ++i)
    accrue(static_cast<std::int32_t>(i), t);
}

double Telemetry::mean_instance_cpu() const {
  double num = 0, den = 0;
  for (const auto& u : usage_) {
    num += u.cpu_integral;
    den += u.alive_seconds;
  }
  return den > 0 ? num / den : 0;
}

double Telemetry::mean_instance_ram() const {
  double num = 0, den = 0;
  for (const auto& u : usage_) {
    num += u.ram_integral;
    den += u.alive_seconds;
  }
  return den > 0 ? num / den : 0;
}

double Telemetry::percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0;
  auto rank = static_cast<std::size_t>(std::ceil(q * sorted.size()));
  if (rank == 0) rank = 1;
  if (rank > sorted.size()) rank = sorted.size();
  return sorted[rank - 1];
}

ApiStats Telemetry::api_stats(std::int32_t api, SimTime horizon) const {
  ApiStats st;
  std::vector<double> lat;
  double sum = 0;
  for (const auto& r : requests_) {
    if (r.api != api) continue;
    if (r.status == RequestStatus::Failed) {
      ++st.failed;
    } else if (r.status == RequestStatus::Completed) {
      ++st.count;
      lat.push_back(r.response_ms);
      sum += r.response_ms;
      if (r.response_ms > cfg_.slo_threshold_ms) st.slo_violation_rate += 1;
    }
  }
  if (st.count > 0) {
    std::sort(lat.begin(), lat.end());
    st.mean_ms = sum / st.count;
    st.median_ms = percentile(lat, 0.50);
    st.p95_ms = percentile(lat, 0.95);
    st.p99_ms = percentile(lat, 0.99);
    st.slo_violation_rate /= static_cast<double>(st.count);
  }
  if (horizon > 0) st.mean_rps = st.count / horizon;
  return st;
}

double Telemetry::mean_response_ms() const {
  double sum = 0;
  std::int64_t n = 0;
  for (const auto& r : requests_) {
    if (r.status == RequestStatus::Completed) {
      sum += r.response_ms;
      ++n;
    }
  }
  return n > 0 ? sum / n : 0;
}

namespace {

std::string fmt(double v, const char* spec = "%.3f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

void Telemetry::export_csv(const std::string& dir,
                           const SimSummary& summary) const {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir);

  auto open = [&](const char* name) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw IoError(std::string("cannot write ") + dir + "/" + name);
    return out;
  };

  {
    auto out = open("requests.csv");
    out << "req_id,api,arrival_s,response_ms,cp_estimate_ms,slo_violated,critical_path\n";
    for (std::size_t i = 0; i < requests_.size(); ++i) {
      const RequestRec& r = requests_[i];
      out << i << ',' << model_.apis[r.api].name << ',' << fmt(r.arrival);
      if (r.status == RequestStatus::Completed) {
        out << ',' << fmt(r.response_ms) << ',' << fmt(r.cp_ms) << ','
            << (r.response_ms > cfg_.slo_threshold_ms ? 1 : 0) << ',';
        const Chain& cp = model_.chains[r.api][r.cp_chain];
        for (std::size_t k = 0; k < cp.size(); ++k) {
          if (k) out << '|';
          out << model_.services[cp[k]].name;
        }
      } else {
        out << ",,," << (r.status == RequestStatus::Failed ? "failed" : "inflight");
      }
      out << '\n';
    }
  }

  {
    auto out = open("usage.csv");
    out << "t_s,entity_kind,entity_id,cpu_milicores,ram_mb,bw_mbps,n_executing\n";
    for (const auto& u : usage_history_) {
      out << fmt(u.t) << ',' << (u.is_vm ? "vm" : "instance") << ','
          << (u.is_vm ? model_.vms[u.entity].id : model_.instances[u.entity].id)
          << ',' << fmt(u.cpu) << ',' << fmt(u.ram) << ',' << fmt(u.bw) << ','
          << u.n_executing << '\n';
    }
  }

  {
    auto out = open("rps.csv");
    out << "t_s,api,rps\n";
    std::size_t horizon = 0;
    for (const auto& bins : rps_bins_) horizon = std::max(horizon, bins.size());
    for (std::size_t t = 0; t < horizon; ++t) {
      for (std::size_t a = 0; a < model_.apis.size(); ++a) {
        std::uint32_t n = (a < rps_bins_.size() && t < rps_bins_[a].size())
                              ? rps_bins_[a][t]
                              : 0;
        out << t << ',' << model_.apis[a].name << ',' << n << '\n';
      }
    }
  }

  {
    auto out = open("scaling.csv");
    out << "t_s,service,direction,outcome,replicas_after,limits_after\n";
    for (const auto& s : scaling_log_) {
      out << fmt(s.t) << ',' << model_.services[s.service].name << ','
          << to_string(s.direction) << ',' << to_string(s.outcome) << ','
          << s.replicas_after << ',' << fmt(s.limits_after) << '\n';
    }
  }

  {
    auto out = open("summary.txt");
    out << render_summary(summary);
  }

  if (cfg_.export_request_trace) {
    auto out = open("request_trace.csv");
    out << "req_id,api,arrival_s\n";
    for (std::size_t i = 0; i < requests_.size(); ++i)
      out << i << ',' << model_.apis[requests_[i].api].name << ','
          << fmt(requests_[i].arrival) << '\n';
  }
}

std::string Telemetry::render_summary(const SimSummary& summary) const {
  std::ostringstream out;
  out << "simulated_seconds: " << fmt(summary.clock) << "\n";
  out << "events_delivered: " << summary.delivered << "\n";
  out << "requests_generated: " << requests_.size() << "\n";
  out << "requests_completed: " << completed_ << "\n";
  out << "requests_failed: " << failed_ << "\n";
  out << "cloudlets_created: " << arena_.created() << "\n";
  out << "cloudlets_starved: " << starved_ << "\n";
  out << "mean_response_ms: " << fmt(mean_response_ms()) << "\n";
  out << "mean_cp_discrepancy_ms: "
      << fmt(completed_ > 0 ? cp_discrepancy_sum_ms_ / completed_ : 0) << "\n";
  out << "mean_instance_cpu_milicores: " << fmt(mean_instance_cpu()) << "\n";
  out << "mean_instance_ram_mb: " << fmt(mean_instance_ram()) << "\n";
  out << "scaling_decisions: " << scaling_log_.size() << "\n";
  out << "migrations: " << migration_log_.size() << "\n";
  out << "\napi,count,failed,mean_ms,median_ms,p95_ms,p99_ms,slo_violation_rate,mean_rps\n";
  for (std::size_t a = 0; a < model_.apis.size(); ++a) {
    ApiStats st = api_stats(static_cast<std::int32_t>(a), summary.clock);
    out << model_.apis[a].name << ',' << st.count << ',' << st.failed << ','
        << fmt(st.mean_ms) << ',' << fmt(st.median_ms) << ',' << fmt(st.p95_ms)
        << ',' << fmt(st.p99_ms) << ',' << fmt(st.slo_violation_rate, "%.4f")
        << ',' << fmt(st.mean_rps) << '\n';
  }
  return out.str();
}

}  // namespace msim
