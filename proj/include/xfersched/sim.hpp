/*
 * Copyright 2026 The xfersched Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Discrete-event replay of one steady-state training iteration. Compute ops
// run serially in schedule order on every worker; group collectives share
// one network and start no earlier than (a) their planned begin, (b) the
// previous transfer, and (c) for current-iteration gradients, the moment the
// group is ready on every worker. Forward-side transfers gate the compute
// ops that consume the corresponding reads.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "xfersched/batcher.hpp"
#include "xfersched/collective.hpp"
#include "xfersched/cost_model.hpp"
#include "xfersched/dag.hpp"
#include "xfersched/json_io.hpp"
#include "xfersched/timeline.hpp"
#include "xfersched/transfer_scheduler.hpp"

namespace xfersched {

struct SimConfig {
  int workers = 8;
  Pattern pattern = Pattern::Shuffle;
  DepthPolicy depth = DepthPolicy::fixed(1);
  NetworkModel network{1000.0, 0.001};
  ReduceModel reduce;
  bool enforce_order = true;
  bool batching = true;
  bool fp_scheduling = true;
  // Per-worker compute multipliers; empty means homogeneous workers.
  std::vector<double> worker_skew;
};

struct Metrics {
  double T_us = 0.0;
  double C_us = 0.0;
  double N_us = 0.0;
  double overlap_us = 0.0;
  double alpha = 1.0;
  double rho = 0.0;
  double U = 1.0;

  bool operator==(const Metrics&) const = default;
};

/// 1 / (1 + rho - alpha * min(rho, 1))
inline double utilization(double rho, double alpha) {
  return 1.0 / (1.0 + rho - alpha * std::min(rho, 1.0));
}

struct SimEvent {
  double time_us = 0.0;
  int worker = 0;
  std::string resource;
  std::string event;
  std::string subject;

  bool operator==(const SimEvent&) const = default;
};

struct SimResult {
  Metrics metrics;
  std::vector<SimEvent> events;
  // Actual transfer start per group.
  std::map<GroupId, double> transfer_start_us;
};

/// Collective time per group under the config's pattern and depth policy.
inline std::map<GroupId, double> group_collective_times(const BatchPlan& plan, const SimConfig& config) {
  const auto threshold = batching_threshold(config.network);
  std::map<GroupId, double> out;
  for (const auto& g : plan.groups) {
    CollectiveSpec spec{config.pattern, config.workers, static_cast<double>(g.total_bytes),
                        config.depth.depth_for(g.total_bytes, threshold)};
    out[g.group_id] = collective_time(spec, config.network, config.reduce);
  }
  return out;
}

inline SimResult simulate_iteration(const DataflowDag& dag, const Schedule& schedule, const BatchPlan& plan,
                                    const TransferSchedule& transfers, const SimConfig& config) {
  if (config.workers < 2) throw Error(ErrorCode::InvalidArgument, "workers must be >= 2");
  if (!config.worker_skew.empty() && static_cast<int>(config.worker_skew.size()) != config.workers)
    throw Error(ErrorCode::InvalidArgument, "worker_skew must have one entry per worker");
  if (!is_topological(dag, schedule.order)) throw Error(ErrorCode::InvalidArgument, "schedule is not a topological order of the DAG");

  const int sim_workers = config.worker_skew.empty() ? 1 : config.workers;
  const auto durations = group_collective_times(plan, config);

  std::map<ParamId, GroupId> group_of;
  std::map<GroupId, const BatchGroup*> groups;
  for (const auto& g : plan.groups) {
    groups[g.group_id] = &g;
    for (const auto& p : g.params) {
      if (!group_of.emplace(p, g.group_id).second)
        throw Error(ErrorCode::InvalidArgument, "parameter '" + p + "' appears in two groups");
    }
  }
  for (const auto& [pid, p] : dag.params)
    if (!group_of.count(pid)) throw Error(ErrorCode::InvalidArgument, "parameter '" + pid + "' is not in the batch plan");

  std::vector<PlacedTransfer> net_order = transfers.transfers;
  std::sort(net_order.begin(), net_order.end(), [](const PlacedTransfer& a, const PlacedTransfer& b) {
    if (a.begin_us != b.begin_us) return a.begin_us < b.begin_us;
    return a.group_id < b.group_id;
  });
  std::map<GroupId, std::size_t> slot_of;
  for (std::size_t i = 0; i < net_order.size(); ++i) {
    if (!groups.count(net_order[i].group_id))
      throw Error(ErrorCode::InvalidArgument, "transfer for unknown group " + std::to_string(net_order[i].group_id));
    if (!slot_of.emplace(net_order[i].group_id, i).second)
      throw Error(ErrorCode::InvalidArgument, "group " + std::to_string(net_order[i].group_id) + " placed twice");
  }

  // Position of each op in the serial order, and what it waits on.
  const std::size_t n_ops = schedule.order.size();
  std::map<OpId, std::size_t> pos;
  for (std::size_t i = 0; i < n_ops; ++i) pos[schedule.order[i]] = i;

  // Forward-side transfers that must finish before op i may start.
  std::vector<std::vector<std::size_t>> blocking(n_ops);
  for (std::size_t i = 0; i < n_ops; ++i) {
    const Op& op = dag.op(schedule.order[i]);
    std::set<std::size_t> slots;
    for (const auto& d : op.deps) {
      const Op& dep = dag.op(d);
      if (dep.kind != OpKind::ParamRead) continue;
      auto it = slot_of.find(group_of.at(dep.param));
      if (it == slot_of.end()) continue;
      if (is_forward_side(net_order[it->second].placement)) slots.insert(it->second);
    }
    blocking[i].assign(slots.begin(), slots.end());
  }

  // Current-iteration transfers wait for every member's producer on every
  // worker; producers are the update op's deps.
  std::vector<std::vector<std::size_t>> producers(net_order.size());
  for (std::size_t s = 0; s < net_order.size(); ++s) {
    if (is_forward_side(net_order[s].placement)) continue;
    std::set<std::size_t> ps;
    for (const auto& p : groups.at(net_order[s].group_id)->params)
      for (const auto& d : update_op(dag, p).deps) ps.insert(pos.at(d));
    producers[s].assign(ps.begin(), ps.end());
  }

  constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> op_start(sim_workers, std::vector<double>(n_ops, kUnset));
  std::vector<std::vector<double>> op_end(sim_workers, std::vector<double>(n_ops, kUnset));
  std::vector<std::size_t> next_op(sim_workers, 0);
  std::vector<double> compute_free(sim_workers, 0.0);
  std::vector<double> net_start(net_order.size(), kUnset), net_end(net_order.size(), kUnset);
  std::size_t next_net = 0;
  double network_free = -std::numeric_limits<double>::infinity();

  auto scaled = [&](int w, std::int64_t d) {
    return config.worker_skew.empty() ? static_cast<double>(d) : static_cast<double>(d) * config.worker_skew[w];
  };

  SimResult result;
  auto log = [&](double t, int w, const char* resource, const char* event, const std::string& subject) {
    result.events.push_back({t, w, resource, event, subject});
  };

  // Event tie-break: (time, resource id, kind, subject); compute workers are
  // resources 0..W-1, the network is W.
  using Candidate = std::tuple<double, int, int, std::string>;
  const std::size_t total_work = n_ops * sim_workers + net_order.size();
  for (std::size_t done = 0; done < total_work; ++done) {
    std::optional<Candidate> best;
    for (int w = 0; w < sim_workers; ++w) {
      const std::size_t i = next_op[w];
      if (i == n_ops) continue;
      double start = compute_free[w];
      bool runnable = true;
      for (std::size_t s : blocking[i]) {
        if (std::isnan(net_end[s])) {
          runnable = false;
          break;
        }
        start = std::max(start, net_end[s]);
      }
      if (!runnable) continue;
      Candidate c{start, w, 0, schedule.order[i]};
      if (!best || c < *best) best = c;
    }
    if (next_net < net_order.size()) {
      const auto& t = net_order[next_net];
      double start = std::max(t.begin_us, network_free);
      bool runnable = true;
      for (std::size_t p : producers[next_net]) {
        for (int w = 0; w < sim_workers && runnable; ++w) {
          if (std::isnan(op_end[w][p])) runnable = false;
          else start = std::max(start, op_end[w][p]);
        }
        if (!runnable) break;
      }
      if (runnable) {
        Candidate c{start, sim_workers, 1, std::to_string(t.group_id)};
        if (!best || c < *best) best = c;
      }
    }
    if (!best) throw Error(ErrorCode::DeadlockDetected, "no runnable event with work remaining");

    const auto& [start, resource, kind, subject] = *best;
    if (resource < sim_workers) {
      const int w = resource;
      const std::size_t i = next_op[w]++;
      const Op& op = dag.op(schedule.order[i]);
      const double end = start + scaled(w, op.duration_us);
      op_start[w][i] = start;
      op_end[w][i] = end;
      compute_free[w] = end;
      if (op.kind == OpKind::Compute) {
        log(start, w, "compute", "start", op.id);
        log(end, w, "compute", "end", op.id);
      } else {
        log(start, w, "compute", op.kind == OpKind::ParamUpdate ? "update" : "read", op.id);
      }
    } else {
      const std::size_t s = next_net++;
      const GroupId gid = net_order[s].group_id;
      const double end = start + durations.at(gid);
      net_start[s] = start;
      net_end[s] = end;
      network_free = end;
      result.transfer_start_us[gid] = start;
      log(start, 0, "network", "transfer_start", "g" + std::to_string(gid));
      log(end, 0, "network", "transfer_end", "g" + std::to_string(gid));
    }
  }

  // Metrics are taken on the worker whose compute finishes last.
  int critical = 0;
  for (int w = 1; w < sim_workers; ++w)
    if (compute_free[w] > compute_free[critical]) critical = w;

  double begin = 0.0, end = 0.0;
  std::vector<Interval> compute_busy, net_busy;
  Metrics& m = result.metrics;
  for (int w = 0; w < sim_workers; ++w) end = std::max(end, compute_free[w]);
  for (std::size_t i = 0; i < n_ops; ++i) {
    const double len = op_end[critical][i] - op_start[critical][i];
    if (len > 0) {
      compute_busy.push_back({op_start[critical][i], op_end[critical][i]});
      m.C_us += len;
    }
  }
  for (std::size_t s = 0; s < net_order.size(); ++s) {
    begin = std::min(begin, net_start[s]);
    end = std::max(end, net_end[s]);
    net_busy.push_back({net_start[s], net_end[s]});
    m.N_us += net_end[s] - net_start[s];
  }
  m.T_us = end - begin;
  m.overlap_us = intersection_length(merge_intervals(compute_busy), merge_intervals(net_busy));
  m.rho = m.C_us > 0 ? m.N_us / m.C_us : 0.0;
  const double denom = std::min(m.N_us, m.C_us);
  m.alpha = m.N_us > 0 && denom > 0 ? std::clamp(m.overlap_us / denom, 0.0, 1.0) : 1.0;
  m.U = m.T_us > 0 ? m.C_us / m.T_us : 1.0;

  std::stable_sort(result.events.begin(), result.events.end(), [](const SimEvent& a, const SimEvent& b) {
    return std::tie(a.time_us, a.worker, a.resource, a.event, a.subject) <
           std::tie(b.time_us, b.worker, b.resource, b.event, b.subject);
  });
  return result;
}

inline json metrics_to_json(const Metrics& m) {
  return {{"T_us", report_us(m.T_us)}, {"C_us", report_us(m.C_us)}, {"N_us", report_us(m.N_us)},
          {"alpha", m.alpha},          {"rho", m.rho},              {"U", m.U}};
}

inline std::string events_to_ndjson(const std::vector<SimEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    json j = {{"time_us", report_us(e.time_us)},
              {"worker", e.worker},
              {"resource", e.resource},
              {"event", e.event},
              {"subject", e.subject}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace xfersched
