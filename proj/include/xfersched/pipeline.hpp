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

// End-to-end composition: order -> enforcement -> serial schedule ->
// boundaries -> batching -> collective times -> transfer placement ->
// simulation, with each optimization behind a toggle.

#include <future>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "xfersched/batcher.hpp"
#include "xfersched/collective.hpp"
#include "xfersched/cost_model.hpp"
#include "xfersched/dag.hpp"
#include "xfersched/order.hpp"
#include "xfersched/sim.hpp"
#include "xfersched/transfer_scheduler.hpp"

namespace xfersched {

struct OptimizedPlan {
  ActivationOrder order;
  DataflowDag dag;  // enforced when order enforcement is on
  std::vector<ControlEdge> added_edges;
  Schedule schedule;
  std::map<ParamId, TransferBoundary> boundaries;
  BatchPlan batches;
  std::map<GroupId, TransferWindow> windows;
  std::map<GroupId, double> collective_times;
  ComputeTimeline timeline;
  TransferSchedule transfers;
};

inline ComputeTimeline compute_timeline(const DataflowDag& dag, const Schedule& schedule) {
  return {phase_interval(dag, schedule, Phase::ForwardPass), phase_interval(dag, schedule, Phase::Backprop),
          static_cast<double>(schedule.makespan_us())};
}

inline OptimizedPlan optimize(const DataflowDag& dag, const SimConfig& config) {
  require_valid(dag);
  OptimizedPlan plan;
  plan.order = config.enforce_order ? best_order(dag) : worst_order(dag);
  if (config.enforce_order) {
    auto enforced = enforce_order(dag, plan.order);
    plan.dag = std::move(enforced.dag);
    plan.added_edges = std::move(enforced.added);
  } else {
    plan.dag = dag;
  }
  const auto priority = priority_from_order(plan.dag, plan.order);
  plan.schedule = serial_schedule(plan.dag, priority);
  plan.boundaries = transfer_boundaries(plan.dag, plan.schedule);

  std::map<ParamId, std::int64_t> update_times, sizes;
  for (const auto& [pid, b] : plan.boundaries) update_times[pid] = b.start_us;
  for (const auto& [pid, p] : dag.params) sizes[pid] = p.size_bytes;
  plan.batches = config.batching
                     ? plan_batches(plan.order, update_times, plan.boundaries, sizes,
                                    batching_threshold(config.network), config.network)
                     : singleton_batches(plan.order, update_times, plan.boundaries, sizes);
  plan.windows = group_boundaries(plan.batches, plan.boundaries);
  plan.collective_times = group_collective_times(plan.batches, config);
  plan.timeline = compute_timeline(plan.dag, plan.schedule);
  const auto requests = make_requests(plan.batches, plan.windows, plan.collective_times);
  plan.transfers = schedule_transfers(requests, plan.timeline, {config.fp_scheduling});
  return plan;
}

inline SimResult simulate(const OptimizedPlan& plan, const SimConfig& config) {
  return simulate_iteration(plan.dag, plan.schedule, plan.batches, plan.transfers, config);
}

struct Scenario {
  std::string name;
  bool enforce_order = false;
  bool batching = false;
  bool fp_scheduling = false;
  bool adaptive_depth = false;
};

/// Config with the scenario's toggles applied. Without adaptive depth the
/// config's fixed depth is kept.
inline SimConfig apply(const SimConfig& base, const Scenario& s) {
  SimConfig c = base;
  c.enforce_order = s.enforce_order;
  c.batching = s.batching;
  c.fp_scheduling = s.fp_scheduling;
  c.depth = s.adaptive_depth ? DepthPolicy::adaptive_policy()
                             : DepthPolicy::fixed(base.depth.adaptive ? 1 : base.depth.fixed_depth);
  return c;
}

inline Scenario baseline_scenario() { return {"baseline", false, false, false, false}; }

inline Scenario full_scenario() { return {"full", true, true, true, true}; }

/// Cumulative ablation: adaptive depth, then batching, then order
/// enforcement, then forward-pass scheduling.
inline std::vector<Scenario> default_scenarios() {
  return {{"adaptive_depth", false, false, false, true},
          {"+batching", false, true, false, true},
          {"+order_enforcement", true, true, false, true},
          {"+fp_scheduling", true, true, true, true}};
}

struct ScenarioRow {
  std::string scenario;
  Metrics metrics;
};

inline Metrics run_scenario(const DataflowDag& dag, const SimConfig& config) {
  return simulate(optimize(dag, config), config).metrics;
}

/// Baseline row (worst order, no batching, backprop-only transfers, depth 1)
/// followed by one row per scenario. Scenarios run concurrently; rows come
/// back in input order.
inline std::vector<ScenarioRow> compare_scenarios(const DataflowDag& dag, const SimConfig& config,
                                                  const std::vector<Scenario>& scenarios) {
  require_valid(dag);
  SimConfig base_cfg = apply(config, baseline_scenario());
  base_cfg.depth = DepthPolicy::fixed(1);

  std::vector<std::future<Metrics>> pending;
  pending.push_back(std::async(std::launch::async, [&dag, base_cfg] { return run_scenario(dag, base_cfg); }));
  for (const auto& s : scenarios) {
    SimConfig cfg = apply(config, s);
    pending.push_back(std::async(std::launch::async, [&dag, cfg] { return run_scenario(dag, cfg); }));
  }
  std::vector<ScenarioRow> rows;
  rows.push_back({"baseline", pending[0].get()});
  for (std::size_t i = 0; i < scenarios.size(); ++i) rows.push_back({scenarios[i].name, pending[i + 1].get()});
  return rows;
}

inline std::string scenario_csv(const std::vector<ScenarioRow>& rows) {
  std::ostringstream out;
  out << "scenario,T_us,C_us,N_us,alpha,rho,U\n";
  out.precision(9);
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << r.scenario << ',' << report_us(m.T_us) << ',' << report_us(m.C_us) << ',' << report_us(m.N_us) << ','
        << m.alpha << ',' << m.rho << ',' << m.U << '\n';
  }
  return out.str();
}

}  // namespace xfersched
