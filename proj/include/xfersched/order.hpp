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

// Parameter activation ordering: pick the order with an iterative greedy over
// remaining ancestor compute cost, then pin it with control edges between the
// end set of one parameter and the free set of the next.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xfersched/dag.hpp"
#include "xfersched/json_io.hpp"

namespace xfersched {

struct ActivationOrder {
  std::vector<ParamId> params;
  std::vector<std::int64_t> cumulative_cost_us;

  bool operator==(const ActivationOrder&) const = default;
};

enum class OrderStrategy {
  LeastCost,  // best order
  MostCost,   // adversarial baseline
};

struct ControlEdge {
  OpId from;
  OpId to;

  bool operator==(const ControlEdge&) const = default;
  auto operator<=>(const ControlEdge&) const = default;
};

namespace detail {

inline std::vector<std::int64_t> op_costs(const DataflowDag& dag, const IndexedDag& g,
                                          const std::map<OpId, std::int64_t>* durations) {
  std::vector<std::int64_t> cost(g.size(), 0);
  for (std::size_t v = 0; v < g.size(); ++v) {
    const Op& op = dag.op(g.id(v));
    if (op.kind != OpKind::Compute) continue;
    if (durations == nullptr) {
      cost[v] = op.duration_us;
      continue;
    }
    auto it = durations->find(op.id);
    if (it == durations->end()) throw Error(ErrorCode::InvalidArgument, "no duration for compute op '" + op.id + "'");
    cost[v] = it->second;
  }
  return cost;
}

inline ActivationOrder greedy_order(const DataflowDag& dag, const std::map<OpId, std::int64_t>* durations,
                                    OrderStrategy strategy) {
  require_valid(dag);
  IndexedDag g(dag);
  const auto cost = op_costs(dag, g, durations);
  const auto anc = g.ancestor_matrix();

  std::vector<ParamId> pending;
  std::map<ParamId, std::size_t> update_of;
  for (const auto& [pid, p] : dag.params) {
    pending.push_back(pid);
    update_of[pid] = g.index(update_op(dag, pid).id);
  }

  std::vector<char> executed(g.size(), 0);
  std::int64_t done_cost = 0;
  ActivationOrder order;
  while (!pending.empty()) {
    std::size_t best = 0;
    std::int64_t best_cost = 0;
    std::size_t best_count = 0;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      const std::size_t u = update_of.at(pending[i]);
      std::int64_t c = 0;
      std::size_t n = 0;
      for (std::size_t v = 0; v < g.size(); ++v) {
        if (anc[u][v] && !executed[v]) {
          c += cost[v];
          ++n;
        }
      }
      // pending is sorted, so keeping the first hit resolves id ties.
      bool better = i == 0;
      if (!better) {
        if (strategy == OrderStrategy::LeastCost)
          better = c < best_cost || (c == best_cost && n < best_count);
        else
          better = c > best_cost || (c == best_cost && n > best_count);
      }
      if (better) {
        best = i;
        best_cost = c;
        best_count = n;
      }
    }
    const std::size_t u = update_of.at(pending[best]);
    for (std::size_t v = 0; v < g.size(); ++v) {
      if ((anc[u][v] || v == u) && !executed[v]) {
        executed[v] = 1;
        done_cost += cost[v];
      }
    }
    order.params.push_back(pending[best]);
    order.cumulative_cost_us.push_back(done_cost);
    pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return order;
}

}  // namespace detail

/// Iterative greedy: repeatedly activate the parameter whose update needs the
/// least not-yet-executed ancestor compute, then mark those ancestors done.
/// Ties: fewer pending ancestor ops, then smaller param id.
inline ActivationOrder best_order(const DataflowDag& dag, const std::map<OpId, std::int64_t>& durations) {
  return detail::greedy_order(dag, &durations, OrderStrategy::LeastCost);
}

inline ActivationOrder best_order(const DataflowDag& dag) {
  return detail::greedy_order(dag, nullptr, OrderStrategy::LeastCost);
}

/// Mirror of best_order that activates the most expensive parameter first;
/// used as the unoptimized baseline.
inline ActivationOrder worst_order(const DataflowDag& dag) {
  return detail::greedy_order(dag, nullptr, OrderStrategy::MostCost);
}

/// Op priority for serial_schedule: ops needed by earlier parameters first,
/// ops not needed by any update last, id order within a rank.
inline std::vector<OpId> priority_from_order(const DataflowDag& dag, const ActivationOrder& order) {
  IndexedDag g(dag);
  const auto anc = g.ancestor_matrix();
  std::vector<std::size_t> rank(g.size(), order.params.size());
  for (std::size_t i = order.params.size(); i-- > 0;) {
    const std::size_t u = g.index(update_op(dag, order.params[i]).id);
    rank[u] = i;
    for (std::size_t v = 0; v < g.size(); ++v)
      if (anc[u][v]) rank[v] = i;
  }
  std::vector<std::size_t> idx(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) idx[v] = v;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
  std::vector<OpId> out;
  out.reserve(g.size());
  for (std::size_t v : idx) out.push_back(g.id(v));
  return out;
}

struct Enforcement {
  DataflowDag dag;
  std::vector<ControlEdge> added;
};

namespace detail {

inline bool reaches(const std::vector<std::vector<std::size_t>>& succs, std::size_t from, std::size_t to) {
  if (from == to) return true;
  std::vector<char> seen(succs.size(), 0);
  std::vector<std::size_t> stack{from};
  seen[from] = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t s : succs[v]) {
      if (s == to) return true;
      if (!seen[s]) {
        seen[s] = 1;
        stack.push_back(s);
      }
    }
  }
  return false;
}

}  // namespace detail

/// For consecutive parameters i, i+1 in `order`: the end set is the direct
/// deps of update(i); the free set is the ancestors of update(i+1) that are
/// not yet executed but whose deps all are. Every end x free pair gets an
/// edge, plus update(i) -> update(i+1) so the zero-duration markers are
/// ordered too. Edges already implied by reachability are skipped.
inline Enforcement enforce_order(const DataflowDag& dag, const ActivationOrder& order) {
  require_valid(dag);
  if (order.params.size() != dag.params.size() ||
      std::set<ParamId>(order.params.begin(), order.params.end()).size() != dag.params.size())
    throw Error(ErrorCode::InvalidArgument, "order must list every parameter exactly once");

  IndexedDag g(dag);
  const auto anc = g.ancestor_matrix();
  std::vector<std::vector<std::size_t>> succs(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) succs[v] = g.succs(v);

  Enforcement result{dag, {}};
  auto add_edge = [&](std::size_t from, std::size_t to) {
    if (detail::reaches(succs, from, to)) return;
    if (detail::reaches(succs, to, from))
      throw Error(ErrorCode::CycleIntroduced, g.id(from) + " -> " + g.id(to));
    succs[from].push_back(to);
    result.dag.ops.at(g.id(to)).deps.insert(g.id(from));
    result.added.push_back({g.id(from), g.id(to)});
  };

  std::vector<char> executed(g.size(), 0);
  for (std::size_t i = 0; i < order.params.size(); ++i) {
    const std::size_t u = g.index(update_op(dag, order.params[i]).id);
    for (std::size_t v = 0; v < g.size(); ++v)
      if (anc[u][v]) executed[v] = 1;
    executed[u] = 1;
    if (i + 1 == order.params.size()) break;

    const std::size_t next = g.index(update_op(dag, order.params[i + 1]).id);
    if (executed[next])
      throw Error(ErrorCode::CycleIntroduced, "update of '" + order.params[i + 1] + "' precedes '" +
                                                  order.params[i] + "' in the DAG");
    std::vector<std::size_t> free_set;
    for (std::size_t v = 0; v < g.size(); ++v) {
      if (!anc[next][v] || executed[v]) continue;
      const auto& preds = g.preds(v);
      if (std::all_of(preds.begin(), preds.end(), [&](std::size_t p) { return executed[p] != 0; }))
        free_set.push_back(v);
    }
    for (std::size_t e : g.preds(u))
      for (std::size_t f : free_set) add_edge(e, f);
    add_edge(u, next);
  }
  return result;
}

/// True iff every topological order of `dag` activates parameters in
/// `order`, i.e. each update reaches the next one.
inline bool verify_enforcement(const DataflowDag& dag, const ActivationOrder& order) {
  if (order.params.size() != dag.params.size()) return false;
  IndexedDag g(dag);
  if (!g.topological_order()) return false;
  std::vector<std::vector<std::size_t>> succs(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) succs[v] = g.succs(v);
  for (std::size_t i = 0; i + 1 < order.params.size(); ++i) {
    const std::size_t a = g.index(update_op(dag, order.params[i]).id);
    const std::size_t b = g.index(update_op(dag, order.params[i + 1]).id);
    if (!detail::reaches(succs, a, b)) return false;
  }
  return true;
}

inline json edges_to_json(const std::vector<ControlEdge>& edges) {
  json out = json::array();
  for (const auto& e : edges) out.push_back({{"from", e.from}, {"to", e.to}});
  return out;
}

inline std::vector<ControlEdge> edges_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::Parse, "edges: expected an array");
  std::vector<ControlEdge> out;
  for (const auto& je : j) {
    detail::check_fields(je, "edge", {"from", "to"});
    out.push_back({detail::get_field<std::string>(je, "from", "edge"), detail::get_field<std::string>(je, "to", "edge")});
  }
  return out;
}

inline json order_to_json(const ActivationOrder& order) {
  return {{"params", order.params}, {"cumulative_cost_us", order.cumulative_cost_us}};
}

}  // namespace xfersched
