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

// Training-iteration dataflow graphs: ops, parameters, serial schedules and
// per-parameter transfer boundaries.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "xfersched/error.hpp"

namespace xfersched {

using OpId = std::string;
using ParamId = std::string;

enum class OpKind { Compute, ParamUpdate, ParamRead };
enum class Phase { ForwardPass, Backprop };

struct Op {
  OpId id;
  OpKind kind = OpKind::Compute;
  ParamId param;  // only for ParamUpdate / ParamRead
  std::int64_t duration_us = 0;
  std::set<OpId> deps;
  Phase phase = Phase::ForwardPass;

  bool is_marker() const { return kind != OpKind::Compute; }
  bool operator==(const Op&) const = default;
};

struct Parameter {
  ParamId id;
  std::int64_t size_bytes = 0;

  bool operator==(const Parameter&) const = default;
};

/// Ordered maps keep every traversal in lexicographic id order.
struct DataflowDag {
  std::map<OpId, Op> ops;
  std::map<ParamId, Parameter> params;

  const Op& op(const OpId& id) const {
    auto it = ops.find(id);
    if (it == ops.end()) throw Error(ErrorCode::InvalidArgument, "unknown op '" + id + "'");
    return it->second;
  }

  bool operator==(const DataflowDag& other) const = default;
};

// ----------------------------------------------------------------------------

/// Dense integer view of a DAG. Index i corresponds to the i-th op id in
/// lexicographic order. Dangling deps are dropped; call validate_dag first.
class IndexedDag {
 public:
  explicit IndexedDag(const DataflowDag& dag) {
    ids_.reserve(dag.ops.size());
    for (const auto& [id, op] : dag.ops) {
      index_.emplace(id, ids_.size());
      ids_.push_back(id);
    }
    preds_.resize(ids_.size());
    succs_.resize(ids_.size());
    for (const auto& [id, op] : dag.ops) {
      const std::size_t v = index_.at(id);
      for (const auto& dep : op.deps) {
        auto it = index_.find(dep);
        if (it == index_.end()) continue;
        preds_[v].push_back(it->second);
        succs_[it->second].push_back(v);
      }
    }
  }

  std::size_t size() const { return ids_.size(); }
  const OpId& id(std::size_t v) const { return ids_[v]; }
  std::size_t index(const OpId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorCode::InvalidArgument, "unknown op '" + id + "'");
    return it->second;
  }
  const std::vector<std::size_t>& preds(std::size_t v) const { return preds_[v]; }
  const std::vector<std::size_t>& succs(std::size_t v) const { return succs_[v]; }

  /// Kahn's algorithm with smallest-index-first; nullopt on a cycle.
  std::optional<std::vector<std::size_t>> topological_order() const {
    std::vector<std::size_t> indeg(size());
    for (std::size_t v = 0; v < size(); ++v) indeg[v] = preds_[v].size();
    std::set<std::size_t> ready;
    for (std::size_t v = 0; v < size(); ++v)
      if (indeg[v] == 0) ready.insert(v);
    std::vector<std::size_t> order;
    order.reserve(size());
    while (!ready.empty()) {
      const std::size_t v = *ready.begin();
      ready.erase(ready.begin());
      order.push_back(v);
      for (std::size_t s : succs_[v])
        if (--indeg[s] == 0) ready.insert(s);
    }
    if (order.size() != size()) return std::nullopt;
    return order;
  }

  /// ancestors[v][u] != 0 iff u reaches v. Requires an acyclic graph.
  std::vector<std::vector<char>> ancestor_matrix() const {
    auto order = topological_order();
    if (!order) throw Error(ErrorCode::InvalidArgument, "graph has a cycle");
    std::vector<std::vector<char>> anc(size(), std::vector<char>(size(), 0));
    for (std::size_t v : *order) {
      for (std::size_t p : preds_[v]) {
        anc[v][p] = 1;
        for (std::size_t u = 0; u < size(); ++u)
          if (anc[p][u]) anc[v][u] = 1;
      }
    }
    return anc;
  }

 private:
  std::vector<OpId> ids_;
  std::map<OpId, std::size_t> index_;
  std::vector<std::vector<std::size_t>> preds_;
  std::vector<std::vector<std::size_t>> succs_;
};

// ----------------------------------------------------------------------------

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool ok() const { return errors.empty(); }
  bool mentions(const std::string& needle) const {
    return std::any_of(errors.begin(), errors.end(), [&](const std::string& e) {
      return e.find(needle) != std::string::npos;
    });
  }
};

inline ValidationReport validate_dag(const DataflowDag& dag) {
  ValidationReport report;
  std::map<ParamId, int> updates;
  std::map<ParamId, int> reads;

  for (const auto& [key, op] : dag.ops) {
    if (key != op.id) report.errors.push_back("id mismatch: key '" + key + "' holds op '" + op.id + "'");
    if (op.duration_us < 0) report.errors.push_back("negative duration: " + op.id);
    for (const auto& dep : op.deps) {
      if (!dag.ops.count(dep)) report.errors.push_back("dangling dependency: " + op.id + " -> " + dep);
      if (dep == op.id) report.errors.push_back("cycle: self-dependency on " + op.id);
    }
    if (op.is_marker()) {
      if (!dag.params.count(op.param)) {
        report.errors.push_back("unknown parameter: op " + op.id + " references '" + op.param + "'");
        continue;
      }
      if (op.duration_us != 0) report.errors.push_back("marker duration: " + op.id + " must be 0");
      if (op.kind == OpKind::ParamUpdate) {
        ++updates[op.param];
        if (op.phase == Phase::ForwardPass)
          report.warnings.push_back("update in forward pass: " + op.id);
      } else {
        ++reads[op.param];
      }
    }
  }

  for (const auto& [id, param] : dag.params) {
    if (id != param.id) report.errors.push_back("id mismatch: key '" + id + "' holds param '" + param.id + "'");
    if (param.size_bytes <= 0) report.errors.push_back("non-positive size: " + id);
    const int u = updates.count(id) ? updates.at(id) : 0;
    if (u == 0) report.errors.push_back("missing update: " + id);
    if (u >= 2) report.errors.push_back("duplicate update: " + id);
    if (!reads.count(id)) report.errors.push_back("no reads: " + id);
  }

  if (!IndexedDag(dag).topological_order()) report.errors.push_back("cycle: dependency relation is not acyclic");
  return report;
}

inline void require_valid(const DataflowDag& dag) {
  auto report = validate_dag(dag);
  if (!report.ok()) throw Error(ErrorCode::InvalidArgument, "invalid DAG: " + report.errors.front());
}

/// Transitive closure of deps, excluding the op itself.
inline std::set<OpId> ancestors(const DataflowDag& dag, const OpId& op_id) {
  std::set<OpId> seen;
  std::vector<OpId> stack(dag.op(op_id).deps.begin(), dag.op(op_id).deps.end());
  while (!stack.empty()) {
    OpId cur = std::move(stack.back());
    stack.pop_back();
    if (!seen.insert(cur).second) continue;
    auto it = dag.ops.find(cur);
    if (it == dag.ops.end()) continue;
    for (const auto& d : it->second.deps)
      if (!seen.count(d)) stack.push_back(d);
  }
  return seen;
}

inline std::int64_t compute_total_us(const DataflowDag& dag) {
  std::int64_t total = 0;
  for (const auto& [id, op] : dag.ops)
    if (op.kind == OpKind::Compute) total += op.duration_us;
  return total;
}

inline const Op& update_op(const DataflowDag& dag, const ParamId& param) {
  for (const auto& [id, op] : dag.ops)
    if (op.kind == OpKind::ParamUpdate && op.param == param) return op;
  throw Error(ErrorCode::InvalidArgument, "parameter '" + param + "' has no update op");
}

// ----------------------------------------------------------------------------

struct Schedule {
  std::vector<OpId> order;
  std::map<OpId, std::int64_t> start_us;
  std::map<OpId, std::int64_t> end_us;

  std::int64_t makespan_us() const {
    std::int64_t m = 0;
    for (const auto& [id, e] : end_us) m = std::max(m, e);
    return m;
  }
};

/// Greedy list scheduling on one compute resource: the ready op that appears
/// earliest in `priority` runs next.
inline Schedule serial_schedule(const DataflowDag& dag, std::span<const OpId> priority) {
  IndexedDag g(dag);
  if (priority.size() != g.size())
    throw Error(ErrorCode::InvalidArgument, "priority must list every op exactly once");
  std::vector<std::size_t> rank(g.size(), g.size());
  for (std::size_t i = 0; i < priority.size(); ++i) {
    const std::size_t v = g.index(priority[i]);
    if (rank[v] != g.size()) throw Error(ErrorCode::InvalidArgument, "duplicate op in priority: " + priority[i]);
    rank[v] = i;
  }

  std::vector<std::size_t> indeg(g.size());
  std::set<std::pair<std::size_t, std::size_t>> ready;  // (rank, index)
  for (std::size_t v = 0; v < g.size(); ++v) {
    indeg[v] = g.preds(v).size();
    if (indeg[v] == 0) ready.emplace(rank[v], v);
  }

  Schedule sched;
  std::int64_t clock = 0;
  while (!ready.empty()) {
    const std::size_t v = ready.begin()->second;
    ready.erase(ready.begin());
    const OpId& id = g.id(v);
    sched.order.push_back(id);
    sched.start_us[id] = clock;
    clock += dag.op(id).duration_us;
    sched.end_us[id] = clock;
    for (std::size_t s : g.succs(v))
      if (--indeg[s] == 0) ready.emplace(rank[s], s);
  }
  if (sched.order.size() != g.size())
    throw Error(ErrorCode::NotTopological, "some ops never become ready (cycle)");
  return sched;
}

inline bool is_topological(const DataflowDag& dag, std::span<const OpId> order) {
  std::map<OpId, std::size_t> pos;
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  if (pos.size() != dag.ops.size() || order.size() != dag.ops.size()) return false;
  for (const auto& [id, op] : dag.ops) {
    if (!pos.count(id)) return false;
    for (const auto& d : op.deps)
      if (!pos.count(d) || pos.at(d) >= pos.at(id)) return false;
  }
  return true;
}

// ----------------------------------------------------------------------------

struct TransferBoundary {
  ParamId param_id;
  std::int64_t start_us = 0;  // producer of the update finishes
  std::int64_t end_us = 0;    // earliest next-iteration read, shifted by one iteration

  bool operator==(const TransferBoundary&) const = default;
};

/// Start is the latest end among the update op's deps. End is the iteration
/// length plus the earliest start among consumers of any read of the
/// parameter (a read without consumers counts at its own start).
inline std::map<ParamId, TransferBoundary> transfer_boundaries(const DataflowDag& dag,
                                                               const Schedule& sched) {
  const std::int64_t iteration = sched.makespan_us();
  std::map<OpId, std::vector<OpId>> consumers;
  for (const auto& [id, op] : dag.ops)
    for (const auto& d : op.deps) consumers[d].push_back(id);

  std::map<ParamId, TransferBoundary> out;
  for (const auto& [pid, param] : dag.params) out[pid].param_id = pid;
  std::map<ParamId, std::int64_t> earliest_read;

  for (const auto& [id, op] : dag.ops) {
    if (op.kind == OpKind::ParamUpdate) {
      std::int64_t start = 0;
      for (const auto& d : op.deps) start = std::max(start, sched.end_us.at(d));
      out[op.param].start_us = start;
    } else if (op.kind == OpKind::ParamRead) {
      std::int64_t at = sched.start_us.at(id);
      auto it = consumers.find(id);
      if (it != consumers.end() && !it->second.empty()) {
        at = std::numeric_limits<std::int64_t>::max();
        for (const auto& c : it->second) at = std::min(at, sched.start_us.at(c));
      }
      auto [slot, inserted] = earliest_read.emplace(op.param, at);
      if (!inserted) slot->second = std::min(slot->second, at);
    }
  }
  for (auto& [pid, b] : out) {
    auto it = earliest_read.find(pid);
    b.end_us = iteration + (it == earliest_read.end() ? 0 : it->second);
  }
  return out;
}

struct Interval {
  double begin = 0.0;
  double end = 0.0;

  double length() const { return end > begin ? end - begin : 0.0; }
  bool operator==(const Interval&) const = default;
};

/// Hull of the compute ops of one phase under `sched`; {0,0} if none.
inline Interval phase_interval(const DataflowDag& dag, const Schedule& sched, Phase phase) {
  bool any = false;
  Interval hull;
  for (const auto& [id, op] : dag.ops) {
    if (op.kind != OpKind::Compute || op.phase != phase) continue;
    const double s = static_cast<double>(sched.start_us.at(id));
    const double e = static_cast<double>(sched.end_us.at(id));
    if (!any) {
      hull = {s, e};
      any = true;
    } else {
      hull.begin = std::min(hull.begin, s);
      hull.end = std::max(hull.end, e);
    }
  }
  return hull;
}

}  // namespace xfersched
