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

// Small-parameter batching driven by a simulated transfer queue.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "xfersched/cost_model.hpp"
#include "xfersched/dag.hpp"
#include "xfersched/json_io.hpp"
#include "xfersched/order.hpp"

namespace xfersched {

using GroupId = std::size_t;

struct BatchGroup {
  GroupId group_id = 0;
  std::vector<ParamId> params;
  std::int64_t total_bytes = 0;
  std::int64_t ready_time_us = 0;     // latest member update
  std::int64_t earliest_read_us = 0;  // earliest member read (next-iteration axis)

  bool operator==(const BatchGroup&) const = default;
};

struct BatchPlan {
  std::vector<BatchGroup> groups;
  std::int64_t threshold_bytes = 0;

  bool operator==(const BatchPlan&) const = default;
};

struct TransferWindow {
  double start_us = 0.0;
  double end_us = 0.0;

  bool operator==(const TransferWindow&) const = default;
};

namespace detail {

inline std::vector<ParamId> by_update_time(const ActivationOrder& order,
                                           const std::map<ParamId, std::int64_t>& update_times) {
  std::map<ParamId, std::size_t> pos;
  for (std::size_t i = 0; i < order.params.size(); ++i) pos[order.params[i]] = i;
  std::vector<ParamId> ids = order.params;
  std::stable_sort(ids.begin(), ids.end(), [&](const ParamId& a, const ParamId& b) {
    const auto ta = update_times.at(a), tb = update_times.at(b);
    if (ta != tb) return ta < tb;
    return pos.at(a) < pos.at(b);
  });
  return ids;
}

class GroupBuilder {
 public:
  GroupBuilder(const std::map<ParamId, TransferBoundary>& boundaries,
               const std::map<ParamId, std::int64_t>& sizes)
      : boundaries_(boundaries), sizes_(sizes) {}

  BatchGroup make(std::vector<ParamId> members) {
    BatchGroup g;
    g.group_id = next_id_++;
    g.ready_time_us = 0;
    g.earliest_read_us = std::numeric_limits<std::int64_t>::max();
    for (const auto& p : members) {
      g.total_bytes += sizes_.at(p);
      g.ready_time_us = std::max(g.ready_time_us, boundaries_.at(p).start_us);
      g.earliest_read_us = std::min(g.earliest_read_us, boundaries_.at(p).end_us);
    }
    g.params = std::move(members);
    return g;
  }

 private:
  const std::map<ParamId, TransferBoundary>& boundaries_;
  const std::map<ParamId, std::int64_t>& sizes_;
  GroupId next_id_ = 0;
};

}  // namespace detail

/// One group per parameter, in update-time order. Used when batching is off.
inline BatchPlan singleton_batches(const ActivationOrder& order, const std::map<ParamId, std::int64_t>& update_times,
                                   const std::map<ParamId, TransferBoundary>& boundaries,
                                   const std::map<ParamId, std::int64_t>& sizes) {
  detail::GroupBuilder builder(boundaries, sizes);
  BatchPlan plan;
  plan.threshold_bytes = 1;
  for (const auto& p : detail::by_update_time(order, update_times)) plan.groups.push_back(builder.make({p}));
  return plan;
}

/// Walk parameters by ascending update time against a simulated FIFO queue
/// (cost f(bytes), empty at iteration start):
///   - size > threshold: own group, enqueued at once;
///   - otherwise, queue idle: own group ("transfer immediately");
///   - otherwise: join the active batch.
/// The active batch is flushed once its size exceeds the threshold, or when
/// the queue drains before the next update, or before a member would make its
/// window empty.
inline BatchPlan plan_batches(const ActivationOrder& order, const std::map<ParamId, std::int64_t>& update_times,
                              const std::map<ParamId, TransferBoundary>& boundaries,
                              const std::map<ParamId, std::int64_t>& sizes, std::int64_t threshold,
                              const NetworkModel& model) {
  if (threshold < 1) throw Error(ErrorCode::InvalidArgument, "threshold must be >= 1");
  const auto ids = detail::by_update_time(order, update_times);
  detail::GroupBuilder builder(boundaries, sizes);
  BatchPlan plan;
  plan.threshold_bytes = threshold;

  double queue_free = 0.0;
  std::vector<ParamId> active;
  std::int64_t active_bytes = 0;
  std::int64_t active_start = std::numeric_limits<std::int64_t>::min();
  std::int64_t active_end = std::numeric_limits<std::int64_t>::max();

  auto enqueue = [&](std::vector<ParamId> members, double at) {
    BatchGroup g = builder.make(std::move(members));
    queue_free = std::max(queue_free, at) + p2p_time(model, static_cast<double>(g.total_bytes));
    plan.groups.push_back(std::move(g));
  };
  auto flush = [&]() {
    if (active.empty()) return;
    enqueue(std::move(active), static_cast<double>(active_start));
    active.clear();
    active_bytes = 0;
    active_start = std::numeric_limits<std::int64_t>::min();
    active_end = std::numeric_limits<std::int64_t>::max();
  };

  for (std::size_t i = 0; i < ids.size(); ++i) {
    const ParamId& p = ids[i];
    const auto t = static_cast<double>(update_times.at(p));
    const auto size = sizes.at(p);
    const auto& b = boundaries.at(p);

    if (size > threshold) {
      enqueue({p}, t);
    } else if (queue_free <= t && active.empty()) {
      enqueue({p}, t);
    } else {
      if (!active.empty() && std::max(active_start, b.start_us) > std::min(active_end, b.end_us)) flush();
      active.push_back(p);
      active_bytes += size;
      active_start = std::max(active_start, b.start_us);
      active_end = std::min(active_end, b.end_us);
      if (active_bytes > threshold) flush();
    }

    const bool last = i + 1 == ids.size();
    if (!active.empty() && (last || queue_free <= static_cast<double>(update_times.at(ids[i + 1])))) flush();
  }
  return plan;
}

/// Feasible window of each group: latest member start to earliest member end.
inline std::map<GroupId, TransferWindow> group_boundaries(const BatchPlan& plan,
                                                          const std::map<ParamId, TransferBoundary>& boundaries) {
  std::map<GroupId, TransferWindow> out;
  for (const auto& g : plan.groups) {
    if (g.params.empty()) throw Error(ErrorCode::InvalidArgument, "empty group");
    double start = -std::numeric_limits<double>::infinity();
    double end = std::numeric_limits<double>::infinity();
    for (const auto& p : g.params) {
      const auto& b = boundaries.at(p);
      start = std::max(start, static_cast<double>(b.start_us));
      end = std::min(end, static_cast<double>(b.end_us));
    }
    if (start > end)
      throw Error(ErrorCode::InfeasibleGroup, "group " + std::to_string(g.group_id) + " has an empty window");
    out[g.group_id] = {start, end};
  }
  return out;
}

inline json batch_plan_to_json(const BatchPlan& plan) {
  json groups = json::array();
  for (const auto& g : plan.groups)
    groups.push_back({{"group_id", g.group_id},
                      {"params", g.params},
                      {"total_bytes", g.total_bytes},
                      {"ready_time_us", g.ready_time_us},
                      {"earliest_read_us", g.earliest_read_us}});
  return {{"threshold_bytes", plan.threshold_bytes}, {"groups", std::move(groups)}};
}

inline BatchPlan batch_plan_from_json(const json& j) {
  detail::check_fields(j, "batch_plan", {"threshold_bytes", "groups"});
  BatchPlan plan;
  plan.threshold_bytes = detail::get_field<std::int64_t>(j, "threshold_bytes", "batch_plan");
  if (!j["groups"].is_array()) throw Error(ErrorCode::Parse, "batch_plan: 'groups' must be an array");
  for (const auto& jg : j["groups"]) {
    detail::check_fields(jg, "group", {"group_id", "params", "total_bytes", "ready_time_us", "earliest_read_us"});
    BatchGroup g;
    g.group_id = detail::get_field<GroupId>(jg, "group_id", "group");
    g.params = detail::get_field<std::vector<ParamId>>(jg, "params", "group");
    g.total_bytes = detail::get_field<std::int64_t>(jg, "total_bytes", "group");
    g.ready_time_us = detail::get_field<std::int64_t>(jg, "ready_time_us", "group");
    g.earliest_read_us = detail::get_field<std::int64_t>(jg, "earliest_read_us", "group");
    plan.groups.push_back(std::move(g));
  }
  return plan;
}

}  // namespace xfersched
