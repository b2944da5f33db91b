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

// Greedy placement of group transfers on a single network resource. All
// times share one axis: compute runs on [0, length]; backprop placements sit
// inside the current iteration, forward-pass placements are expressed in the
// next iteration's coordinates (which coincide in steady state). Overflow
// extends the iteration past `length` (tail) or before 0 (head).

#include <algorithm>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "xfersched/batcher.hpp"
#include "xfersched/json_io.hpp"
#include "xfersched/timeline.hpp"

namespace xfersched {

enum class Placement { BackpropOverlap, ForwardPassOverlap, OverflowAfterBP, OverflowBeforeFP };

inline const char* to_string(Placement p) {
  switch (p) {
    case Placement::BackpropOverlap: return "backprop_overlap";
    case Placement::ForwardPassOverlap: return "forward_pass_overlap";
    case Placement::OverflowAfterBP: return "overflow_after_bp";
    case Placement::OverflowBeforeFP: return "overflow_before_fp";
  }
  return "backprop_overlap";
}

inline Placement parse_placement(const std::string& s) {
  for (auto p : {Placement::BackpropOverlap, Placement::ForwardPassOverlap, Placement::OverflowAfterBP,
                 Placement::OverflowBeforeFP})
    if (s == to_string(p)) return p;
  throw Error(ErrorCode::Parse, "unknown placement '" + s + "'");
}

/// True for transfers that carry the previous iteration's gradients into
/// this iteration's forward pass.
inline bool is_forward_side(Placement p) {
  return p == Placement::ForwardPassOverlap || p == Placement::OverflowBeforeFP;
}

struct ComputeTimeline {
  Interval fp;
  Interval bp;
  double length = 0.0;  // compute makespan; boundaries are shifted by this
};

struct TransferRequest {
  GroupId group_id = 0;
  std::int64_t bytes = 0;
  TransferWindow window;
  double duration_us = 0.0;
};

struct PlacedTransfer {
  GroupId group_id = 0;
  double begin_us = 0.0;
  double finish_us = 0.0;
  Placement placement = Placement::BackpropOverlap;

  bool operator==(const PlacedTransfer&) const = default;
};

struct TransferSchedule {
  std::vector<PlacedTransfer> transfers;  // sorted by begin, then group id
  double head_extension_us = 0.0;
  double tail_extension_us = 0.0;
  double added_iteration_time_us = 0.0;

  bool operator==(const TransferSchedule&) const = default;
};

struct SchedulerOptions {
  bool forward_pass = true;  // allow forward-pass overlap and head overflow
};

inline std::vector<TransferRequest> make_requests(const BatchPlan& plan,
                                                  const std::map<GroupId, TransferWindow>& windows,
                                                  const std::map<GroupId, double>& collective_times) {
  std::vector<TransferRequest> out;
  for (const auto& g : plan.groups)
    out.push_back({g.group_id, g.total_bytes, windows.at(g.group_id), collective_times.at(g.group_id)});
  return out;
}

/// Three-stage greedy:
///  1. groups by size (descending, then id), first fit inside backprop
///     within [window.start, window.end];
///  2. else first fit inside the next forward pass, before the first read;
///  3. leftovers go past the end of backprop (tail) or before the start of
///     the forward pass (head), whichever adds less iteration time; ties go
///     to the tail.
inline TransferSchedule schedule_transfers(std::span<const TransferRequest> requests, const ComputeTimeline& compute,
                                           SchedulerOptions options = {}) {
  std::vector<TransferRequest> sorted(requests.begin(), requests.end());
  for (const auto& r : sorted) {
    if (!(r.duration_us > 0)) throw Error(ErrorCode::InvalidArgument, "collective time must be positive");
    if (r.window.start_us > r.window.end_us) throw Error(ErrorCode::InfeasibleGroup, "window start after end");
  }
  std::stable_sort(sorted.begin(), sorted.end(), [](const TransferRequest& a, const TransferRequest& b) {
    if (a.bytes != b.bytes) return a.bytes > b.bytes;
    return a.group_id < b.group_id;
  });

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double length = compute.length;
  Timeline network;
  TransferSchedule out;
  std::vector<const TransferRequest*> leftovers;

  for (const auto& r : sorted) {
    const double d = r.duration_us;
    const double bp_lo = std::max(r.window.start_us, compute.bp.begin);
    const double bp_hi = std::min(r.window.end_us, compute.bp.end);
    if (bp_hi - bp_lo >= d) {
      if (auto at = network.earliest_fit(bp_lo, bp_hi, d)) {
        network.insert({*at, *at + d});
        out.transfers.push_back({r.group_id, *at, *at + d, Placement::BackpropOverlap});
        continue;
      }
    }
    if (options.forward_pass) {
      const double fp_lo = compute.fp.begin;
      const double fp_hi = std::min(compute.fp.end, r.window.end_us - length);
      if (fp_hi - fp_lo >= d) {
        if (auto at = network.earliest_fit(fp_lo, fp_hi, d)) {
          network.insert({*at, *at + d});
          out.transfers.push_back({r.group_id, *at, *at + d, Placement::ForwardPassOverlap});
          continue;
        }
      }
    }
    leftovers.push_back(&r);
  }

  for (const TransferRequest* r : leftovers) {
    const double d = r->duration_us;
    const double tail_begin = *network.earliest_fit(r->window.start_us, kInf, d);
    const double tail_cost = std::max(0.0, tail_begin + d - (length + out.tail_extension_us));
    double head_cost = kInf;
    double head_end = 0.0;
    if (options.forward_pass) {
      head_end = *network.latest_fit(-kInf, std::min(r->window.end_us - length, compute.fp.end), d);
      head_cost = std::max(0.0, -out.head_extension_us - (head_end - d));
    }
    if (tail_cost <= head_cost) {
      network.insert({tail_begin, tail_begin + d});
      out.transfers.push_back({r->group_id, tail_begin, tail_begin + d, Placement::OverflowAfterBP});
      out.tail_extension_us = std::max(out.tail_extension_us, tail_begin + d - length);
    } else {
      network.insert({head_end - d, head_end});
      out.transfers.push_back({r->group_id, head_end - d, head_end, Placement::OverflowBeforeFP});
      out.head_extension_us = std::max(out.head_extension_us, d - head_end);
    }
  }

  out.added_iteration_time_us = out.head_extension_us + out.tail_extension_us;
  std::sort(out.transfers.begin(), out.transfers.end(), [](const PlacedTransfer& a, const PlacedTransfer& b) {
    if (a.begin_us != b.begin_us) return a.begin_us < b.begin_us;
    return a.group_id < b.group_id;
  });
  return out;
}

struct OverlapStats {
  double alpha = 1.0;
  double rho = 0.0;
  double network_total_us = 0.0;
  double overlap_us = 0.0;
};

/// N is total network busy time, overlap is the part of it that coincides
/// with compute (fp and bp hulls), alpha = overlap / min(N, C), rho = N / C.
/// With no transfers alpha is 1 and rho is 0.
inline OverlapStats overlap_stats(const TransferSchedule& schedule, const Interval& bp, const Interval& fp,
                                  double compute_total_us) {
  OverlapStats s;
  std::vector<Interval> net;
  for (const auto& t : schedule.transfers) {
    net.push_back({t.begin_us, t.finish_us});
    s.network_total_us += t.finish_us - t.begin_us;
  }
  if (s.network_total_us <= 0) return s;
  s.overlap_us = intersection_length(merge_intervals(net), merge_intervals({fp, bp}));
  s.rho = compute_total_us > 0 ? s.network_total_us / compute_total_us : std::numeric_limits<double>::infinity();
  const double denom = std::min(s.network_total_us, compute_total_us);
  s.alpha = denom > 0 ? std::clamp(s.overlap_us / denom, 0.0, 1.0) : 0.0;
  return s;
}

inline json transfer_schedule_to_json(const TransferSchedule& s) {
  json transfers = json::array();
  for (const auto& t : s.transfers)
    transfers.push_back({{"group_id", t.group_id},
                         {"begin_us", t.begin_us},
                         {"finish_us", t.finish_us},
                         {"placement", to_string(t.placement)}});
  return {{"transfers", std::move(transfers)},
          {"head_extension_us", s.head_extension_us},
          {"tail_extension_us", s.tail_extension_us},
          {"added_iteration_time_us", s.added_iteration_time_us}};
}

inline TransferSchedule transfer_schedule_from_json(const json& j) {
  detail::check_fields(j, "transfer_schedule",
                       {"transfers", "head_extension_us", "tail_extension_us", "added_iteration_time_us"});
  TransferSchedule s;
  s.head_extension_us = detail::get_field<double>(j, "head_extension_us", "transfer_schedule");
  s.tail_extension_us = detail::get_field<double>(j, "tail_extension_us", "transfer_schedule");
  s.added_iteration_time_us = detail::get_field<double>(j, "added_iteration_time_us", "transfer_schedule");
  if (!j["transfers"].is_array()) throw Error(ErrorCode::Parse, "transfer_schedule: 'transfers' must be an array");
  for (const auto& jt : j["transfers"]) {
    detail::check_fields(jt, "transfer", {"group_id", "begin_us", "finish_us", "placement"});
    s.transfers.push_back({detail::get_field<GroupId>(jt, "group_id", "transfer"),
                           detail::get_field<double>(jt, "begin_us", "transfer"),
                           detail::get_field<double>(jt, "finish_us", "transfer"),
                           parse_placement(detail::get_field<std::string>(jt, "placement", "transfer"))});
  }
  return s;
}

}  // namespace xfersched
