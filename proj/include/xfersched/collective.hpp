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

// Decentralized allreduce patterns expanded into per-stage transfer/reduce
// steps, and a chunked pipeline model of their completion time.
//
//   Ring             2(p-1) stages of d/p; the first p-1 reduce.
//   HalvingDoubling  log2(p) halving stages d/2, d/4, ..., d/p that reduce,
//                    then the mirrored doubling stages.
//   Shuffle          all-to-all of d(p-1)/p with a local reduce, then an
//                    allgather of d(p-1)/p.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "xfersched/cost_model.hpp"
#include "xfersched/error.hpp"

namespace xfersched {

enum class Pattern { Ring, HalvingDoubling, Shuffle };

inline const char* to_string(Pattern p) {
  switch (p) {
    case Pattern::Ring: return "ring";
    case Pattern::HalvingDoubling: return "hd";
    case Pattern::Shuffle: return "shuffle";
  }
  return "shuffle";
}

inline Pattern parse_pattern(const std::string& s) {
  if (s == "ring") return Pattern::Ring;
  if (s == "hd") return Pattern::HalvingDoubling;
  if (s == "shuffle") return Pattern::Shuffle;
  throw Error(ErrorCode::InvalidArgument, "unknown pattern '" + s + "' (expected ring, hd or shuffle)");
}

inline constexpr int kMaxDepth = 8;

struct CollectiveSpec {
  Pattern pattern = Pattern::Shuffle;
  int workers = 2;
  double data_bytes = 0.0;
  int depth = 1;
};

struct Stage {
  double transfer_bytes = 0.0;  // per worker
  double reduce_bytes = 0.0;    // per worker, 0 for allgather stages
};

struct StagePlan {
  std::vector<Stage> stages;
};

struct ReduceModel {
  double rate_bytes_per_us = 300.0;
  double overhead_us = 500.0;
};

inline void validate(const CollectiveSpec& spec) {
  if (spec.workers < 2) throw Error(ErrorCode::UnsupportedWorkerCount, "need at least 2 workers");
  if (spec.pattern == Pattern::HalvingDoubling && !std::has_single_bit(static_cast<unsigned>(spec.workers)))
    throw Error(ErrorCode::UnsupportedWorkerCount,
                "halving-doubling needs a power-of-two worker count, got " + std::to_string(spec.workers));
  if (spec.depth < 1 || spec.depth > kMaxDepth)
    throw Error(ErrorCode::InvalidArgument, "depth must be in [1, 8], got " + std::to_string(spec.depth));
  if (!(spec.data_bytes >= 0)) throw Error(ErrorCode::InvalidArgument, "data_bytes must be non-negative");
}

inline StagePlan stage_plan(const CollectiveSpec& spec) {
  validate(spec);
  const double d = spec.data_bytes;
  const int p = spec.workers;
  StagePlan plan;
  switch (spec.pattern) {
    case Pattern::Ring:
      for (int i = 0; i < 2 * (p - 1); ++i) plan.stages.push_back({d / p, i < p - 1 ? d / p : 0.0});
      break;
    case Pattern::HalvingDoubling: {
      std::vector<double> sizes;
      for (int span = p; span > 1; span /= 2) sizes.push_back(d * (span / 2) / p);
      for (double s : sizes) plan.stages.push_back({s, s});
      for (auto it = sizes.rbegin(); it != sizes.rend(); ++it) plan.stages.push_back({*it, 0.0});
      break;
    }
    case Pattern::Shuffle: {
      const double moved = d * (p - 1) / p;
      plan.stages.push_back({moved, moved});
      plan.stages.push_back({moved, 0.0});
      break;
    }
  }
  return plan;
}

/// Makespan of `depth` equal chunks each walking the stage plan. Network and
/// reduce are separate exclusive resources; a chunk's stage transfer costs
/// f(bytes/depth) and its reduction bytes/(depth*rate) + overhead. Ready
/// tasks are dispatched by earliest start, network before reduce, then lower
/// stage, then lower chunk.
inline double collective_time(const CollectiveSpec& spec, const NetworkModel& net, const ReduceModel& reduce) {
  const StagePlan plan = stage_plan(spec);
  if (!(reduce.rate_bytes_per_us > 0)) throw Error(ErrorCode::InvalidArgument, "reduce rate must be positive");

  struct Task {
    int resource;  // 0 network, 1 reduce
    double duration;
  };
  std::vector<Task> steps;
  const double k = spec.depth;
  for (const auto& st : plan.stages) {
    steps.push_back({0, p2p_time(net, st.transfer_bytes / k)});
    if (st.reduce_bytes > 0) steps.push_back({1, st.reduce_bytes / (k * reduce.rate_bytes_per_us) + reduce.overhead_us});
  }

  std::vector<std::size_t> next(spec.depth, 0);
  std::vector<double> chunk_ready(spec.depth, 0.0);
  double resource_free[2] = {0.0, 0.0};
  double makespan = 0.0;
  const std::size_t total = steps.size() * spec.depth;
  for (std::size_t done = 0; done < total; ++done) {
    int pick = -1;
    double pick_start = 0.0;
    for (int c = 0; c < spec.depth; ++c) {
      if (next[c] == steps.size()) continue;
      const Task& t = steps[next[c]];
      const double start = std::max(chunk_ready[c], resource_free[t.resource]);
      if (pick < 0) {
        pick = c;
        pick_start = start;
        continue;
      }
      const Task& best = steps[next[pick]];
      const bool better = start < pick_start ||
                          (start == pick_start && (t.resource < best.resource ||
                                                   (t.resource == best.resource && next[c] < next[pick])));
      if (better) {
        pick = c;
        pick_start = start;
      }
    }
    const Task& t = steps[next[pick]];
    const double end = pick_start + t.duration;
    resource_free[t.resource] = end;
    chunk_ready[pick] = end;
    ++next[pick];
    makespan = std::max(makespan, end);
  }
  return makespan;
}

/// ceil(size / threshold) clamped to [1, 8].
inline int adaptive_depth(std::int64_t data_bytes, std::int64_t threshold_bytes) {
  if (threshold_bytes < 1) throw Error(ErrorCode::InvalidArgument, "threshold must be >= 1");
  if (data_bytes <= threshold_bytes) return 1;
  const std::int64_t chunks = (data_bytes + threshold_bytes - 1) / threshold_bytes;
  return static_cast<int>(std::min<std::int64_t>(kMaxDepth, chunks));
}

struct DepthPolicy {
  bool adaptive = false;
  int fixed_depth = 1;

  static DepthPolicy fixed(int k) { return {false, k}; }
  static DepthPolicy adaptive_policy() { return {true, 1}; }

  int depth_for(std::int64_t bytes, std::int64_t threshold) const {
    return adaptive ? adaptive_depth(bytes, threshold) : fixed_depth;
  }

  std::string to_string() const { return adaptive ? "adaptive" : "fixed:" + std::to_string(fixed_depth); }

  bool operator==(const DepthPolicy&) const = default;
};

/// "adaptive" or "fixed:k" (a bare integer is accepted as fixed).
inline DepthPolicy parse_depth_policy(const std::string& s) {
  if (s == "adaptive") return DepthPolicy::adaptive_policy();
  std::string num = s.rfind("fixed:", 0) == 0 ? s.substr(6) : s;
  try {
    std::size_t used = 0;
    const int k = std::stoi(num, &used);
    if (used == num.size() && k >= 1 && k <= kMaxDepth) return DepthPolicy::fixed(k);
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorCode::InvalidArgument, "bad depth policy '" + s + "' (expected adaptive or fixed:1..8)");
}

}  // namespace xfersched
