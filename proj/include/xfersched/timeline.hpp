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

// Busy intervals of one exclusive resource.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "xfersched/dag.hpp"

namespace xfersched {

class Timeline {
 public:
  const std::vector<Interval>& busy() const { return busy_; }

  /// Earliest begin >= lo with [begin, begin+len] idle and ending by hi.
  std::optional<double> earliest_fit(double lo, double hi, double len) const {
    double cursor = lo;
    for (const auto& b : busy_) {
      if (b.end <= cursor) continue;
      if (b.begin >= cursor + len) break;
      cursor = std::max(cursor, b.end);
    }
    if (cursor + len <= hi) return cursor;
    return std::nullopt;
  }

  /// Latest end <= hi with [end-len, end] idle and beginning at or after lo.
  std::optional<double> latest_fit(double lo, double hi, double len) const {
    double cursor = hi;
    for (auto it = busy_.rbegin(); it != busy_.rend(); ++it) {
      if (it->begin >= cursor) continue;
      if (it->end <= cursor - len) break;
      cursor = std::min(cursor, it->begin);
    }
    if (cursor - len >= lo) return cursor;
    return std::nullopt;
  }

  void insert(Interval iv) {
    auto pos = std::lower_bound(busy_.begin(), busy_.end(), iv,
                                [](const Interval& a, const Interval& b) { return a.begin < b.begin; });
    busy_.insert(pos, iv);
  }

  bool overlaps_any() const {
    for (std::size_t i = 1; i < busy_.size(); ++i)
      if (busy_[i].begin < busy_[i - 1].end) return true;
    return false;
  }

 private:
  std::vector<Interval> busy_;  // sorted by begin, pairwise disjoint
};

/// Total length of the intersection of two sets of intervals. Each set must
/// be pairwise disjoint.
inline double intersection_length(std::vector<Interval> a, std::vector<Interval> b) {
  auto by_begin = [](const Interval& x, const Interval& y) { return x.begin < y.begin; };
  std::sort(a.begin(), a.end(), by_begin);
  std::sort(b.begin(), b.end(), by_begin);
  double total = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].begin, b[j].begin);
    const double hi = std::min(a[i].end, b[j].end);
    if (hi > lo) total += hi - lo;
    if (a[i].end < b[j].end) ++i; else ++j;
  }
  return total;
}

/// Union of possibly overlapping intervals as a sorted disjoint list.
inline std::vector<Interval> merge_intervals(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](const Interval& x, const Interval& y) { return x.begin < y.begin; });
  std::vector<Interval> out;
  for (const auto& iv : v) {
    if (iv.length() <= 0) continue;
    if (!out.empty() && iv.begin <= out.back().end)
      out.back().end = std::max(out.back().end, iv.end);
    else
      out.push_back(iv);
  }
  return out;
}

}  // namespace xfersched
