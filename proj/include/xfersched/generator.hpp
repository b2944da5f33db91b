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

// Seeded synthetic training graphs: a branchy forward pass, a loss op, the
// mirrored backward pass, and parameters attached to layers (read before the
// layer's forward op, updated after its backward op).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "xfersched/dag.hpp"

namespace xfersched {

enum class SizePreset {
  LogUniform,  // 1 KB .. 100 MB, log-uniform
  SmallHeavy,  // 60% in 256 B .. 20 KB, the rest 20 KB .. 100 MB
};

inline SizePreset parse_size_preset(const std::string& s) {
  if (s == "log-uniform") return SizePreset::LogUniform;
  if (s == "small-heavy") return SizePreset::SmallHeavy;
  throw Error(ErrorCode::InvalidArgument, "unknown preset '" + s + "' (expected log-uniform or small-heavy)");
}

struct GeneratorOptions {
  int ops = 120;
  int params = 30;
  SizePreset preset = SizePreset::LogUniform;
  double fp_fraction = 0.3;
  std::uint64_t seed = 1;
  double branch_probability = 0.35;
  std::int64_t min_layer_us = 200;
  std::int64_t max_layer_us = 20000;
};

namespace detail {

inline std::string padded(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%04d", prefix, i);
  return buf;
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

}  // namespace detail

/// Op count is 2*layers + 1 (loss) + 2*params (markers); layers are derived
/// from the requested totals.
inline DataflowDag generate_dag(const GeneratorOptions& opt) {
  if (opt.params < 1) throw Error(ErrorCode::InvalidArgument, "need at least one parameter");
  const int layers = (opt.ops - 2 * opt.params - 1) / 2;
  if (layers < 1)
    throw Error(ErrorCode::InvalidArgument, "ops=" + std::to_string(opt.ops) + " too small for " +
                                                std::to_string(opt.params) + " parameters");
  if (!(opt.fp_fraction > 0 && opt.fp_fraction < 1))
    throw Error(ErrorCode::InvalidArgument, "fp_fraction must be in (0, 1)");

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  DataflowDag dag;

  std::vector<std::set<int>> fwd_deps(layers);
  std::vector<char> has_succ(layers, 0);
  for (int i = 1; i < layers; ++i) {
    if (coin(rng) >= opt.branch_probability) {
      fwd_deps[i].insert(i - 1);
    } else {
      std::uniform_int_distribution<int> pick(std::max(0, i - 3), i - 1);
      fwd_deps[i].insert(pick(rng));
      if (coin(rng) < 0.3) fwd_deps[i].insert(pick(rng));
    }
    for (int d : fwd_deps[i]) has_succ[d] = 1;
  }

  std::vector<double> work(layers);
  for (auto& w : work)
    w = detail::log_uniform(rng, static_cast<double>(opt.min_layer_us), static_cast<double>(opt.max_layer_us));

  const OpId loss = "loss";
  double fp_total = 0;
  for (int i = 0; i < layers; ++i) {
    Op f{detail::padded("f", i), OpKind::Compute, {},
         std::max<std::int64_t>(1, std::llround(work[i] * opt.fp_fraction)), {}, Phase::ForwardPass};
    for (int d : fwd_deps[i]) f.deps.insert(detail::padded("f", d));
    fp_total += static_cast<double>(f.duration_us);
    dag.ops.emplace(f.id, f);

    Op b{detail::padded("b", i), OpKind::Compute, {},
         std::max<std::int64_t>(1, std::llround(work[i] * (1.0 - opt.fp_fraction))), {}, Phase::Backprop};
    if (!has_succ[i]) b.deps.insert(loss);
    for (int j = i + 1; j < layers; ++j)
      if (fwd_deps[j].count(i)) b.deps.insert(detail::padded("b", j));
    dag.ops.emplace(b.id, b);
  }
  Op l{loss, OpKind::Compute, {}, std::max<std::int64_t>(1, std::llround(fp_total / layers / 4)), {}, Phase::ForwardPass};
  for (int i = 0; i < layers; ++i)
    if (!has_succ[i]) l.deps.insert(detail::padded("f", i));
  dag.ops.emplace(l.id, l);

  std::vector<char> small(opt.params, 0);
  if (opt.preset == SizePreset::SmallHeavy) {
    const int n_small = (opt.params * 6 + 9) / 10;
    std::fill(small.begin(), small.begin() + n_small, 1);
    std::shuffle(small.begin(), small.end(), rng);
  }
  std::uniform_int_distribution<int> layer_pick(0, layers - 1);
  for (int k = 0; k < opt.params; ++k) {
    const int layer = layer_pick(rng);
    double bytes = 0;
    if (opt.preset == SizePreset::LogUniform)
      bytes = detail::log_uniform(rng, 1024.0, 100.0 * 1024 * 1024);
    else if (small[k])
      bytes = detail::log_uniform(rng, 256.0, 20.0 * 1024 - 1);
    else
      bytes = detail::log_uniform(rng, 20.0 * 1024, 100.0 * 1024 * 1024);

    Parameter p{detail::padded("p", k), std::max<std::int64_t>(1, std::llround(bytes))};
    Op rd{"rd_" + p.id, OpKind::ParamRead, p.id, 0, {}, Phase::ForwardPass};
    Op up{"up_" + p.id, OpKind::ParamUpdate, p.id, 0, {detail::padded("b", layer)}, Phase::Backprop};
    dag.ops.at(detail::padded("f", layer)).deps.insert(rd.id);
    dag.ops.emplace(rd.id, rd);
    dag.ops.emplace(up.id, up);
    dag.params.emplace(p.id, p);
  }
  return dag;
}

}  // namespace xfersched
