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

// Linear end-to-end transfer model f(d) = latency + per_byte * d, fitted from
// microbenchmark samples, and the small-parameter batching threshold derived
// from it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "xfersched/dag.hpp"
#include "xfersched/json_io.hpp"

namespace xfersched {

struct OpProfile {
  OpId op_id;
  std::vector<std::int64_t> samples_us;
};

/// Minimum observed time across runs per op.
inline std::map<OpId, std::int64_t> estimate_op_times(std::span<const OpProfile> profiles) {
  std::map<OpId, std::int64_t> out;
  for (const auto& p : profiles) {
    if (p.samples_us.empty()) throw Error(ErrorCode::EmptyProfile, "no samples for op '" + p.op_id + "'");
    const auto m = *std::min_element(p.samples_us.begin(), p.samples_us.end());
    auto [it, inserted] = out.emplace(p.op_id, m);
    if (!inserted) it->second = std::min(it->second, m);
  }
  return out;
}

struct NetworkModel {
  double latency_us = 0.0;
  double per_byte_us = 1e-3;

  bool operator==(const NetworkModel&) const = default;
};

inline double p2p_time(const NetworkModel& model, double size_bytes) {
  return model.latency_us + model.per_byte_us * size_bytes;
}

struct Measurement {
  double size_bytes = 0.0;
  double observed_time_us = 0.0;
};

inline constexpr double kMinPerByteUs = 1e-12;

struct ModelFit {
  NetworkModel model;
  bool slope_clamped = false;
  bool intercept_clamped = false;
};

/// Ordinary least squares over (size, time).
inline ModelFit fit_network_model(std::span<const Measurement> samples) {
  if (samples.size() < 2) throw Error(ErrorCode::DegenerateInput, "need at least two measurements");
  long double mx = 0, my = 0;
  for (const auto& m : samples) {
    mx += m.size_bytes;
    my += m.observed_time_us;
  }
  mx /= samples.size();
  my /= samples.size();
  long double sxx = 0, sxy = 0;
  for (const auto& m : samples) {
    const long double dx = m.size_bytes - mx;
    sxx += dx * dx;
    sxy += dx * (m.observed_time_us - my);
  }
  if (sxx == 0) throw Error(ErrorCode::DegenerateInput, "all measurements have the same size");

  ModelFit fit;
  long double slope = sxy / sxx;
  if (!(slope > 0)) {
    slope = kMinPerByteUs;
    fit.slope_clamped = true;
  }
  long double intercept = my - slope * mx;
  if (intercept < 0) {
    intercept = 0;
    fit.intercept_clamped = true;
  }
  fit.model = {static_cast<double>(intercept), static_cast<double>(slope)};
  return fit;
}

/// f(2x) / (2 f(x)) > 0.8, evaluated as 2*b*x > 3*a to avoid dividing.
inline bool batching_ratio_exceeds(const NetworkModel& model, std::int64_t x) {
  const long double lhs = 2.0L * model.per_byte_us * static_cast<long double>(x);
  const long double rhs = 3.0L * model.latency_us;
  return lhs > rhs;
}

/// Smallest x >= 1 with f(2x) / (2 f(x)) > 0.8. For the linear model this is
/// the first integer strictly above 1.5 * latency / per_byte.
inline std::int64_t batching_threshold(const NetworkModel& model) {
  if (model.latency_us <= 0) return 1;
  if (!(model.per_byte_us > 0)) throw Error(ErrorCode::InvalidArgument, "per_byte_us must be positive");
  const long double bound = 1.5L * model.latency_us / model.per_byte_us;
  constexpr auto kMax = std::numeric_limits<std::int64_t>::max() / 4;
  if (bound >= static_cast<long double>(kMax)) return kMax;
  auto x = static_cast<std::int64_t>(std::floor(bound)) + 1;
  while (x > 1 && batching_ratio_exceeds(model, x - 1)) --x;
  while (!batching_ratio_exceeds(model, x)) ++x;
  return x;
}

// ----------------------------------------------------------------------------
// Formats: measurement CSV "size_bytes,observed_time_us" and model JSON.

inline std::vector<Measurement> parse_measurements_csv(const std::string& text, const std::string& source) {
  std::vector<Measurement> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (lineno == 1 && line.find("size_bytes") != std::string::npos) continue;
    const auto comma = line.find(',');
    auto fail = [&](const std::string& why) {
      return Error(ErrorCode::Parse, source + ":" + std::to_string(lineno) + ": " + why + ": '" + line + "'");
    };
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw fail("expected two comma-separated columns");
    Measurement m;
    try {
      std::size_t used = 0;
      const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
      m.size_bytes = std::stod(a, &used);
      if (a.find_first_not_of(" \t", used) != std::string::npos) throw fail("trailing characters");
      m.observed_time_us = std::stod(b, &used);
      if (b.find_first_not_of(" \t", used) != std::string::npos) throw fail("trailing characters");
    } catch (const std::logic_error&) {
      throw fail("not a number");
    }
    if (!(m.size_bytes >= 0) || !(m.observed_time_us > 0)) throw fail("values must be non-negative size and positive time");
    out.push_back(m);
  }
  return out;
}

inline json model_to_json(const NetworkModel& m) {
  return {{"latency_us", m.latency_us}, {"per_byte_us", m.per_byte_us}};
}

inline NetworkModel model_from_json(const json& j) {
  detail::check_fields(j, "model", {"latency_us", "per_byte_us"});
  NetworkModel m{detail::get_field<double>(j, "latency_us", "model"),
                 detail::get_field<double>(j, "per_byte_us", "model")};
  if (!(m.latency_us >= 0) || !(m.per_byte_us > 0))
    throw Error(ErrorCode::Parse, "model: latency_us must be >= 0 and per_byte_us > 0");
  return m;
}

}  // namespace xfersched
