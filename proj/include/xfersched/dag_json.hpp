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

// DAG schema:
//   { "ops":    [{"id", "kind", "param", "duration_us", "deps", "phase"}],
//     "params": [{"id", "size_bytes"}] }
// kind is "compute" | "param_update" | "param_read"; phase is
// "forward" | "backprop". "param" is required for markers and must be absent
// (or null) for compute ops.

#include <string>

#include "xfersched/dag.hpp"
#include "xfersched/json_io.hpp"

namespace xfersched {

inline const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::Compute: return "compute";
    case OpKind::ParamUpdate: return "param_update";
    case OpKind::ParamRead: return "param_read";
  }
  return "compute";
}

inline const char* to_string(Phase phase) {
  return phase == Phase::ForwardPass ? "forward" : "backprop";
}

inline OpKind parse_op_kind(const std::string& s) {
  if (s == "compute") return OpKind::Compute;
  if (s == "param_update") return OpKind::ParamUpdate;
  if (s == "param_read") return OpKind::ParamRead;
  throw Error(ErrorCode::Parse, "unknown op kind '" + s + "'");
}

inline Phase parse_phase(const std::string& s) {
  if (s == "forward") return Phase::ForwardPass;
  if (s == "backprop") return Phase::Backprop;
  throw Error(ErrorCode::Parse, "unknown phase '" + s + "'");
}

inline json dag_to_json(const DataflowDag& dag) {
  json ops = json::array();
  for (const auto& [id, op] : dag.ops) {
    json j;
    j["id"] = op.id;
    j["kind"] = to_string(op.kind);
    if (op.is_marker()) j["param"] = op.param;
    j["duration_us"] = op.duration_us;
    j["deps"] = json(std::vector<std::string>(op.deps.begin(), op.deps.end()));
    j["phase"] = to_string(op.phase);
    ops.push_back(std::move(j));
  }
  json params = json::array();
  for (const auto& [id, p] : dag.params) params.push_back({{"id", p.id}, {"size_bytes", p.size_bytes}});
  return {{"ops", std::move(ops)}, {"params", std::move(params)}};
}

inline DataflowDag dag_from_json(const json& j) {
  detail::check_fields(j, "dag", {"ops", "params"});
  if (!j["ops"].is_array() || !j["params"].is_array())
    throw Error(ErrorCode::Parse, "dag: 'ops' and 'params' must be arrays");

  DataflowDag dag;
  std::size_t n = 0;
  for (const auto& jo : j["ops"]) {
    const std::string where = "ops[" + std::to_string(n++) + "]";
    detail::check_fields(jo, where, {"id", "kind", "duration_us", "deps", "phase"}, {"param"});
    Op op;
    op.id = detail::get_field<std::string>(jo, "id", where);
    op.kind = parse_op_kind(detail::get_field<std::string>(jo, "kind", where));
    op.duration_us = detail::get_field<std::int64_t>(jo, "duration_us", where);
    for (const auto& d : detail::get_field<std::vector<std::string>>(jo, "deps", where)) op.deps.insert(d);
    op.phase = parse_phase(detail::get_field<std::string>(jo, "phase", where));
    const bool has_param = jo.contains("param") && !jo["param"].is_null();
    if (op.is_marker()) {
      if (!has_param) throw Error(ErrorCode::Parse, where + ": marker op '" + op.id + "' needs 'param'");
      op.param = detail::get_field<std::string>(jo, "param", where);
    } else if (has_param) {
      throw Error(ErrorCode::Parse, where + ": compute op '" + op.id + "' must not carry 'param'");
    }
    const OpId id = op.id;
    if (!dag.ops.emplace(id, std::move(op)).second)
      throw Error(ErrorCode::Parse, where + ": duplicate op id '" + id + "'");
  }
  n = 0;
  for (const auto& jp : j["params"]) {
    const std::string where = "params[" + std::to_string(n++) + "]";
    detail::check_fields(jp, where, {"id", "size_bytes"});
    Parameter p{detail::get_field<std::string>(jp, "id", where),
                detail::get_field<std::int64_t>(jp, "size_bytes", where)};
    const ParamId id = p.id;
    if (!dag.params.emplace(id, std::move(p)).second)
      throw Error(ErrorCode::Parse, where + ": duplicate param id '" + id + "'");
  }
  return dag;
}

inline DataflowDag load_dag(const std::string& path) { return dag_from_json(read_json_file(path)); }

}  // namespace xfersched
