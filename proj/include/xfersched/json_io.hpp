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

// Strict JSON helpers shared by every on-disk format. Unknown fields are
// rejected; missing required fields are parse errors.

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "json.hpp"
#include "xfersched/error.hpp"

namespace xfersched {

using json = nlohmann::json;

namespace detail {

inline void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, where + ": expected an object");
}

inline void check_fields(const json& j, const std::string& where,
                         std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional = {}) {
  require_object(j, where);
  for (const char* key : required)
    if (!j.contains(key)) throw Error(ErrorCode::Parse, where + ": missing field '" + key + "'");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : required) known |= it.key() == key;
    for (const char* key : optional) known |= it.key() == key;
    if (!known) throw Error(ErrorCode::Parse, where + ": unknown field '" + it.key() + "'");
  }
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, where + ": field '" + key + "': " + e.what());
  }
}

}  // namespace detail

inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, source + ": " + e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out << text;
}

inline json read_json_file(const std::string& path) {
  return parse_json_text(read_text_file(path), path);
}

/// Integer microseconds at reporting boundaries, rounded half up.
inline std::int64_t report_us(double t) { return static_cast<std::int64_t>(std::floor(t + 0.5)); }

}  // namespace xfersched
