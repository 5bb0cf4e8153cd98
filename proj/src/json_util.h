// Copyright 2026 The cachemw Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Strict accessors for scenario sections: unknown keys and type mismatches
// are configuration errors.

#include <initializer_list>
#include <string>
#include <type_traits>

#include <json.hpp>

#include "cachemw/errors.h"

namespace cachemw::detail {

inline void require_object(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
}

inline void check_keys(const nlohmann::json& j, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  require_object(j, where);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.template get<std::int64_t>() < 0))
      throw ConfigError(where + "." + key + " must be a non-negative integer");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

template <typename T>
T get_required(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("missing " + where + "." + key);
  return get_or<T>(j, key, T{}, where);
}

}  // namespace cachemw::detail
