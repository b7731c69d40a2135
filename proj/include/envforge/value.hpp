// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include <json.hpp>

namespace envforge {

// Cell value in a database row or a tool-call argument.
using Value = std::variant<int64_t, double, std::string, bool>;

inline nlohmann::json value_to_json(const Value& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

inline Value value_from_json(const nlohmann::json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw std::invalid_argument("value_from_json: unsupported json type");
}

inline std::string value_to_string(const Value& v) {
  if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
  return value_to_json(v).dump();
}

}  // namespace envforge
