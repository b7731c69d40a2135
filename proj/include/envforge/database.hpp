// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "envforge/domain_graph.hpp"
#include "envforge/value.hpp"

namespace envforge {

using Row = std::map<std::string, Value>;

// Mutable environment database: one integer-keyed row store per schema table.
// Ids are assigned from a per-table monotonic counter so replays are exact.
struct DatabaseState {
  std::map<std::string, std::map<int64_t, Row>> tables;
  std::map<std::string, int64_t> next_id;

  static DatabaseState empty_for(const DomainSchema& schema);

  bool has_row(const std::string& table, int64_t id) const;
  const Row* find_row(const std::string& table, int64_t id) const;
  // Inserts with the next id; unset columns take type defaults.
  int64_t insert_row(const std::string& table, const DomainSchema& schema, Row values);
  void update_row(const std::string& table, int64_t id, const Row& values);
  void delete_row(const std::string& table, int64_t id);

  size_t total_rows() const;
  bool conforms(const DomainSchema& schema, std::string* detail = nullptr) const;

  nlohmann::json to_json() const;
  static DatabaseState from_json(const nlohmann::json& j);

  bool operator==(const DatabaseState&) const = default;
};

Value default_for(ColumnType type);
bool value_matches(ColumnType type, const Value& v);

}  // namespace envforge
