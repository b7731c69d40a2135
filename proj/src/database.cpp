// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "envforge/database.hpp"

#include <stdexcept>

namespace envforge {

Value default_for(ColumnType type) {
  switch (type) {
    case ColumnType::Int: return int64_t{0};
    case ColumnType::Real: return 0.0;
    case ColumnType::Text: return std::string();
    case ColumnType::Bool: return false;
  }
  return int64_t{0};
}

bool value_matches(ColumnType type, const Value& v) {
  switch (type) {
    case ColumnType::Int: return std::holds_alternative<int64_t>(v);
    case ColumnType::Real:
      // Integer literals are accepted into real columns (normalized on insert).
      return std::holds_alternative<double>(v) || std::holds_alternative<int64_t>(v);
    case ColumnType::Text: return std::holds_alternative<std::string>(v);
    case ColumnType::Bool: return std::holds_alternative<bool>(v);
  }
  return false;
}

DatabaseState DatabaseState::empty_for(const DomainSchema& schema) {
  DatabaseState db;
  for (const auto& [table, cols] : schema.tables) {
    (void)cols;
    db.tables[table];
    db.next_id[table] = 1;
  }
  return db;
}

bool DatabaseState::has_row(const std::string& table, int64_t id) const {
  auto it = tables.find(table);
  return it != tables.end() && it->second.count(id) > 0;
}

const Row* DatabaseState::find_row(const std::string& table, int64_t id) const {
  auto it = tables.find(table);
  if (it == tables.end()) return nullptr;
  auto rit = it->second.find(id);
  return rit == it->second.end() ? nullptr : &rit->second;
}

int64_t DatabaseState::insert_row(const std::string& table, const DomainSchema& schema,
                                  Row values) {
  auto sit = schema.tables.find(table);
  if (sit == schema.tables.end()) throw std::invalid_argument("insert into unknown table: " + table);
  const int64_t id = next_id[table]++;
  Row row;
  for (const auto& col : sit->second) {
    auto vit = values.find(col.name);
    if (col.name == "id") {
      row["id"] = id;
    } else if (vit == values.end()) {
      row[col.name] = default_for(col.type);
    } else {
      Value v = vit->second;
      if (col.type == ColumnType::Real && std::holds_alternative<int64_t>(v)) {
        v = static_cast<double>(std::get<int64_t>(v));
      }
      if (!value_matches(col.type, v)) {
        throw std::invalid_argument("type mismatch for " + table + "." + col.name);
      }
      row[col.name] = v;
    }
  }
  tables[table][id] = std::move(row);
  return id;
}

void DatabaseState::update_row(const std::string& table, int64_t id, const Row& values) {
  auto it = tables.find(table);
  if (it == tables.end() || !it->second.count(id)) {
    throw std::logic_error("update of missing row " + table + "/" + std::to_string(id));
  }
  Row& row = it->second[id];
  for (const auto& [col, v] : values) {
    Value norm = v;
    if (row.count(col) && std::holds_alternative<double>(row[col]) &&
        std::holds_alternative<int64_t>(norm)) {
      norm = static_cast<double>(std::get<int64_t>(norm));
    }
    row[col] = norm;
  }
}

void DatabaseState::delete_row(const std::string& table, int64_t id) {
  auto it = tables.find(table);
  if (it == tables.end() || it->second.erase(id) == 0) {
    throw std::logic_error("delete of missing row " + table + "/" + std::to_string(id));
  }
}

size_t DatabaseState::total_rows() const {
  size_t n = 0;
  for (const auto& [table, rows] : tables) {
    (void)table;
    n += rows.size();
  }
  return n;
}

bool DatabaseState::conforms(const DomainSchema& schema, std::string* detail) const {
  for (const auto& [table, rows] : tables) {
    auto sit = schema.tables.find(table);
    if (sit == schema.tables.end()) {
      if (detail) *detail = "unknown table " + table;
      return false;
    }
    for (const auto& [id, row] : rows) {
      for (const auto& col : sit->second) {
        auto vit = row.find(col.name);
        if (vit == row.end() || !value_matches(col.type, vit->second)) {
          if (detail) {
            *detail = "bad cell " + table + "/" + std::to_string(id) + "." + col.name;
          }
          return false;
        }
      }
      auto idit = row.find("id");
      if (idit == row.end() || std::get<int64_t>(idit->second) != id) {
        if (detail) *detail = "row key/id mismatch in " + table;
        return false;
      }
    }
  }
  return true;
}

nlohmann::json DatabaseState::to_json() const {
  nlohmann::json jt = nlohmann::json::object();
  for (const auto& [table, rows] : tables) {
    nlohmann::json jrows = nlohmann::json::object();
    for (const auto& [id, row] : rows) {
      nlohmann::json jr = nlohmann::json::object();
      for (const auto& [col, v] : row) jr[col] = value_to_json(v);
      jrows[std::to_string(id)] = jr;
    }
    jt[table] = jrows;
  }
  return {{"tables", jt}, {"next_id", next_id}};
}

DatabaseState DatabaseState::from_json(const nlohmann::json& j) {
  DatabaseState db;
  for (const auto& [table, rows] : j.at("tables").items()) {
    auto& t = db.tables[table];
    for (const auto& [id, row] : rows.items()) {
      Row r;
      for (const auto& [col, v] : row.items()) r[col] = value_from_json(v);
      t[std::stoll(id)] = std::move(r);
    }
  }
  db.next_id = j.at("next_id").get<std::map<std::string, int64_t>>();
  return db;
}

}  // namespace envforge
