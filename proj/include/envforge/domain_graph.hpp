// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Procedural domain generator: tool sets, database schemas, and the verified
// tool dependency graph. Tools are synthesized from per-entity template
// families (create/get/update/...), and edge density is reached by rewiring
// entity-id parameter slots from user-provided to produced-by-tool sources.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "envforge/value.hpp"

namespace envforge {

enum class ValueKind { EntityId, Scalar, Enum, Text };
enum class SlotSource { UserProvided, ProducedByTool, Constant };
enum class EffectKind { Insert, Update, Delete };
enum class ColumnType { Int, Real, Text, Bool };

std::string to_string(ValueKind k);
std::string to_string(SlotSource s);
std::string to_string(EffectKind e);
std::string to_string(ColumnType t);

// One input parameter of a tool.
struct ParamSlot {
  std::string name;
  ValueKind value_kind = ValueKind::Text;
  SlotSource source = SlotSource::UserProvided;
  std::string producer;                  // tool id, when source == ProducedByTool
  std::string entity_kind;               // for EntityId slots
  std::vector<std::string> enum_values;  // nonempty for Enum slots
  Value constant = int64_t{0};           // for Constant source

  bool operator==(const ParamSlot&) const = default;
};

// How a write effect fills one column: either copied from an input slot or a
// fixed literal.
struct ColumnSpec {
  enum class From { Slot, Constant } from = From::Constant;
  std::string slot;
  Value constant = int64_t{0};

  static ColumnSpec from_slot(std::string s) {
    ColumnSpec c;
    c.from = From::Slot;
    c.slot = std::move(s);
    return c;
  }
  static ColumnSpec from_constant(Value v) {
    ColumnSpec c;
    c.from = From::Constant;
    c.constant = std::move(v);
    return c;
  }
  bool operator==(const ColumnSpec&) const = default;
};

struct WriteEffect {
  std::string table;
  EffectKind kind = EffectKind::Insert;
  // Row columns to set (insert/update). Ignored for delete.
  std::map<std::string, ColumnSpec> columns;
  // Input slot naming the target row id (update/delete).
  std::string target_slot;

  bool operator==(const WriteEffect&) const = default;
};

struct ToolSpec {
  std::string id;
  std::string domain;
  std::vector<ParamSlot> inputs;
  std::vector<std::string> reads;  // table names
  std::vector<WriteEffect> writes;
  std::vector<std::string> output_entities;  // entity kinds produced

  const ParamSlot* find_slot(const std::string& name) const;
  bool operator==(const ToolSpec&) const = default;
};

struct Column {
  std::string name;
  ColumnType type = ColumnType::Text;
  bool operator==(const Column&) const = default;
};

struct DomainSchema {
  std::string domain;
  std::map<std::string, std::vector<Column>> tables;
  std::map<std::string, std::string> entity_kinds;  // kind -> owning table

  const std::string& table_of(const std::string& kind) const;
  bool operator==(const DomainSchema&) const = default;
};

// Directed tool dependency graph over a domain. An edge (a, b) means some
// input slot of b is produced by a; edges always point from producer to
// consumer and form a DAG.
struct ToolGraph {
  std::string domain;
  std::map<std::string, ToolSpec> tools;  // node id -> spec
  std::set<std::pair<std::string, std::string>> edges;
  DomainSchema schema;

  size_t node_count() const { return tools.size(); }
  bool has_edge(const std::string& a, const std::string& b) const {
    return edges.count({a, b}) > 0;
  }
  // Possible-edge density for a DAG: |edges| / (n*(n-1)/2).
  double density() const;
  bool is_dag() const;
  // Topological order (Kahn, lexicographic tie-break); empty if cyclic.
  std::vector<std::string> topo_order() const;
  // Producers whose output_entities contain the given kind.
  std::vector<std::string> producers_of(const std::string& kind) const;

  bool operator==(const ToolGraph&) const = default;
};

struct DomainGenConfig {
  std::string style = "retail";
  int tool_count = 64;
  int table_count = 8;
  double edge_density = 0.08;
  // Extra convertible entity-reference slots per tool; -1 picks a value large
  // enough for the requested density.
  int aux_ref_slots = -1;
};

struct ToolValidation {
  std::string tool_id;
  bool executable = false;
  bool edges_consistent = false;
  std::string detail;

  bool ok() const { return executable && edges_consistent; }
};

struct ValidationReport {
  std::vector<ToolValidation> entries;
  bool pass = true;

  double pass_rate() const;
  nlohmann::json to_json() const;
};

// Styles selectable via DomainGenConfig::style; at least 20 distinct domains.
const std::vector<std::string>& domain_styles();

// Deterministic generation: identical (seed, config) yields identical graphs.
std::pair<DomainSchema, ToolGraph> generate_domain(uint64_t seed, const DomainGenConfig& config);

// Per-tool executability (against a minimally instantiated database) and
// dependency-edge consistency. Failures are report entries, never exceptions.
ValidationReport validate_toolset(const ToolGraph& graph);

// JSON round-trip with schema_version and stable key ordering.
nlohmann::json graph_to_json(const ToolGraph& graph);
ToolGraph graph_from_json(const nlohmann::json& j);

}  // namespace envforge
