// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hand-built schemas and tool graphs shared across the test binaries. These
// are assembled field by field so the tests never lean on the generator they
// are meant to check.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "envforge/database.hpp"
#include "envforge/domain_graph.hpp"

namespace testsupport {

using envforge::ColumnSpec;
using envforge::ColumnType;
using envforge::DomainSchema;
using envforge::EffectKind;
using envforge::ParamSlot;
using envforge::SlotSource;
using envforge::ToolGraph;
using envforge::ToolSpec;
using envforge::ValueKind;
using envforge::WriteEffect;

// Schema with one "<kind>s" table per kind and a fixed column layout.
inline DomainSchema make_schema(const std::vector<std::string>& kinds,
                                const std::string& domain = "bench") {
  DomainSchema schema;
  schema.domain = domain;
  for (const auto& kind : kinds) {
    const std::string table = kind + "s";
    schema.entity_kinds[kind] = table;
    schema.tables[table] = {{"id", ColumnType::Int},
                            {"status", ColumnType::Text},
                            {"label", ColumnType::Text},
                            {"amount", ColumnType::Real}};
  }
  return schema;
}

inline ParamSlot user_text(const std::string& name) {
  ParamSlot s;
  s.name = name;
  s.value_kind = ValueKind::Text;
  s.source = SlotSource::UserProvided;
  return s;
}

inline ParamSlot user_scalar(const std::string& name) {
  ParamSlot s;
  s.name = name;
  s.value_kind = ValueKind::Scalar;
  s.source = SlotSource::UserProvided;
  return s;
}

inline ParamSlot user_enum(const std::string& name, std::vector<std::string> values) {
  ParamSlot s;
  s.name = name;
  s.value_kind = ValueKind::Enum;
  s.source = SlotSource::UserProvided;
  s.enum_values = std::move(values);
  return s;
}

inline ParamSlot user_id(const std::string& name, const std::string& kind) {
  ParamSlot s;
  s.name = name;
  s.value_kind = ValueKind::EntityId;
  s.source = SlotSource::UserProvided;
  s.entity_kind = kind;
  return s;
}

inline ParamSlot dep_id(const std::string& name, const std::string& kind,
                        const std::string& producer) {
  ParamSlot s = user_id(name, kind);
  s.source = SlotSource::ProducedByTool;
  s.producer = producer;
  return s;
}

// Insert tool with no dependencies; emits one `kind` row.
inline ToolSpec maker(const std::string& id, const std::string& kind, const DomainSchema& schema) {
  ToolSpec t;
  t.id = id;
  t.domain = schema.domain;
  t.inputs = {user_text("label")};
  WriteEffect e;
  e.table = schema.table_of(kind);
  e.kind = EffectKind::Insert;
  e.columns["label"] = ColumnSpec::from_slot("label");
  e.columns["status"] = ColumnSpec::from_constant(std::string("created"));
  t.writes = {e};
  t.output_entities = {kind};
  return t;
}

// Status update keyed by the first input slot; forwards the entity kind.
inline ToolSpec updater(const std::string& id, const std::string& kind,
                        std::vector<ParamSlot> inputs, const std::string& status,
                        const DomainSchema& schema) {
  ToolSpec t;
  t.id = id;
  t.domain = schema.domain;
  t.inputs = std::move(inputs);
  WriteEffect e;
  e.table = schema.table_of(kind);
  e.kind = EffectKind::Update;
  e.columns["status"] = ColumnSpec::from_constant(status);
  e.target_slot = t.inputs.front().name;
  t.writes = {e};
  t.output_entities = {kind};
  return t;
}

// Read-only fetch through a user-provided id.
inline ToolSpec reader(const std::string& id, const std::string& kind,
                       const DomainSchema& schema) {
  ToolSpec t;
  t.id = id;
  t.domain = schema.domain;
  t.inputs = {user_id(kind + "_id", kind)};
  t.reads = {schema.table_of(kind)};
  t.output_entities = {kind};
  return t;
}

// Row removal keyed by a user-provided id.
inline ToolSpec purger(const std::string& id, const std::string& kind,
                       const DomainSchema& schema) {
  ToolSpec t;
  t.id = id;
  t.domain = schema.domain;
  t.inputs = {user_id(kind + "_id", kind)};
  WriteEffect e;
  e.table = schema.table_of(kind);
  e.kind = EffectKind::Delete;
  e.target_slot = kind + "_id";
  t.writes = {e};
  return t;
}

inline ToolGraph graph_of(const DomainSchema& schema, std::vector<ToolSpec> tools,
                          std::vector<std::pair<std::string, std::string>> edges = {}) {
  ToolGraph g;
  g.domain = schema.domain;
  g.schema = schema;
  for (auto& t : tools) g.tools[t.id] = std::move(t);
  for (auto& e : edges) g.edges.insert(std::move(e));
  return g;
}

// a_make -> b_step -> c_close over a single table.
inline ToolGraph line_graph() {
  DomainSchema schema = make_schema({"item"});
  ToolSpec a = maker("a_make", "item", schema);
  ToolSpec b = updater("b_step", "item", {dep_id("item_ref", "item", "a_make")}, "stepped", schema);
  ToolSpec c = updater("c_close", "item", {dep_id("item_ref", "item", "b_step")}, "closed", schema);
  return graph_of(schema, {a, b, c}, {{"a_make", "b_step"}, {"b_step", "c_close"}});
}

// Two interchangeable entry points over one table.
inline ToolGraph two_roots_graph() {
  DomainSchema schema = make_schema({"item"});
  return graph_of(schema,
                  {maker("make_left", "item", schema), maker("make_right", "item", schema)});
}

// Three roots of distinct kinds feeding one hub consumer.
inline ToolGraph star_graph() {
  DomainSchema schema = make_schema({"k1", "k2", "k3"});
  ToolSpec a = maker("a_make", "k1", schema);
  ToolSpec b = maker("b_make", "k2", schema);
  ToolSpec c = maker("c_make", "k3", schema);
  ToolSpec hub = updater("z_merge", "k1",
                         {dep_id("k1_ref", "k1", "a_make"), dep_id("k2_ref", "k2", "b_make"),
                          dep_id("k3_ref", "k3", "c_make")},
                         "merged", schema);
  return graph_of(schema, {a, b, c, hub},
                  {{"a_make", "z_merge"}, {"b_make", "z_merge"}, {"c_make", "z_merge"}});
}

// Complete dependency DAG on four tools: six edges.
inline ToolGraph complete4_graph() {
  DomainSchema schema = make_schema({"item"});
  ToolSpec a = maker("t_a", "item", schema);
  ToolSpec b = updater("t_b", "item", {dep_id("a_ref", "item", "t_a")}, "b_done", schema);
  ToolSpec c = updater("t_c", "item",
                       {dep_id("a_ref", "item", "t_a"), dep_id("b_ref", "item", "t_b")}, "c_done",
                       schema);
  ToolSpec d = updater("t_d", "item",
                       {dep_id("a_ref", "item", "t_a"), dep_id("b_ref", "item", "t_b"),
                        dep_id("c_ref", "item", "t_c")},
                       "d_done", schema);
  return graph_of(schema, {a, b, c, d},
                  {{"t_a", "t_b"},
                   {"t_a", "t_c"},
                   {"t_a", "t_d"},
                   {"t_b", "t_c"},
                   {"t_b", "t_d"},
                   {"t_c", "t_d"}});
}

// Ten tools over three tables: makers, chained updaters, a reader, and a join.
inline ToolGraph ten_tool_graph() {
  DomainSchema schema = make_schema({"alpha", "beta", "gamma"});
  ToolSpec m_alpha = maker("m_alpha", "alpha", schema);
  ToolSpec m_alpha2 = maker("m_alpha2", "alpha", schema);
  ToolSpec m_beta = maker("m_beta", "beta", schema);
  // Gamma rows are minted from an alpha parent.
  ToolSpec m_gamma;
  m_gamma.id = "m_gamma";
  m_gamma.domain = schema.domain;
  m_gamma.inputs = {user_text("label"), dep_id("alpha_ref", "alpha", "m_alpha")};
  {
    WriteEffect e;
    e.table = "gammas";
    e.kind = EffectKind::Insert;
    e.columns["label"] = ColumnSpec::from_slot("label");
    e.columns["status"] = ColumnSpec::from_constant(std::string("created"));
    m_gamma.writes = {e};
  }
  m_gamma.output_entities = {"gamma"};
  ToolSpec u_alpha1 =
      updater("u_alpha1", "alpha", {dep_id("alpha_ref", "alpha", "m_alpha")}, "staged", schema);
  ToolSpec u_alpha2 =
      updater("u_alpha2", "alpha", {dep_id("alpha_ref", "alpha", "u_alpha1")}, "ready", schema);
  ToolSpec u_beta =
      updater("u_beta", "beta", {dep_id("beta_ref", "beta", "m_beta")}, "ready", schema);
  ToolSpec u_gamma =
      updater("u_gamma", "gamma", {dep_id("gamma_ref", "gamma", "m_gamma")}, "ready", schema);
  ToolSpec r_alpha = reader("r_alpha", "alpha", schema);
  ToolSpec f_join = updater(
      "f_join", "alpha",
      {dep_id("alpha_ref", "alpha", "u_alpha2"), dep_id("beta_ref", "beta", "u_beta")}, "joined",
      schema);
  return graph_of(schema,
                  {m_alpha, m_alpha2, m_beta, m_gamma, u_alpha1, u_alpha2, u_beta, u_gamma,
                   r_alpha, f_join},
                  {{"m_alpha", "m_gamma"},
                   {"m_alpha", "u_alpha1"},
                   {"u_alpha1", "u_alpha2"},
                   {"m_beta", "u_beta"},
                   {"m_gamma", "u_gamma"},
                   {"u_alpha2", "f_join"},
                   {"u_beta", "f_join"}});
}

// ten_tool_graph plus a mutually dependent pair that can never be admitted,
// so dependency closures have a nontrivial fixed point.
inline ToolGraph cycle_trap_graph() {
  ToolGraph g = ten_tool_graph();
  const DomainSchema& schema = g.schema;
  g.tools["x_cycle"] =
      updater("x_cycle", "alpha", {dep_id("alpha_ref", "alpha", "y_cycle")}, "x", schema);
  g.tools["y_cycle"] =
      updater("y_cycle", "alpha", {dep_id("alpha_ref", "alpha", "x_cycle")}, "y", schema);
  g.edges.insert({"x_cycle", "y_cycle"});
  g.edges.insert({"y_cycle", "x_cycle"});
  return g;
}

// One executable entry point hidden among seven updaters that need rows no
// fresh database has.
inline ToolGraph needle_graph() {
  DomainSchema schema = make_schema({"widget"});
  std::vector<ToolSpec> tools = {maker("w_make", "widget", schema)};
  for (int i = 1; i <= 7; ++i) {
    tools.push_back(updater("w_update" + std::to_string(i), "widget",
                            {user_id("widget_id", "widget")}, "touched", schema));
  }
  return graph_of(schema, tools);
}

}  // namespace testsupport
