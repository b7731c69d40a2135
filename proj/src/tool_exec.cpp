// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "envforge/tool_exec.hpp"

#include <algorithm>
#include <stdexcept>

#include "envforge/errors.hpp"

namespace envforge {

namespace {

constexpr size_t kScanLimit = 5;  // rows a scan read returns at most

// First enum input whose name is a column of `table`; scans filter on it.
const ParamSlot* scan_filter_slot(const ToolSpec& spec, const DomainSchema& schema,
                                  const std::string& table) {
  const auto& cols = schema.tables.at(table);
  for (const auto& slot : spec.inputs) {
    if (slot.value_kind != ValueKind::Enum) continue;
    for (const auto& c : cols) {
      if (c.name == slot.name) return &slot;
    }
  }
  return nullptr;
}

// First entity-id input owning `table`; its row is the target of a read.
const ParamSlot* targeted_read_slot(const ToolSpec& spec, const DomainSchema& schema,
                                    const std::string& table) {
  for (const auto& slot : spec.inputs) {
    if (slot.value_kind == ValueKind::EntityId &&
        schema.entity_kinds.count(slot.entity_kind) &&
        schema.entity_kinds.at(slot.entity_kind) == table) {
      return &slot;
    }
  }
  return nullptr;
}

nlohmann::json row_to_json(const std::string& table, int64_t id, const Row& row) {
  nlohmann::json cells = nlohmann::json::object();
  for (const auto& [col, v] : row) cells[col] = value_to_json(v);
  return {{"table", table}, {"id", id}, {"row", cells}};
}

ToolResult fail(ToolResult::Status status, const std::string& tool, std::string error) {
  ToolResult r;
  r.status = status;
  r.tool = tool;
  r.error = std::move(error);
  return r;
}

}  // namespace

std::string to_string(ToolResult::Status s) {
  switch (s) {
    case ToolResult::Status::Ok: return "ok";
    case ToolResult::Status::MissingArg: return "missing-arg";
    case ToolResult::Status::MissingEntity: return "missing-entity";
    case ToolResult::Status::PreconditionFailed: return "precondition-failed";
    case ToolResult::Status::TransientFailure: return "transient-failure";
  }
  return "?";
}

nlohmann::json ToolCall::to_json() const {
  nlohmann::json a = nlohmann::json::object();
  for (const auto& [k, v] : args) a[k] = value_to_json(v);
  return {{"tool", tool}, {"args", a}};
}

ToolCall ToolCall::from_json(const nlohmann::json& j) {
  ToolCall c;
  c.tool = j.at("tool").get<std::string>();
  for (const auto& [k, v] : j.at("args").items()) c.args[k] = value_from_json(v);
  return c;
}

nlohmann::json ToolResult::to_json() const {
  return {{"status", to_string(status)},
          {"tool", tool},
          {"error", error},
          {"payload", payload},
          {"produced", produced}};
}

nlohmann::json ToolChain::to_json() const { return {{"tools", tools}, {"domain", domain}}; }

ToolChain ToolChain::from_json(const nlohmann::json& j) {
  return {j.at("tools").get<std::vector<std::string>>(), j.at("domain").get<std::string>()};
}

ToolResult apply_tool(DatabaseState& db, const ToolCall& call, const ToolGraph& graph) {
  auto tit = graph.tools.find(call.tool);
  if (tit == graph.tools.end()) throw std::invalid_argument("unknown tool: " + call.tool);
  const ToolSpec& spec = tit->second;
  const DomainSchema& schema = graph.schema;

  // Resolve and type-check every input before touching the database.
  std::map<std::string, Value> resolved;
  for (const auto& slot : spec.inputs) {
    if (slot.source == SlotSource::Constant) {
      resolved[slot.name] = slot.constant;
      continue;
    }
    auto ait = call.args.find(slot.name);
    if (ait == call.args.end()) {
      return fail(ToolResult::Status::MissingArg, call.tool, "missing argument: " + slot.name);
    }
    const Value& v = ait->second;
    switch (slot.value_kind) {
      case ValueKind::EntityId:
        if (!std::holds_alternative<int64_t>(v)) {
          return fail(ToolResult::Status::MissingArg, call.tool,
                      "argument '" + slot.name + "' must be an entity id");
        }
        break;
      case ValueKind::Scalar:
        if (!std::holds_alternative<int64_t>(v) && !std::holds_alternative<double>(v)) {
          return fail(ToolResult::Status::MissingArg, call.tool,
                      "argument '" + slot.name + "' must be numeric");
        }
        break;
      case ValueKind::Text:
        if (!std::holds_alternative<std::string>(v)) {
          return fail(ToolResult::Status::MissingArg, call.tool,
                      "argument '" + slot.name + "' must be text");
        }
        break;
      case ValueKind::Enum: {
        if (!std::holds_alternative<std::string>(v) ||
            std::find(slot.enum_values.begin(), slot.enum_values.end(),
                      std::get<std::string>(v)) == slot.enum_values.end()) {
          return fail(ToolResult::Status::PreconditionFailed, call.tool,
                      "argument '" + slot.name + "' not in the allowed set");
        }
        break;
      }
    }
    resolved[slot.name] = v;
  }

  // Referenced entities must exist.
  for (const auto& slot : spec.inputs) {
    if (slot.value_kind != ValueKind::EntityId || slot.source == SlotSource::Constant) continue;
    if (!schema.entity_kinds.count(slot.entity_kind)) {
      throw std::invalid_argument("tool " + call.tool + " references unknown kind " +
                                  slot.entity_kind);
    }
    const std::string& table = schema.entity_kinds.at(slot.entity_kind);
    const int64_t id = std::get<int64_t>(resolved.at(slot.name));
    if (!db.has_row(table, id)) {
      return fail(ToolResult::Status::MissingEntity, call.tool,
                  "no " + slot.entity_kind + " with id " + std::to_string(id));
    }
  }

  ToolResult result;
  result.tool = call.tool;
  nlohmann::json read_rows = nlohmann::json::array();
  std::map<std::string, std::vector<int64_t>> read_ids;

  // Reads: targeted when an entity-id input owns the table, else a scan
  // filtered by a matching enum argument. An empty scan is a failed
  // precondition and leaves the database untouched.
  for (const auto& table : spec.reads) {
    if (!schema.tables.count(table)) {
      throw std::invalid_argument("tool " + call.tool + " reads unknown table " + table);
    }
    if (const ParamSlot* slot = targeted_read_slot(spec, schema, table)) {
      const int64_t id = std::get<int64_t>(resolved.at(slot->name));
      read_rows.push_back(row_to_json(table, id, *db.find_row(table, id)));
      read_ids[table].push_back(id);
      continue;
    }
    const ParamSlot* filter = scan_filter_slot(spec, schema, table);
    size_t matched = 0;
    for (const auto& [id, row] : db.tables.at(table)) {
      if (filter != nullptr) {
        auto cit = row.find(filter->name);
        if (cit == row.end() || !(cit->second == resolved.at(filter->name))) continue;
      }
      if (matched < kScanLimit) {
        read_rows.push_back(row_to_json(table, id, row));
        read_ids[table].push_back(id);
      }
      ++matched;
    }
    if (matched == 0) {
      std::string detail = "no rows in " + table;
      if (filter != nullptr) {
        detail += " with " + filter->name + " = " + value_to_string(resolved.at(filter->name));
      }
      return fail(ToolResult::Status::PreconditionFailed, call.tool, detail);
    }
  }

  // All checks passed; apply the write effects.
  std::map<std::string, std::vector<int64_t>> inserted, updated, deleted;
  for (const auto& effect : spec.writes) {
    Row values;
    for (const auto& [col, cspec] : effect.columns) {
      if (cspec.from == ColumnSpec::From::Slot) {
        auto rit = resolved.find(cspec.slot);
        if (rit == resolved.end()) {
          throw std::invalid_argument("write column " + col + " references unknown slot " +
                                      cspec.slot);
        }
        values[col] = rit->second;
      } else {
        values[col] = cspec.constant;
      }
    }
    switch (effect.kind) {
      case EffectKind::Insert:
        inserted[effect.table].push_back(db.insert_row(effect.table, schema, std::move(values)));
        break;
      case EffectKind::Update: {
        const int64_t id = std::get<int64_t>(resolved.at(effect.target_slot));
        db.update_row(effect.table, id, values);
        updated[effect.table].push_back(id);
        break;
      }
      case EffectKind::Delete: {
        const int64_t id = std::get<int64_t>(resolved.at(effect.target_slot));
        db.delete_row(effect.table, id);
        deleted[effect.table].push_back(id);
        break;
      }
    }
  }

  // Bind outputs: freshly inserted rows win, then update targets, then reads.
  for (const auto& kind : spec.output_entities) {
    if (!schema.entity_kinds.count(kind)) continue;
    const std::string& table = schema.entity_kinds.at(kind);
    if (inserted.count(table)) {
      result.produced[kind] = inserted[table].back();
    } else if (updated.count(table)) {
      result.produced[kind] = updated[table].back();
    } else if (read_ids.count(table) && !read_ids[table].empty()) {
      result.produced[kind] = read_ids[table].front();
    }
  }

  result.payload["read_rows"] = read_rows;
  result.payload["inserted"] = inserted;
  result.payload["updated"] = updated;
  result.payload["deleted"] = deleted;
  nlohmann::json prod = nlohmann::json::object();
  for (const auto& [k, id] : result.produced) prod[k] = id;
  result.payload["produced"] = prod;
  return result;
}

std::pair<ToolResult, DatabaseState> execute_tool(const DatabaseState& db, const ToolCall& call,
                                                  const ToolGraph& graph) {
  DatabaseState next = db;
  ToolResult r = apply_tool(next, call, graph);
  return {std::move(r), std::move(next)};
}

namespace {

// Smallest id currently present, or nullopt for an empty table.
std::optional<int64_t> smallest_id(const DatabaseState& db, const std::string& table) {
  auto it = db.tables.find(table);
  if (it == db.tables.end() || it->second.empty()) return std::nullopt;
  return it->second.begin()->first;
}

}  // namespace

ReplayOutcome replay_chain(const ToolChain& chain, const ToolGraph& graph, DatabaseState& db,
                           ReplayLog* log) {
  const DomainSchema& schema = graph.schema;
  // Latest produced id per (tool, kind) and per kind overall.
  std::map<std::string, std::map<std::string, int64_t>> produced_by_tool;
  std::map<std::string, int64_t> latest_by_kind;

  auto need_row = [](size_t step, const std::string& table, std::string col, Value val,
                     std::string detail) {
    ReplayOutcome o;
    o.kind = ReplayOutcome::Kind::NeedRow;
    o.table = table;
    o.filter_column = std::move(col);
    o.filter_value = std::move(val);
    o.failed_step = step;
    o.detail = std::move(detail);
    return o;
  };
  auto hard_fail = [](size_t step, std::string detail) {
    ReplayOutcome o;
    o.kind = ReplayOutcome::Kind::HardFail;
    o.failed_step = step;
    o.detail = std::move(detail);
    return o;
  };

  for (size_t step = 0; step < chain.tools.size(); ++step) {
    auto tit = graph.tools.find(chain.tools[step]);
    if (tit == graph.tools.end()) {
      return hard_fail(step, "unknown tool: " + chain.tools[step]);
    }
    const ToolSpec& spec = tit->second;

    // Bind arguments. Entity references climb a fixed ladder — the slot's
    // producer's latest output, any latest output of the kind, the smallest
    // existing row — and every rung is presence-checked so intermediate
    // deletes cannot leave a dangling binding.
    ToolCall call;
    call.tool = spec.id;
    for (const auto& slot : spec.inputs) {
      if (slot.source == SlotSource::Constant) continue;
      switch (slot.value_kind) {
        case ValueKind::EntityId: {
          if (!schema.entity_kinds.count(slot.entity_kind)) {
            return hard_fail(step, "unknown entity kind: " + slot.entity_kind);
          }
          const std::string& table = schema.entity_kinds.at(slot.entity_kind);
          std::optional<int64_t> id;
          if (slot.source == SlotSource::ProducedByTool) {
            auto pit = produced_by_tool.find(slot.producer);
            if (pit != produced_by_tool.end()) {
              auto kit = pit->second.find(slot.entity_kind);
              if (kit != pit->second.end() && db.has_row(table, kit->second)) id = kit->second;
            }
            if (!id) {
              auto kit = latest_by_kind.find(slot.entity_kind);
              if (kit != latest_by_kind.end() && db.has_row(table, kit->second)) id = kit->second;
            }
          }
          if (!id) id = smallest_id(db, table);
          if (!id) {
            return need_row(step, table, "", int64_t{0},
                            "no " + slot.entity_kind + " row for slot " + slot.name);
          }
          call.args[slot.name] = *id;
          break;
        }
        case ValueKind::Scalar:
          call.args[slot.name] = int64_t{1};
          break;
        case ValueKind::Text:
          call.args[slot.name] = "v_" + slot.name;
          break;
        case ValueKind::Enum:
          if (slot.enum_values.empty()) {
            return hard_fail(step, "unsatisfiable-slot: enum '" + slot.name + "' of " + spec.id +
                                       " has no allowed values");
          }
          call.args[slot.name] = slot.enum_values.front();
          break;
      }
    }

    // Scan reads need at least one matching row; report the filter so the
    // caller can synthesize one.
    for (const auto& table : spec.reads) {
      if (!schema.tables.count(table)) return hard_fail(step, "read of unknown table " + table);
      if (targeted_read_slot(spec, schema, table) != nullptr) continue;
      const ParamSlot* filter = scan_filter_slot(spec, schema, table);
      bool any = false;
      auto dit = db.tables.find(table);
      if (dit != db.tables.end()) {
        for (const auto& [id, row] : dit->second) {
          (void)id;
          if (filter == nullptr) {
            any = true;
            break;
          }
          auto cit = row.find(filter->name);
          if (cit != row.end() && cit->second == call.args.at(filter->name)) {
            any = true;
            break;
          }
        }
      }
      if (!any) {
        if (filter == nullptr) {
          return need_row(step, table, "", int64_t{0}, "scan of empty table " + table);
        }
        return need_row(step, table, filter->name, call.args.at(filter->name),
                        "no match in " + table);
      }
    }

    ToolResult result = apply_tool(db, call, graph);
    if (log != nullptr) {
      log->calls.push_back(call);
      log->results.push_back(result);
    }
    if (!result.ok()) {
      return hard_fail(step, spec.id + ": " + to_string(result.status) + " (" + result.error + ")");
    }
    for (const auto& [kind, id] : result.produced) {
      produced_by_tool[spec.id][kind] = id;
      latest_by_kind[kind] = id;
    }
  }
  return ReplayOutcome{};
}

void augment_chain_db(const ToolChain& chain, const ToolGraph& graph, DatabaseState& db,
                      Rng& rng) {
  const size_t guard = 16 * chain.tools.size() + 32;
  for (size_t iter = 0; iter < guard; ++iter) {
    DatabaseState probe = db;
    ReplayOutcome outcome = replay_chain(chain, graph, probe);
    switch (outcome.kind) {
      case ReplayOutcome::Kind::Ok:
        return;
      case ReplayOutcome::Kind::NeedRow: {
        Row row;
        row["status"] = std::string("open");
        row["label"] = "seed_" + std::to_string(rng.uniform_int(100, 999));
        if (!outcome.filter_column.empty()) row[outcome.filter_column] = outcome.filter_value;
        db.insert_row(outcome.table, graph.schema, std::move(row));
        break;
      }
      case ReplayOutcome::Kind::HardFail:
        if (outcome.detail.rfind("unsatisfiable-slot:", 0) == 0) {
          throw UnsatisfiableSlotError(outcome.detail);
        }
        throw std::logic_error("chain not instantiable at step " +
                               std::to_string(outcome.failed_step) + ": " + outcome.detail);
    }
  }
  throw std::logic_error("row synthesis did not converge for chain in " + chain.domain);
}

DatabaseState instantiate_chain_db(const ToolChain& chain, const ToolGraph& graph, Rng& rng) {
  DatabaseState db = DatabaseState::empty_for(graph.schema);
  augment_chain_db(chain, graph, db, rng);
  return db;
}

}  // namespace envforge
