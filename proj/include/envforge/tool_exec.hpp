// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Interpreted tool execution against the database model, plus deterministic
// chain replay and database instantiation. Replay binds arguments by fixed
// rules (latest produced id, else smallest existing id, else synthesis), so a
// chain's execution depends only on (chain, graph, starting db).

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "envforge/database.hpp"
#include "envforge/domain_graph.hpp"
#include "envforge/rng.hpp"

namespace envforge {

using ToolArgs = std::map<std::string, Value>;

struct ToolCall {
  std::string tool;
  ToolArgs args;

  nlohmann::json to_json() const;
  static ToolCall from_json(const nlohmann::json& j);
  bool operator==(const ToolCall&) const = default;
};

struct ToolResult {
  // TransientFailure is never produced by execution itself; the noise layer
  // uses it for failures that leave the database untouched and clear on retry.
  enum class Status { Ok, MissingArg, MissingEntity, PreconditionFailed, TransientFailure };

  Status status = Status::Ok;
  std::string tool;
  std::string error;  // populated on non-Ok
  // Rows read plus ids inserted/updated/deleted, for the transcript.
  nlohmann::json payload = nlohmann::json::object();
  // Entity kind -> id, one entry per output_entities element that bound.
  std::map<std::string, int64_t> produced;
  bool ok() const { return status == Status::Ok; }

  nlohmann::json to_json() const;
};

std::string to_string(ToolResult::Status s);

// Applies the call to db in place; db is untouched on any non-Ok status.
// Unknown tool id or malformed spec is a fault (std::invalid_argument).
ToolResult apply_tool(DatabaseState& db, const ToolCall& call, const ToolGraph& graph);

// Pure form: returns the result and the successor state.
std::pair<ToolResult, DatabaseState> execute_tool(const DatabaseState& db, const ToolCall& call,
                                                  const ToolGraph& graph);

// An ordered, dependency-satisfying, executable tool sequence.
struct ToolChain {
  std::vector<std::string> tools;
  std::string domain;

  nlohmann::json to_json() const;
  static ToolChain from_json(const nlohmann::json& j);
  bool operator==(const ToolChain&) const = default;
};

// What a replay attempt needs next: either it finished, or a specific row has
// to exist first, or the chain is unsalvageable against this graph.
struct ReplayOutcome {
  enum class Kind { Ok, NeedRow, HardFail } kind = Kind::Ok;
  // NeedRow: synthesize a row in `table`; if `filter_column` is nonempty the
  // row must carry `filter_value` there (scan reads match on it).
  std::string table;
  std::string filter_column;
  Value filter_value = int64_t{0};
  size_t failed_step = 0;
  std::string detail;
};

struct ReplayLog {
  std::vector<ToolCall> calls;      // fully bound arguments, step by step
  std::vector<ToolResult> results;  // parallel to calls
};

// Executes the chain against db in place with deterministic argument binding.
// Stops at the first failure and reports what was missing. `log`, when given,
// receives the bound calls/results up to and including the failing step.
ReplayOutcome replay_chain(const ToolChain& chain, const ToolGraph& graph, DatabaseState& db,
                           ReplayLog* log = nullptr);

// Appends the minimum seed rows to db (never mutating existing rows) until the
// chain replays cleanly. Throws UnsatisfiableSlotError for empty enum domains
// and std::logic_error if synthesis cannot converge (invalid chain).
void augment_chain_db(const ToolChain& chain, const ToolGraph& graph, DatabaseState& db, Rng& rng);

// Fresh minimal database for one chain: rows are synthesized only for slots
// not produced by earlier chain tools.
DatabaseState instantiate_chain_db(const ToolChain& chain, const ToolGraph& graph, Rng& rng);

}  // namespace envforge
