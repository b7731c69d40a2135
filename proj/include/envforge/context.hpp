// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Context-management policies over token-accounted trajectories: summarize
// past tool results above a token threshold, discard everything on a
// progressive turn schedule, or combine both.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace envforge {

struct TrajectoryEvent;  // task_runtime.hpp

enum class ContextPolicyKind { Summary, DiscardAll, Hybrid, None };
enum class ContextAction { None, Summarize, DiscardAll };

std::string to_string(ContextPolicyKind k);
std::string to_string(ContextAction a);

struct ContextPolicy {
  ContextPolicyKind kind = ContextPolicyKind::Hybrid;
  int64_t summary_threshold_tokens = 80000;
  // Segment turn cap for Summary/None runs (exceeding it fails the episode).
  int max_turns = 64;
  // Turn thresholds for DiscardAll/Hybrid; index advances per reset and the
  // last entry repeats. Defaults to doubling from max_turns when empty.
  std::vector<int> discard_schedule;

  int discard_threshold(int reset_count) const;

  nlohmann::json to_json() const;
  static ContextPolicy from_json(const nlohmann::json& j);
};

// Structural digest of summarized history: discovered facts, entity ids seen
// in tool results, and the last k results verbatim.
struct ContextDigest {
  std::map<std::string, std::string> facts;
  std::vector<std::pair<std::string, int64_t>> entity_ids;  // (table, id)
  std::vector<nlohmann::json> verbatim_results;
  int64_t token_cost = 0;

  bool empty() const { return facts.empty() && entity_ids.empty() && verbatim_results.empty(); }
  nlohmann::json to_json() const;
};

struct ContextState {
  int64_t live_tokens = 0;
  int64_t base_tokens = 0;  // system+user prompt cost a reset returns to
  int turn_count = 0;       // turns in the current segment
  int reset_count = 0;
  ContextDigest digest;
};

// Pure decision: summary/hybrid summarize iff tokens > threshold;
// discard_all/hybrid discard iff segment turns exceed the current schedule
// threshold; hybrid gives discard precedence when both fire.
ContextAction apply_policy(const ContextState& state, const ContextPolicy& policy);

// Digest of a history slice. All entity ids appearing in tool results are
// preserved; the digest's token cost is strictly below the summarized span's.
ContextDigest summarize(const std::vector<TrajectoryEvent>& history, int keep_last_k);

}  // namespace envforge
