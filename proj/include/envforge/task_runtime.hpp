// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Rubric-bearing task generation, scripted episode execution, and
// outcome-only trajectory scoring.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "envforge/context.hpp"
#include "envforge/env_scaling.hpp"
#include "envforge/noise.hpp"
#include "envforge/rng.hpp"
#include "envforge/tool_exec.hpp"

namespace envforge {

struct UserProfile {
  double verbosity = 0.5;
  double cooperativeness = 1.0;
  // Fraction of argument values stated upfront; the rest must be asked for.
  double disclosure = 1.0;

  nlohmann::json to_json() const;
  static UserProfile from_json(const nlohmann::json& j);
};

// One final-state check: row `row_id` of `table` must have column == expected,
// or the row must be gone when expect_absent is set.
struct RubricPredicate {
  std::string table;
  int64_t row_id = 0;
  std::string column;
  Value expected = int64_t{0};
  bool expect_absent = false;

  nlohmann::json to_json() const;
  static RubricPredicate from_json(const nlohmann::json& j);
  bool operator==(const RubricPredicate&) const = default;
};

struct Rubric {
  // Acceptance rule: all predicates hold and no forbidden effect fired.
  std::vector<RubricPredicate> final_state_predicates;
  std::vector<std::pair<std::string, EffectKind>> forbidden_effects;

  nlohmann::json to_json() const;
  static Rubric from_json(const nlohmann::json& j);
  bool operator==(const Rubric&) const = default;
};

struct Task {
  std::string description;
  UserProfile user_profile;
  Rubric rubric;
  // The solution plan: gold chains concatenated, with fully bound arguments.
  std::vector<ToolCall> steps;
  // Values the user withholds until asked; key = "<step>/<slot>".
  std::map<std::string, Value> withheld;
  // Keys ("<step>/<slot>") of user-provided argument values; the pool
  // instruction noise may move into `withheld`.
  std::vector<std::string> user_slots;
  std::vector<std::string> distractors;  // added by instruction noise
  bool reordered = false;                // description steps were shuffled

  nlohmann::json to_json() const;
  static Task from_json(const nlohmann::json& j);
};

enum class EventKind { AgentMessage, ToolCall, ToolResult, UserMessage, ContextAction };

std::string to_string(EventKind k);

struct TrajectoryEvent {
  EventKind kind = EventKind::AgentMessage;
  double time = 0.0;    // simulated wall time
  int64_t tokens = 0;   // synthetic token cost
  nlohmann::json body;  // event payload (call args, result, message text...)

  nlohmann::json to_json() const;
};

struct Trajectory {
  std::vector<TrajectoryEvent> turns;
  int policy_version = 0;

  int64_t total_tokens() const;
  // One event per line, stable field names.
  std::string to_jsonl() const;
};

struct RewardReport {
  int reward = 0;  // binary outcome
  int predicates_total = 0;
  int predicates_satisfied = 0;
  bool forbidden_triggered = false;
  int turns = 0;
  int64_t tokens = 0;

  static std::string csv_header();
  std::string csv_row(const std::string& label) const;
  nlohmann::json to_json() const;
};

// Synthetic token accounting used by episodes and context policies.
struct TokenCostModel {
  int64_t base_prompt = 256;
  int64_t per_agent_msg = 12;
  int64_t per_tool_call = 10;
  int64_t per_arg = 2;
  int64_t per_result_base = 8;
  int64_t per_row = 4;
  int64_t per_user_msg = 10;
  int64_t per_revealed = 4;
  // Multiplier on result costs; lets workloads be made token-heavy.
  double result_scale = 1.0;

  int64_t call_cost(const ToolCall& call) const;
  int64_t result_cost(const ToolResult& result) const;

  nlohmann::json to_json() const;
  static TokenCostModel from_json(const nlohmann::json& j);
};

struct EpisodeLimits {
  int max_turns = 200;
  int64_t max_tokens = 2000000;

  nlohmann::json to_json() const;
  static EpisodeLimits from_json(const nlohmann::json& j);
};

// Renders the instruction text from the task's plan: a goal line, one step
// line per call (withheld values shown as "?"), then any distractor lines.
std::string render_task_description(const Task& task);

// True iff every final-state predicate holds against db.
bool rubric_holds(const Rubric& rubric, const DatabaseState& db);

// Rubric predicates are read off the post-state of replaying the gold chains,
// so they hold by construction; the description is templated from the full
// plan; the user profile varies interaction complexity.
Task generate_task(const Environment& env, const ToolGraph& graph, Rng& rng);

// True iff every gold-chain replay satisfies the rubric in every trial and
// every one-tool-ablated chain that changes the final state is rejected.
bool validate_rubric(const Task& task, const Environment& env, const ToolGraph& graph, int trials);

// Scripted episode: solver decisions, tool executions through noise, user
// replies, and context-policy actions, until completion or limits.
std::pair<Trajectory, RewardReport> run_episode(const Environment& env, const ToolGraph& graph,
                                                const Task& task, const ScriptedSolver& solver,
                                                const NoiseProfile& noise,
                                                const ContextPolicy& ctx_policy,
                                                const EpisodeLimits& limits,
                                                const TokenCostModel& tokens, Rng& rng);

// Replays the trajectory's tool calls on a fresh db copy and scores the final
// state; reward is 1 iff all predicates hold and no forbidden effect fired.
RewardReport evaluate_trajectory(const Trajectory& traj, const Environment& env,
                                 const ToolGraph& graph, const Rubric& rubric);

}  // namespace envforge
