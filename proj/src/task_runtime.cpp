// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "envforge/task_runtime.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "envforge/json_util.hpp"

namespace envforge {

namespace {

constexpr int kSummaryKeepLastK = 4;
constexpr double kTurnTick = 0.1;

// Count of write-effect ids in a result payload, for token accounting and
// forbidden-effect tracking.
int64_t payload_row_count(const nlohmann::json& payload) {
  int64_t rows = 0;
  if (payload.count("read_rows")) rows += static_cast<int64_t>(payload.at("read_rows").size());
  for (const char* field : {"inserted", "updated", "deleted"}) {
    if (!payload.count(field)) continue;
    for (const auto& [table, ids] : payload.at(field).items()) {
      (void)table;
      rows += static_cast<int64_t>(ids.size());
    }
  }
  return rows;
}

const char* effect_field(EffectKind kind) {
  switch (kind) {
    case EffectKind::Insert: return "inserted";
    case EffectKind::Update: return "updated";
    case EffectKind::Delete: return "deleted";
  }
  return "?";
}

bool fired_forbidden(const nlohmann::json& payload,
                     const std::vector<std::pair<std::string, EffectKind>>& forbidden) {
  for (const auto& [table, kind] : forbidden) {
    const char* field = effect_field(kind);
    if (!payload.count(field)) continue;
    const auto& eff = payload.at(field);
    if (eff.count(table) && !eff.at(table).empty()) return true;
  }
  return false;
}

// Executes bound calls in order; failed calls are no-ops. Returns whether any
// forbidden effect fired.
bool execute_bound_calls(const std::vector<ToolCall>& calls, const ToolGraph& graph,
                         DatabaseState& db,
                         const std::vector<std::pair<std::string, EffectKind>>& forbidden) {
  bool fired = false;
  for (const auto& call : calls) {
    ToolResult r = apply_tool(db, call, graph);
    if (r.ok() && fired_forbidden(r.payload, forbidden)) fired = true;
  }
  return fired;
}

}  // namespace

nlohmann::json UserProfile::to_json() const {
  return {{"verbosity", verbosity},
          {"cooperativeness", cooperativeness},
          {"disclosure", disclosure}};
}

UserProfile UserProfile::from_json(const nlohmann::json& j) {
  UserProfile p;
  p.verbosity = j.value("verbosity", p.verbosity);
  p.cooperativeness = j.value("cooperativeness", p.cooperativeness);
  p.disclosure = j.value("disclosure", p.disclosure);
  return p;
}

nlohmann::json RubricPredicate::to_json() const {
  return {{"table", table},
          {"row_id", row_id},
          {"column", column},
          {"expected", value_to_json(expected)},
          {"expect_absent", expect_absent}};
}

RubricPredicate RubricPredicate::from_json(const nlohmann::json& j) {
  RubricPredicate p;
  p.table = j.at("table").get<std::string>();
  p.row_id = j.at("row_id").get<int64_t>();
  p.column = j.value("column", std::string());
  if (j.count("expected")) p.expected = value_from_json(j.at("expected"));
  p.expect_absent = j.value("expect_absent", false);
  return p;
}

nlohmann::json Rubric::to_json() const {
  nlohmann::json preds = nlohmann::json::array();
  for (const auto& p : final_state_predicates) preds.push_back(p.to_json());
  nlohmann::json forb = nlohmann::json::array();
  for (const auto& [table, kind] : forbidden_effects) {
    forb.push_back({table, effect_field(kind)});
  }
  return {{"final_state_predicates", preds}, {"forbidden_effects", forb}};
}

Rubric Rubric::from_json(const nlohmann::json& j) {
  Rubric r;
  for (const auto& p : j.at("final_state_predicates")) {
    r.final_state_predicates.push_back(RubricPredicate::from_json(p));
  }
  for (const auto& f : j.at("forbidden_effects")) {
    const std::string field = f.at(1).get<std::string>();
    EffectKind kind = EffectKind::Delete;
    if (field == "inserted") kind = EffectKind::Insert;
    else if (field == "updated") kind = EffectKind::Update;
    else if (field == "deleted") kind = EffectKind::Delete;
    else throw std::invalid_argument("unknown effect field: " + field);
    r.forbidden_effects.emplace_back(f.at(0).get<std::string>(), kind);
  }
  return r;
}

nlohmann::json Task::to_json() const {
  nlohmann::json steps_j = nlohmann::json::array();
  for (const auto& s : steps) steps_j.push_back(s.to_json());
  nlohmann::json withheld_j = nlohmann::json::object();
  for (const auto& [k, v] : withheld) withheld_j[k] = value_to_json(v);
  return {{"description", description},
          {"user_profile", user_profile.to_json()},
          {"rubric", rubric.to_json()},
          {"steps", steps_j},
          {"withheld", withheld_j},
          {"user_slots", user_slots},
          {"distractors", distractors},
          {"reordered", reordered}};
}

Task Task::from_json(const nlohmann::json& j) {
  Task t;
  t.description = j.at("description").get<std::string>();
  t.user_profile = UserProfile::from_json(j.at("user_profile"));
  t.rubric = Rubric::from_json(j.at("rubric"));
  for (const auto& s : j.at("steps")) t.steps.push_back(ToolCall::from_json(s));
  for (const auto& [k, v] : j.at("withheld").items()) t.withheld[k] = value_from_json(v);
  t.user_slots = j.value("user_slots", std::vector<std::string>{});
  t.distractors = j.value("distractors", std::vector<std::string>{});
  t.reordered = j.value("reordered", false);
  return t;
}

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::AgentMessage: return "agent_message";
    case EventKind::ToolCall: return "tool_call";
    case EventKind::ToolResult: return "tool_result";
    case EventKind::UserMessage: return "user_message";
    case EventKind::ContextAction: return "context_action";
  }
  return "?";
}

nlohmann::json TrajectoryEvent::to_json() const {
  return {{"kind", to_string(kind)}, {"time", time}, {"tokens", tokens}, {"body", body}};
}

int64_t Trajectory::total_tokens() const {
  int64_t total = 0;
  for (const auto& e : turns) total += e.tokens;
  return total;
}

std::string Trajectory::to_jsonl() const {
  std::string out;
  for (const auto& e : turns) {
    nlohmann::json j = e.to_json();
    j["policy_version"] = policy_version;
    out += j.dump();
    out += "\n";
  }
  return out;
}

std::string RewardReport::csv_header() {
  return "label,reward,predicates_total,predicates_satisfied,forbidden_triggered,turns,tokens";
}

std::string RewardReport::csv_row(const std::string& label) const {
  std::ostringstream os;
  os << label << "," << reward << "," << predicates_total << "," << predicates_satisfied << ","
     << (forbidden_triggered ? 1 : 0) << "," << turns << "," << tokens;
  return os.str();
}

nlohmann::json RewardReport::to_json() const {
  return {{"reward", reward},
          {"predicates_total", predicates_total},
          {"predicates_satisfied", predicates_satisfied},
          {"forbidden_triggered", forbidden_triggered},
          {"turns", turns},
          {"tokens", tokens}};
}

int64_t TokenCostModel::call_cost(const ToolCall& call) const {
  return per_tool_call + per_arg * static_cast<int64_t>(call.args.size());
}

int64_t TokenCostModel::result_cost(const ToolResult& result) const {
  const int64_t raw = per_result_base + per_row * payload_row_count(result.payload);
  return std::llround(result_scale * static_cast<double>(raw));
}

nlohmann::json TokenCostModel::to_json() const {
  return {{"base_prompt", base_prompt},
          {"per_agent_msg", per_agent_msg},
          {"per_tool_call", per_tool_call},
          {"per_arg", per_arg},
          {"per_result_base", per_result_base},
          {"per_row", per_row},
          {"per_user_msg", per_user_msg},
          {"per_revealed", per_revealed},
          {"result_scale", result_scale}};
}

TokenCostModel TokenCostModel::from_json(const nlohmann::json& j) {
  TokenCostModel m;
  m.base_prompt = j.value("base_prompt", m.base_prompt);
  m.per_agent_msg = j.value("per_agent_msg", m.per_agent_msg);
  m.per_tool_call = j.value("per_tool_call", m.per_tool_call);
  m.per_arg = j.value("per_arg", m.per_arg);
  m.per_result_base = j.value("per_result_base", m.per_result_base);
  m.per_row = j.value("per_row", m.per_row);
  m.per_user_msg = j.value("per_user_msg", m.per_user_msg);
  m.per_revealed = j.value("per_revealed", m.per_revealed);
  m.result_scale = j.value("result_scale", m.result_scale);
  return m;
}

nlohmann::json EpisodeLimits::to_json() const {
  return {{"max_turns", max_turns}, {"max_tokens", max_tokens}};
}

EpisodeLimits EpisodeLimits::from_json(const nlohmann::json& j) {
  EpisodeLimits l;
  l.max_turns = j.value("max_turns", l.max_turns);
  l.max_tokens = j.value("max_tokens", l.max_tokens);
  return l;
}

std::string render_task_description(const Task& task) {
  std::string out = "Complete the following workflow in order; every change must stick.";
  for (size_t i = 0; i < task.steps.size(); ++i) {
    const ToolCall& call = task.steps[i];
    std::string line = "step " + std::to_string(i + 1) + ": call " + call.tool;
    if (!call.args.empty()) {
      line += " (";
      bool first = true;
      for (const auto& [name, value] : call.args) {
        if (!first) line += ", ";
        first = false;
        const std::string key = std::to_string(i) + "/" + name;
        line += name + "=";
        line += task.withheld.count(key) ? "?" : value_to_string(value);
      }
      line += ")";
    }
    out += "\n" + line;
  }
  for (const auto& d : task.distractors) out += "\nnote: " + d;
  return out;
}

bool rubric_holds(const Rubric& rubric, const DatabaseState& db) {
  for (const auto& p : rubric.final_state_predicates) {
    const Row* row = db.find_row(p.table, p.row_id);
    if (p.expect_absent) {
      if (row != nullptr) return false;
      continue;
    }
    if (row == nullptr) return false;
    auto it = row->find(p.column);
    if (it == row->end() || !(it->second == p.expected)) return false;
  }
  return true;
}

Task generate_task(const Environment& env, const ToolGraph& graph, Rng& rng) {
  if (env.gold_chains.empty()) throw std::invalid_argument("environment has no gold chains");

  // One sampled gold workflow per task; every gold chain replays against the
  // final environment db, so any of them is a sound plan.
  const ToolChain& chain = env.gold_chains[rng.index(env.gold_chains.size())];

  Task task;
  DatabaseState db = env.db;
  ReplayLog log;
  auto outcome = replay_chain(chain, graph, db, &log);
  if (outcome.kind != ReplayOutcome::Kind::Ok) {
    throw std::logic_error("gold chain failed to replay during task generation: " +
                           outcome.detail);
  }
  task.steps = log.calls;

  // Rows the plan writes, in deterministic order, for predicate extraction.
  std::set<std::pair<std::string, int64_t>> touched;
  std::set<std::string> deleted_tables;
  for (const auto& r : log.results) {
    for (const char* field : {"inserted", "updated", "deleted"}) {
      if (!r.payload.count(field)) continue;
      for (const auto& [table, ids] : r.payload.at(field).items()) {
        for (const auto& id : ids) touched.insert({table, id.get<int64_t>()});
        if (std::string(field) == "deleted" && !ids.empty()) deleted_tables.insert(table);
      }
    }
  }
  for (const auto& [table, id] : touched) {
    const Row* row = db.find_row(table, id);
    if (row == nullptr) {
      RubricPredicate p;
      p.table = table;
      p.row_id = id;
      p.expect_absent = true;
      task.rubric.final_state_predicates.push_back(p);
      continue;
    }
    for (const auto& [column, value] : *row) {
      RubricPredicate p;
      p.table = table;
      p.row_id = id;
      p.column = column;
      p.expected = value;
      task.rubric.final_state_predicates.push_back(p);
    }
  }
  // The plan never deletes from these tables, so an agent must not either.
  for (const auto& [table, columns] : graph.schema.tables) {
    (void)columns;
    if (!deleted_tables.count(table)) {
      task.rubric.forbidden_effects.emplace_back(table, EffectKind::Delete);
    }
  }

  // Argument values the user knows and could be asked for.
  for (size_t i = 0; i < task.steps.size(); ++i) {
    const ToolSpec& spec = graph.tools.at(task.steps[i].tool);
    for (const auto& slot : spec.inputs) {
      if (slot.source != SlotSource::UserProvided) continue;
      if (!task.steps[i].args.count(slot.name)) continue;
      task.user_slots.push_back(std::to_string(i) + "/" + slot.name);
    }
  }

  task.user_profile.verbosity = rng.uniform01();
  task.user_profile.cooperativeness = 1.0;
  static const double kDisclosureLevels[] = {1.0, 0.85, 0.7};
  task.user_profile.disclosure = kDisclosureLevels[rng.index(3)];
  for (const auto& key : task.user_slots) {
    if (rng.uniform01() >= task.user_profile.disclosure) {
      const auto slash = key.find('/');
      const size_t step = std::stoul(key.substr(0, slash));
      task.withheld[key] = task.steps[step].args.at(key.substr(slash + 1));
    }
  }

  task.description = render_task_description(task);
  return task;
}

bool validate_rubric(const Task& task, const Environment& env, const ToolGraph& graph,
                     int trials) {
  if (trials < 2) throw std::invalid_argument("trials must be >= 2");

  DatabaseState gold_db;
  bool gold_forbidden = false;
  for (int t = 0; t < trials; ++t) {
    DatabaseState db = env.db;
    const bool fired = execute_bound_calls(task.steps, graph, db, task.rubric.forbidden_effects);
    if (fired || !rubric_holds(task.rubric, db)) return false;
    gold_db = std::move(db);
    gold_forbidden = fired;
  }
  (void)gold_forbidden;

  // Ablation: dropping any step that changes the outcome must be rejected.
  // Drops that leave the final state identical (pure reads) are undetectable
  // by an outcome-only rubric and are skipped.
  for (size_t drop = 0; drop < task.steps.size(); ++drop) {
    std::vector<ToolCall> ablated;
    for (size_t i = 0; i < task.steps.size(); ++i) {
      if (i != drop) ablated.push_back(task.steps[i]);
    }
    DatabaseState db = env.db;
    const bool fired = execute_bound_calls(ablated, graph, db, task.rubric.forbidden_effects);
    if (db == gold_db) continue;
    if (!fired && rubric_holds(task.rubric, db)) return false;
  }
  return true;
}

std::pair<Trajectory, RewardReport> run_episode(const Environment& env, const ToolGraph& graph,
                                                const Task& task, const ScriptedSolver& solver,
                                                const NoiseProfile& noise,
                                                const ContextPolicy& ctx_policy,
                                                const EpisodeLimits& limits,
                                                const TokenCostModel& tokens, Rng& rng) {
  if (limits.max_turns < 1 || limits.max_tokens < 1) {
    throw std::invalid_argument("episode limits must be positive");
  }

  Trajectory traj;
  DatabaseState db = env.db;
  EpisodicToolNoise injector(noise);
  ContextState ctx;
  ctx.base_tokens = tokens.base_prompt;
  ctx.live_tokens = ctx.base_tokens;

  std::vector<TrajectoryEvent> segment;  // events visible in the live context
  std::set<std::string> revealed;        // withheld keys currently in context
  size_t plan_index = 0;
  int turns_used = 0;
  bool forbidden_fired = false;
  double now = 0.0;

  auto add_event = [&](EventKind kind, int64_t cost, nlohmann::json body, double dt = kTurnTick) {
    now += dt;
    TrajectoryEvent ev{kind, now, cost, std::move(body)};
    traj.turns.push_back(ev);
    if (kind != EventKind::ContextAction) segment.push_back(ev);
    ctx.live_tokens += cost;
  };

  const bool segment_capped =
      ctx_policy.kind == ContextPolicyKind::Summary || ctx_policy.kind == ContextPolicyKind::None;

  while (plan_index < task.steps.size()) {
    if (turns_used >= limits.max_turns) break;
    if (ctx.live_tokens > limits.max_tokens) break;
    // A Summary/None context has no way to shed turns; overflowing the
    // segment cap ends the episode.
    if (segment_capped && ctx.turn_count > ctx_policy.max_turns) break;

    const ContextAction action = apply_policy(ctx, ctx_policy);
    if (action == ContextAction::Summarize) {
      ContextDigest digest = summarize(segment, kSummaryKeepLastK);
      // Older digest facts stay known; the fresh digest takes precedence.
      for (const auto& [k, v] : ctx.digest.facts) digest.facts.emplace(k, v);
      for (const auto& e : ctx.digest.entity_ids) {
        if (std::find(digest.entity_ids.begin(), digest.entity_ids.end(), e) ==
            digest.entity_ids.end()) {
          digest.entity_ids.push_back(e);
        }
      }
      ctx.digest = std::move(digest);
      ctx.live_tokens = ctx.base_tokens + ctx.digest.token_cost;
      segment.clear();
      add_event(EventKind::ContextAction, 0,
                {{"action", "summarize"}, {"digest_tokens", ctx.digest.token_cost}}, 0.0);
      continue;
    }
    if (action == ContextAction::DiscardAll) {
      ctx.live_tokens = ctx.base_tokens;
      ctx.turn_count = 0;
      ctx.reset_count += 1;
      ctx.digest = ContextDigest{};
      segment.clear();
      revealed.clear();  // discarded knowledge must be re-asked
      add_event(EventKind::ContextAction, 0,
                {{"action", "discard_all"}, {"reset_count", ctx.reset_count}}, 0.0);
      continue;
    }

    const ToolCall& call = task.steps[plan_index];

    // Missing user-held values are asked for one per turn.
    std::string missing_key;
    for (const auto& [key, value] : task.withheld) {
      (void)value;
      const auto slash = key.find('/');
      if (std::stoul(key.substr(0, slash)) != plan_index) continue;
      if (!revealed.count(key)) {
        missing_key = key;
        break;
      }
    }
    if (!missing_key.empty()) {
      turns_used += 1;
      ctx.turn_count += 1;
      if (rng.uniform01() < solver.clarification_rate) {
        add_event(EventKind::AgentMessage, tokens.per_agent_msg, {{"ask", missing_key}});
        add_event(EventKind::UserMessage, tokens.per_user_msg + tokens.per_revealed,
                  {{"reveal",
                    {{"key", missing_key}, {"value", value_to_json(task.withheld.at(missing_key))}}}},
                  0.0);
        revealed.insert(missing_key);
      } else {
        add_event(EventKind::AgentMessage, tokens.per_agent_msg,
                  {{"text", "hesitates instead of asking"}});
      }
      continue;
    }

    // Skill gate: an unskilled turn is a wasted exploratory message.
    if (!rng.bernoulli(solver.skill)) {
      turns_used += 1;
      ctx.turn_count += 1;
      add_event(EventKind::AgentMessage, tokens.per_agent_msg, {{"text", "explores"}});
      continue;
    }

    turns_used += 1;
    ctx.turn_count += 1;
    add_event(EventKind::ToolCall, tokens.call_cost(call), call.to_json());

    const std::string call_key = std::to_string(plan_index) + ":" + call.tool;
    if (injector.pre_execution_failure(call_key, rng)) {
      ToolResult t;
      t.status = ToolResult::Status::TransientFailure;
      t.tool = call.tool;
      t.error = "transient execution failure; safe to retry";
      t.payload = {{"transient", true}};
      add_event(EventKind::ToolResult, tokens.per_result_base, t.to_json(), 0.0);
      if (!rng.bernoulli(solver.noise_handling)) {
        // Recovery fumble: one extra turn before the retry.
        turns_used += 1;
        ctx.turn_count += 1;
        add_event(EventKind::AgentMessage, tokens.per_agent_msg, {{"text", "re-reads the error"}});
      }
      continue;  // same plan step retried; the injector exempts the retry
    }

    ToolResult result = apply_tool(db, call, graph);
    if (result.ok() && fired_forbidden(result.payload, task.rubric.forbidden_effects)) {
      forbidden_fired = true;
    }
    result = injector.post_transform(std::move(result), rng);
    const double lat = injector.latency_multiplier(rng);
    add_event(EventKind::ToolResult, tokens.result_cost(result), result.to_json(),
              kTurnTick * (lat - 1.0));
    if (!result.ok()) break;  // bound gold call failed: unrecoverable
    plan_index += 1;
  }

  RewardReport report;
  report.predicates_total = static_cast<int>(task.rubric.final_state_predicates.size());
  for (const auto& p : task.rubric.final_state_predicates) {
    Rubric single;
    single.final_state_predicates.push_back(p);
    if (rubric_holds(single, db)) report.predicates_satisfied += 1;
  }
  report.forbidden_triggered = forbidden_fired;
  const bool complete = plan_index == task.steps.size();
  report.reward =
      (complete && !forbidden_fired && rubric_holds(task.rubric, db)) ? 1 : 0;
  report.turns = turns_used;
  report.tokens = traj.total_tokens();
  return {std::move(traj), report};
}

RewardReport evaluate_trajectory(const Trajectory& traj, const Environment& env,
                                 const ToolGraph& graph, const Rubric& rubric) {
  DatabaseState db = env.db;
  bool forbidden_fired = false;
  int agent_turns = 0;
  for (size_t i = 0; i < traj.turns.size(); ++i) {
    const auto& ev = traj.turns[i];
    if (ev.kind == EventKind::AgentMessage) agent_turns += 1;
    if (ev.kind != EventKind::ToolCall) continue;
    agent_turns += 1;
    // Transiently failed calls never touched the database; skip their replay.
    if (i + 1 < traj.turns.size() && traj.turns[i + 1].kind == EventKind::ToolResult &&
        traj.turns[i + 1].body.value("status", std::string()) == "transient-failure") {
      continue;
    }
    ToolResult r = apply_tool(db, ToolCall::from_json(ev.body), graph);
    if (r.ok() && fired_forbidden(r.payload, rubric.forbidden_effects)) forbidden_fired = true;
  }

  RewardReport report;
  report.predicates_total = static_cast<int>(rubric.final_state_predicates.size());
  for (const auto& p : rubric.final_state_predicates) {
    Rubric single;
    single.final_state_predicates.push_back(p);
    if (rubric_holds(single, db)) report.predicates_satisfied += 1;
  }
  report.forbidden_triggered = forbidden_fired;
  report.reward = (!forbidden_fired && rubric_holds(rubric, db)) ? 1 : 0;
  report.turns = agent_turns;
  report.tokens = traj.total_tokens();
  return report;
}

}  // namespace envforge
