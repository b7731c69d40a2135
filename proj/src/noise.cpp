// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "envforge/noise.hpp"

#include <algorithm>
#include <stdexcept>

#include "envforge/env_scaling.hpp"
#include "envforge/task_runtime.hpp"

namespace envforge {

namespace {

// Per-level probability of the observational transforms (partial result,
// inconsistent tag, latency spike). Transient failures use kFailProbPerLevel.
constexpr double kObsProbPerLevel = 0.05;
constexpr double kLatencySpikeFactor = 4.0;

const std::vector<std::pair<NoiseKind, const char*>>& kind_names() {
  static const std::vector<std::pair<NoiseKind, const char*>> names = {
      {NoiseKind::ToolFailure, "tool_failure"},
      {NoiseKind::InconsistentResponse, "inconsistent_response"},
      {NoiseKind::PartialResult, "partial_result"},
      {NoiseKind::LatencySpike, "latency_spike"},
      {NoiseKind::ConstraintObfuscation, "constraint_obfuscation"},
      {NoiseKind::DistractorPreference, "distractor_preference"},
      {NoiseKind::Reordering, "reordering"},
  };
  return names;
}

NoiseKind kind_from_string(const std::string& s) {
  for (const auto& [k, name] : kind_names()) {
    if (s == name) return k;
  }
  throw std::invalid_argument("unknown noise kind: " + s);
}

int clamp_level(int level) { return std::clamp(level, 0, kMaxNoiseLevel); }

const std::vector<std::string>& distractor_pool() {
  static const std::vector<std::string> pool = {
      "If offered a premium option, weigh it against the standard one first.",
      "A colleague mentioned the quick path is usually fine, but full checks exist too.",
      "Some records may carry legacy labels; those are usually safe to ignore.",
      "Timing is flexible as long as everything lands today.",
      "There was talk of a discount category, though it likely does not apply here.",
      "Prefer keeping amounts round where you have discretion.",
  };
  return pool;
}

}  // namespace

std::string to_string(NoiseKind k) {
  for (const auto& [kind, name] : kind_names()) {
    if (kind == k) return name;
  }
  return "?";
}

std::set<NoiseKind> kinds_for_instruction_level(int level) {
  std::set<NoiseKind> kinds;
  level = clamp_level(level);
  if (level >= 1) kinds.insert(NoiseKind::ConstraintObfuscation);
  if (level >= 2) kinds.insert(NoiseKind::DistractorPreference);
  if (level >= 3) kinds.insert(NoiseKind::Reordering);
  return kinds;
}

std::set<NoiseKind> kinds_for_tool_level(int level) {
  std::set<NoiseKind> kinds;
  level = clamp_level(level);
  if (level >= 1) kinds.insert(NoiseKind::ToolFailure);
  if (level >= 2) kinds.insert(NoiseKind::PartialResult);
  if (level >= 3) kinds.insert(NoiseKind::InconsistentResponse);
  if (level >= 4) kinds.insert(NoiseKind::LatencySpike);
  return kinds;
}

NoiseProfile NoiseProfile::for_levels(int instruction_level, int tool_level) {
  NoiseProfile p;
  p.instruction_level = clamp_level(instruction_level);
  p.tool_level = clamp_level(tool_level);
  for (auto k : kinds_for_instruction_level(p.instruction_level)) p.enabled_kinds.insert(k);
  for (auto k : kinds_for_tool_level(p.tool_level)) p.enabled_kinds.insert(k);
  return p;
}

nlohmann::json NoiseProfile::to_json() const {
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : enabled_kinds) kinds.push_back(to_string(k));
  return {{"instruction_level", instruction_level},
          {"tool_level", tool_level},
          {"enabled_kinds", kinds}};
}

NoiseProfile NoiseProfile::from_json(const nlohmann::json& j) {
  NoiseProfile p;
  p.instruction_level = j.value("instruction_level", 0);
  p.tool_level = j.value("tool_level", 0);
  if (j.count("enabled_kinds")) {
    for (const auto& s : j.at("enabled_kinds")) {
      p.enabled_kinds.insert(kind_from_string(s.get<std::string>()));
    }
  } else {
    p = for_levels(p.instruction_level, p.tool_level);
  }
  return p;
}

Task inject_instruction_noise(const Task& task, int level, Rng& rng) {
  if (level < 0) throw std::invalid_argument("noise level must be >= 0");
  if (level == 0) return task;
  level = clamp_level(level);
  const std::set<NoiseKind> kinds = kinds_for_instruction_level(level);
  Task out = task;

  if (kinds.count(NoiseKind::ConstraintObfuscation)) {
    // Move up to `level` explicit user-provided values into the withheld set.
    std::vector<std::string> candidates;
    for (const auto& key : out.user_slots) {
      if (!out.withheld.count(key)) candidates.push_back(key);
    }
    const int moves = std::min<int>(level, static_cast<int>(candidates.size()));
    for (int i = 0; i < moves; ++i) {
      const size_t pick = rng.index(candidates.size());
      const std::string key = candidates[pick];
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
      const auto slash = key.find('/');
      const size_t step = std::stoul(key.substr(0, slash));
      const std::string slot = key.substr(slash + 1);
      out.withheld[key] = out.steps.at(step).args.at(slot);
    }
  }

  if (kinds.count(NoiseKind::DistractorPreference)) {
    const auto& pool = distractor_pool();
    const int count = std::min<int>(level - 1, static_cast<int>(pool.size()));
    std::vector<size_t> idx(pool.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    for (int i = 0; i < count; ++i) out.distractors.push_back(pool[idx[static_cast<size_t>(i)]]);
  }

  out.description = render_task_description(out);

  if (kinds.count(NoiseKind::Reordering)) {
    // Shuffle everything after the goal line; the plan order must now be
    // inferred from dependencies rather than read off the text.
    std::vector<std::string> lines;
    std::string cur;
    for (char ch : out.description) {
      if (ch == '\n') {
        lines.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (!cur.empty()) lines.push_back(cur);
    if (lines.size() > 2) {
      std::vector<std::string> body(lines.begin() + 1, lines.end());
      rng.shuffle(body);
      std::string rebuilt = lines.front();
      for (const auto& l : body) rebuilt += "\n" + l;
      out.description = rebuilt;
    }
    out.reordered = true;
  }

  // out.rubric deliberately untouched.
  return out;
}

ToolResult inject_tool_noise(const ToolResult& result, int level, Rng& rng) {
  if (level <= 0) return result;
  level = clamp_level(level);
  const std::set<NoiseKind> kinds = kinds_for_tool_level(level);
  ToolResult out = result;

  if (out.ok() && kinds.count(NoiseKind::ToolFailure) &&
      rng.bernoulli(kFailProbPerLevel * level)) {
    ToolResult t;
    t.status = ToolResult::Status::TransientFailure;
    t.tool = out.tool;
    t.error = "transient execution failure; safe to retry";
    t.payload = {{"transient", true}, {"original", out.to_json()}};
    return t;
  }
  if (out.ok() && kinds.count(NoiseKind::PartialResult) &&
      rng.bernoulli(kObsProbPerLevel * level)) {
    if (out.payload.count("read_rows") && out.payload["read_rows"].size() > 1) {
      auto& rows = out.payload["read_rows"];
      const size_t keep = (rows.size() + 1) / 2;
      nlohmann::json kept = nlohmann::json::array();
      for (size_t i = 0; i < keep; ++i) kept.push_back(rows[i]);
      out.payload["read_rows"] = kept;
    }
    out.payload["partial"] = true;
  }
  if (out.ok() && kinds.count(NoiseKind::InconsistentResponse) &&
      rng.bernoulli(kObsProbPerLevel * level)) {
    // Contradictory annotation only; stored rows are authoritative.
    out.payload["inconsistent_note"] = "status may still be pending";
  }
  if (kinds.count(NoiseKind::LatencySpike) && rng.bernoulli(kObsProbPerLevel * level)) {
    out.payload["latency_multiplier"] = kLatencySpikeFactor;
  }
  return out;
}

bool EpisodicToolNoise::pre_execution_failure(const std::string& call_key, Rng& rng) {
  if (profile_.tool_level <= 0 || !profile_.enabled_kinds.count(NoiseKind::ToolFailure)) {
    return false;
  }
  if (retry_exempt_.count(call_key)) {
    retry_exempt_.erase(call_key);
    return false;
  }
  const bool fail =
      adversarial_ || rng.bernoulli(kFailProbPerLevel * profile_.tool_level);
  if (fail) retry_exempt_.insert(call_key);
  return fail;
}

ToolResult EpisodicToolNoise::post_transform(ToolResult result, Rng& rng) {
  if (profile_.tool_level <= 0) return result;
  ToolResult out = std::move(result);
  if (out.ok() && profile_.enabled_kinds.count(NoiseKind::PartialResult) &&
      (adversarial_ || rng.bernoulli(kObsProbPerLevel * profile_.tool_level))) {
    if (out.payload.count("read_rows") && out.payload["read_rows"].size() > 1) {
      auto& rows = out.payload["read_rows"];
      const size_t keep = (rows.size() + 1) / 2;
      nlohmann::json kept = nlohmann::json::array();
      for (size_t i = 0; i < keep; ++i) kept.push_back(rows[i]);
      out.payload["read_rows"] = kept;
    }
    out.payload["partial"] = true;
  }
  if (out.ok() && profile_.enabled_kinds.count(NoiseKind::InconsistentResponse) &&
      (adversarial_ || rng.bernoulli(kObsProbPerLevel * profile_.tool_level))) {
    out.payload["inconsistent_note"] = "status may still be pending";
  }
  return out;
}

double EpisodicToolNoise::latency_multiplier(Rng& rng) {
  if (!profile_.enabled_kinds.count(NoiseKind::LatencySpike)) return 1.0;
  if (adversarial_ || rng.bernoulli(kObsProbPerLevel * profile_.tool_level)) {
    return kLatencySpikeFactor;
  }
  return 1.0;
}

bool verify_solvability(const Environment& env, const ToolGraph& graph, const Task& task,
                        const NoiseProfile& profile, int retry_budget) {
  if (retry_budget < 0) throw std::invalid_argument("retry_budget must be >= 0");

  // Worst-case draws: every first attempt of every call fails transiently.
  EpisodicToolNoise noise(profile, /*adversarial=*/true);
  Rng rng(0);  // adversarial mode consumes no draws; fixed stream for the rest
  DatabaseState db = env.db;
  for (size_t i = 0; i < task.steps.size(); ++i) {
    const std::string key = std::to_string(i) + ":" + task.steps[i].tool;
    bool executed = false;
    for (int attempt = 0; attempt <= retry_budget; ++attempt) {
      if (noise.pre_execution_failure(key, rng)) continue;
      ToolResult r = apply_tool(db, task.steps[i], graph);
      if (!r.ok()) return false;
      executed = true;
      break;
    }
    if (!executed) return false;
  }
  for (const auto& [table, kind] : task.rubric.forbidden_effects) {
    (void)table;
    (void)kind;  // gold plans never fire these; nothing further to check here
  }
  return rubric_holds(task.rubric, db);
}

nlohmann::json CurriculumState::to_json() const {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& [level, gap] : history) hist.push_back({level, gap});
  return {{"current_level", current_level},
          {"promotion_threshold", promotion_threshold},
          {"max_level", max_level},
          {"history", hist}};
}

CurriculumState CurriculumState::from_json(const nlohmann::json& j) {
  CurriculumState s;
  s.current_level = j.value("current_level", 0);
  s.promotion_threshold = j.value("promotion_threshold", 0.1);
  s.max_level = j.value("max_level", kMaxNoiseLevel);
  if (j.count("history")) {
    for (const auto& h : j.at("history")) {
      s.history.emplace_back(h.at(0).get<int>(), h.at(1).get<double>());
    }
  }
  return s;
}

CurriculumState curriculum_step(const CurriculumState& state, double clean_pass,
                                double noisy_pass) {
  if (clean_pass < 0.0 || clean_pass > 1.0 || noisy_pass < 0.0 || noisy_pass > 1.0) {
    throw std::invalid_argument("pass rates must lie in [0,1]");
  }
  CurriculumState next = state;
  const double gap = clean_pass - noisy_pass;
  next.history.emplace_back(state.current_level, gap);
  if (gap <= state.promotion_threshold && state.current_level < state.max_level) {
    next.current_level = state.current_level + 1;
  }
  return next;
}

}  // namespace envforge
