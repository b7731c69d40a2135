// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "envforge/context.hpp"

#include <algorithm>
#include <climits>
#include <stdexcept>

#include "envforge/task_runtime.hpp"

namespace envforge {

std::string to_string(ContextPolicyKind k) {
  switch (k) {
    case ContextPolicyKind::Summary: return "summary";
    case ContextPolicyKind::DiscardAll: return "discard_all";
    case ContextPolicyKind::Hybrid: return "hybrid";
    case ContextPolicyKind::None: return "none";
  }
  return "none";
}

std::string to_string(ContextAction a) {
  switch (a) {
    case ContextAction::None: return "none";
    case ContextAction::Summarize: return "summarize";
    case ContextAction::DiscardAll: return "discard_all";
  }
  return "none";
}

namespace {

ContextPolicyKind kind_from_string(const std::string& s) {
  if (s == "summary") return ContextPolicyKind::Summary;
  if (s == "discard_all") return ContextPolicyKind::DiscardAll;
  if (s == "hybrid") return ContextPolicyKind::Hybrid;
  if (s == "none") return ContextPolicyKind::None;
  throw std::invalid_argument("unknown context policy kind: " + s);
}

}  // namespace

int ContextPolicy::discard_threshold(int reset_count) const {
  if (reset_count < 0) reset_count = 0;
  if (!discard_schedule.empty()) {
    const size_t idx =
        std::min(static_cast<size_t>(reset_count), discard_schedule.size() - 1);
    return discard_schedule[idx];
  }
  // No explicit schedule: start at max_turns and double with each reset.
  const int shift = std::min(reset_count, 20);
  const long long v = static_cast<long long>(max_turns) << shift;
  return static_cast<int>(std::min<long long>(v, INT_MAX));
}

nlohmann::json ContextPolicy::to_json() const {
  return {{"kind", to_string(kind)},
          {"summary_threshold_tokens", summary_threshold_tokens},
          {"max_turns", max_turns},
          {"discard_schedule", discard_schedule}};
}

ContextPolicy ContextPolicy::from_json(const nlohmann::json& j) {
  ContextPolicy p;
  if (j.count("kind")) p.kind = kind_from_string(j.at("kind").get<std::string>());
  p.summary_threshold_tokens = j.value("summary_threshold_tokens", p.summary_threshold_tokens);
  p.max_turns = j.value("max_turns", p.max_turns);
  p.discard_schedule = j.value("discard_schedule", p.discard_schedule);
  return p;
}

nlohmann::json ContextDigest::to_json() const {
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& [table, id] : entity_ids) ids.push_back({table, id});
  return {{"facts", facts},
          {"entity_ids", ids},
          {"verbatim_results", verbatim_results},
          {"token_cost", token_cost}};
}

ContextAction apply_policy(const ContextState& state, const ContextPolicy& policy) {
  const bool over_tokens = state.live_tokens > policy.summary_threshold_tokens;
  const bool over_turns = state.turn_count > policy.discard_threshold(state.reset_count);
  switch (policy.kind) {
    case ContextPolicyKind::None:
      return ContextAction::None;
    case ContextPolicyKind::Summary:
      return over_tokens ? ContextAction::Summarize : ContextAction::None;
    case ContextPolicyKind::DiscardAll:
      return over_turns ? ContextAction::DiscardAll : ContextAction::None;
    case ContextPolicyKind::Hybrid:
      // A full reset reclaims strictly more, so it wins when both fire.
      if (over_turns) return ContextAction::DiscardAll;
      if (over_tokens) return ContextAction::Summarize;
      return ContextAction::None;
  }
  return ContextAction::None;
}

ContextDigest summarize(const std::vector<TrajectoryEvent>& history, int keep_last_k) {
  ContextDigest digest;
  int64_t span_tokens = 0;
  std::vector<std::pair<nlohmann::json, int64_t>> results;  // (body, tokens)

  auto note_entity = [&](const std::string& table, int64_t id) {
    const auto key = std::make_pair(table, id);
    if (std::find(digest.entity_ids.begin(), digest.entity_ids.end(), key) ==
        digest.entity_ids.end()) {
      digest.entity_ids.push_back(key);
    }
  };

  for (const auto& ev : history) {
    span_tokens += ev.tokens;
    if (ev.kind == EventKind::UserMessage && ev.body.count("reveal")) {
      const auto& reveal = ev.body.at("reveal");
      digest.facts[reveal.at("key").get<std::string>()] = reveal.at("value").dump();
    }
    if (ev.kind != EventKind::ToolResult || !ev.body.count("payload")) continue;
    results.emplace_back(ev.body, ev.tokens);
    const auto& payload = ev.body.at("payload");
    if (payload.count("read_rows")) {
      for (const auto& r : payload.at("read_rows")) {
        note_entity(r.at("table").get<std::string>(), r.at("id").get<int64_t>());
      }
    }
    for (const char* field : {"inserted", "updated"}) {
      if (!payload.count(field)) continue;
      for (const auto& [table, ids] : payload.at(field).items()) {
        for (const auto& id : ids) note_entity(table, id.get<int64_t>());
      }
    }
  }

  if (keep_last_k < 0) keep_last_k = 0;
  const size_t keep = std::min(results.size(), static_cast<size_t>(keep_last_k));
  std::vector<std::pair<nlohmann::json, int64_t>> verbatim(results.end() - keep, results.end());

  auto cost_of = [&] {
    int64_t c = 6 + 4 * static_cast<int64_t>(digest.facts.size()) +
                2 * static_cast<int64_t>(digest.entity_ids.size());
    for (const auto& [body, t] : verbatim) {
      (void)body;
      c += t;
    }
    return c;
  };
  // The digest must be strictly cheaper than what it replaces; shed verbatim
  // detail first if the span was unusually small.
  while (cost_of() >= span_tokens && !verbatim.empty()) {
    verbatim.erase(verbatim.begin());
  }
  for (auto& [body, t] : verbatim) {
    (void)t;
    digest.verbatim_results.push_back(std::move(body));
  }
  // An empty digest carries no fixed overhead.
  digest.token_cost = digest.empty() ? 0 : cost_of();
  return digest;
}

}  // namespace envforge
