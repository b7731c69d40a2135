// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <climits>
#include <map>
#include <string>
#include <vector>

#include "envforge/context.hpp"
#include "envforge/task_runtime.hpp"

using namespace envforge;

namespace {

ContextState state_of(int64_t live, int turns, int resets = 0) {
  ContextState s;
  s.live_tokens = live;
  s.turn_count = turns;
  s.reset_count = resets;
  return s;
}

TrajectoryEvent result_event(nlohmann::json payload, int64_t tokens) {
  TrajectoryEvent ev;
  ev.kind = EventKind::ToolResult;
  ev.tokens = tokens;
  ev.body = {{"status", "ok"}, {"payload", std::move(payload)}};
  return ev;
}

}  // namespace

TEST_CASE("policy decisions fire strictly above their thresholds") {
  ContextPolicy summary;
  summary.kind = ContextPolicyKind::Summary;  // threshold defaults to 80000
  CHECK(apply_policy(state_of(80000, 0), summary) == ContextAction::None);
  CHECK(apply_policy(state_of(80001, 0), summary) == ContextAction::Summarize);
  // Summary mode never looks at the turn count.
  CHECK(apply_policy(state_of(0, 1000000), summary) == ContextAction::None);

  ContextPolicy discard;
  discard.kind = ContextPolicyKind::DiscardAll;  // max_turns defaults to 64
  CHECK(apply_policy(state_of(0, 64), discard) == ContextAction::None);
  CHECK(apply_policy(state_of(0, 65), discard) == ContextAction::DiscardAll);
  // And discard mode never looks at tokens.
  CHECK(apply_policy(state_of(1 << 30, 0), discard) == ContextAction::None);

  ContextPolicy hybrid;
  hybrid.kind = ContextPolicyKind::Hybrid;
  CHECK(apply_policy(state_of(0, 0), hybrid) == ContextAction::None);
  CHECK(apply_policy(state_of(80001, 0), hybrid) == ContextAction::Summarize);
  CHECK(apply_policy(state_of(0, 65), hybrid) == ContextAction::DiscardAll);
  // A reset reclaims strictly more, so it wins when both fire.
  CHECK(apply_policy(state_of(80001, 65), hybrid) == ContextAction::DiscardAll);

  ContextPolicy off;
  off.kind = ContextPolicyKind::None;
  CHECK(apply_policy(state_of(1 << 30, 1 << 20), off) == ContextAction::None);
}

TEST_CASE("discard schedule doubles by default and honors explicit entries") {
  ContextPolicy p;
  p.max_turns = 64;
  CHECK(p.discard_threshold(0) == 64);
  CHECK(p.discard_threshold(1) == 128);
  CHECK(p.discard_threshold(2) == 256);
  CHECK(p.discard_threshold(-3) == 64);
  // The doubling shift saturates at 20 resets.
  CHECK(p.discard_threshold(25) == 64 << 20);

  ContextPolicy big;
  big.max_turns = 4096;  // 4096 << 20 overflows int
  CHECK(big.discard_threshold(25) == INT_MAX);

  ContextPolicy scheduled;
  scheduled.discard_schedule = {10, 30};
  CHECK(scheduled.discard_threshold(0) == 10);
  CHECK(scheduled.discard_threshold(1) == 30);
  CHECK(scheduled.discard_threshold(5) == 30);  // last entry repeats
}

TEST_CASE("summaries keep revealed facts and every live entity id") {
  std::vector<TrajectoryEvent> history;

  TrajectoryEvent agent;
  agent.kind = EventKind::AgentMessage;
  agent.tokens = 50;
  agent.body = {{"text", "working"}};
  history.push_back(agent);

  TrajectoryEvent reveal;
  reveal.kind = EventKind::UserMessage;
  reveal.tokens = 10;
  reveal.body = {{"reveal", {{"key", "0/label"}, {"value", "x"}}}};
  history.push_back(reveal);

  history.push_back(result_event(
      {{"read_rows", nlohmann::json::array({{{"table", "items"}, {"id", 3}}})},
       {"inserted", {{"items", {5}}}}},
      100));
  history.push_back(result_event({{"updated", {{"items", {3}}}},
                                  {"deleted", {{"items", {9}}}}},
                                 100));

  const ContextDigest digest = summarize(history, 4);

  const std::map<std::string, std::string> want_facts = {{"0/label", "\"x\""}};
  CHECK(digest.facts == want_facts);

  // Ids surface once each, in first-seen order; deleted rows are dead context.
  const std::vector<std::pair<std::string, int64_t>> want_ids = {{"items", 3}, {"items", 5}};
  CHECK(digest.entity_ids == want_ids);

  REQUIRE(digest.verbatim_results.size() == 2);
  CHECK(digest.verbatim_results[1].at("payload").count("updated") == 1);

  // span 260 vs cost 6 + 4*1 + 2*2 + 200 = 214: everything fits.
  CHECK(digest.token_cost == 214);
}

TEST_CASE("summaries keep only the last k results verbatim") {
  std::vector<TrajectoryEvent> history;
  for (int i = 1; i <= 5; ++i) {
    history.push_back(result_event({{"n", i}}, 100));
  }

  SUBCASE("k smaller than the result count trims from the front") {
    const ContextDigest digest = summarize(history, 4);
    REQUIRE(digest.verbatim_results.size() == 4);
    CHECK(digest.verbatim_results.front().at("payload").at("n") == 2);
    CHECK(digest.verbatim_results.back().at("payload").at("n") == 5);
    CHECK(digest.token_cost == 6 + 400);
  }

  SUBCASE("k of zero or below keeps nothing, and nothing costs nothing") {
    for (int k : {0, -1}) {
      const ContextDigest digest = summarize(history, k);
      CHECK(digest.verbatim_results.empty());
      CHECK(digest.empty());
      CHECK(digest.token_cost == 0);
    }
  }
}

TEST_CASE("digests undercut the span they replace by shedding verbatim detail") {
  SUBCASE("small spans shed oldest results first") {
    std::vector<TrajectoryEvent> history = {result_event({{"n", 1}}, 10),
                                            result_event({{"n", 2}}, 10)};
    // span 20; full cost 6 + 20 = 26 would not pay for itself.
    const ContextDigest digest = summarize(history, 2);
    REQUIRE(digest.verbatim_results.size() == 1);
    CHECK(digest.verbatim_results[0].at("payload").at("n") == 2);
    CHECK(digest.token_cost == 16);
  }

  SUBCASE("entity ids survive even when no verbatim result pays for itself") {
    std::vector<TrajectoryEvent> history = {result_event(
        {{"read_rows", nlohmann::json::array({{{"table", "items"}, {"id", 7}}})}}, 1000)};
    // span 1000; cost with the result kept would be 6 + 2 + 1000 = 1008.
    const ContextDigest digest = summarize(history, 4);
    CHECK(digest.verbatim_results.empty());
    const std::vector<std::pair<std::string, int64_t>> want_ids = {{"items", 7}};
    CHECK(digest.entity_ids == want_ids);
    CHECK(digest.token_cost == 8);
  }

  SUBCASE("empty history summarizes to a free digest") {
    const ContextDigest digest = summarize({}, 4);
    CHECK(digest.empty());
    CHECK(digest.token_cost == 0);
  }
}

TEST_CASE("context policy JSON round trip") {
  ContextPolicy p;
  p.kind = ContextPolicyKind::DiscardAll;
  p.summary_threshold_tokens = 12345;
  p.max_turns = 7;
  p.discard_schedule = {3, 9};

  const ContextPolicy back = ContextPolicy::from_json(p.to_json());
  CHECK(back.kind == ContextPolicyKind::DiscardAll);
  CHECK(back.summary_threshold_tokens == 12345);
  CHECK(back.max_turns == 7);
  CHECK(back.discard_schedule == std::vector<int>{3, 9});

  CHECK_THROWS_AS(ContextPolicy::from_json({{"kind", "amnesia"}}), std::invalid_argument);
}
