// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "envforge/database.hpp"
#include "envforge/errors.hpp"
#include "envforge/rng.hpp"
#include "envforge/tool_exec.hpp"
#include "support.hpp"

using namespace envforge;
using namespace testsupport;

TEST_CASE("row store assigns ids, fills defaults, and normalizes reals") {
  const DomainSchema schema = make_schema({"item"});
  DatabaseState db = DatabaseState::empty_for(schema);
  CHECK(db.next_id.at("items") == 1);

  const int64_t first = db.insert_row("items", schema, {{"label", std::string("a")}});
  const int64_t second = db.insert_row("items", schema, {{"amount", int64_t{5}}});
  CHECK(first == 1);
  CHECK(second == 2);
  const Row* row = db.find_row("items", 1);
  REQUIRE(row != nullptr);
  CHECK(std::get<std::string>(row->at("status")).empty());
  CHECK(std::get<double>(row->at("amount")) == 0.0);
  CHECK(std::get<int64_t>(row->at("id")) == 1);
  CHECK(std::get<double>(db.find_row("items", 2)->at("amount")) == 5.0);
  CHECK(db.conforms(schema));

  db.delete_row("items", 1);
  CHECK(!db.has_row("items", 1));
  // The counter never reuses a freed id.
  CHECK(db.insert_row("items", schema, {}) == 3);
  CHECK_THROWS_AS(db.update_row("items", 99, {}), std::logic_error);
  CHECK_THROWS_AS(db.delete_row("items", 99), std::logic_error);
  CHECK_THROWS_AS(db.insert_row("items", schema, {{"amount", std::string("x")}}),
                  std::invalid_argument);

  const DatabaseState back = DatabaseState::from_json(db.to_json());
  CHECK(back == db);
}

TEST_CASE("insert tool creates the row and reports what it produced") {
  const ToolGraph g = line_graph();
  DatabaseState db = DatabaseState::empty_for(g.schema);
  ToolCall call{"a_make", {{"label", std::string("first")}}};
  const ToolResult r = apply_tool(db, call, g);
  REQUIRE(r.ok());
  CHECK(r.produced.at("item") == 1);
  CHECK(std::get<std::string>(db.find_row("items", 1)->at("label")) == "first");
  CHECK(std::get<std::string>(db.find_row("items", 1)->at("status")) == "created");
  CHECK(r.payload.at("inserted").at("items") == std::vector<int64_t>{1});
}

TEST_CASE("argument failures leave the database untouched") {
  const ToolGraph g = line_graph();
  DatabaseState db = DatabaseState::empty_for(g.schema);
  const DatabaseState before = db;

  SUBCASE("missing argument") {
    const ToolResult r = apply_tool(db, ToolCall{"a_make", {}}, g);
    CHECK(r.status == ToolResult::Status::MissingArg);
  }
  SUBCASE("wrong argument type") {
    const ToolResult r = apply_tool(db, ToolCall{"a_make", {{"label", int64_t{3}}}}, g);
    CHECK(r.status == ToolResult::Status::MissingArg);
  }
  SUBCASE("missing entity") {
    const ToolResult r = apply_tool(db, ToolCall{"b_step", {{"item_ref", int64_t{5}}}}, g);
    CHECK(r.status == ToolResult::Status::MissingEntity);
  }
  SUBCASE("unknown tool is a programming fault") {
    CHECK_THROWS_AS(apply_tool(db, ToolCall{"nope", {}}, g), std::invalid_argument);
  }
  CHECK(db == before);
}

TEST_CASE("enum arguments outside the allowed set fail the precondition") {
  DomainSchema schema = make_schema({"item"});
  ToolSpec t = maker("t_mode", "item", schema);
  t.inputs.push_back(user_enum("mode", {"fast", "slow"}));
  const ToolGraph g = graph_of(schema, {t});
  DatabaseState db = DatabaseState::empty_for(schema);

  ToolCall call{"t_mode", {{"label", std::string("x")}, {"mode", std::string("warp")}}};
  CHECK(apply_tool(db, call, g).status == ToolResult::Status::PreconditionFailed);
  call.args["mode"] = std::string("fast");
  CHECK(apply_tool(db, call, g).ok());
}

TEST_CASE("reads are targeted by id and scans cap the transcript") {
  DomainSchema schema = make_schema({"item"});
  ToolSpec scan;  // no inputs: unfiltered scan over items
  scan.id = "t_scan";
  scan.domain = schema.domain;
  scan.reads = {"items"};
  scan.output_entities = {"item"};
  const ToolGraph g = graph_of(schema, {reader("r_get", "item", schema), scan});
  DatabaseState db = DatabaseState::empty_for(schema);

  CHECK(apply_tool(db, ToolCall{"t_scan", {}}, g).status ==
        ToolResult::Status::PreconditionFailed);

  for (int i = 0; i < 7; ++i) db.insert_row("items", schema, {});
  const ToolResult scanned = apply_tool(db, ToolCall{"t_scan", {}}, g);
  REQUIRE(scanned.ok());
  CHECK(scanned.payload.at("read_rows").size() == 5);  // scan limit
  CHECK(scanned.produced.at("item") == 1);             // first row read

  const ToolResult got = apply_tool(db, ToolCall{"r_get", {{"item_id", int64_t{3}}}}, g);
  REQUIRE(got.ok());
  CHECK(got.payload.at("read_rows").size() == 1);
  CHECK(got.payload.at("read_rows")[0].at("id") == 3);
}

TEST_CASE("delete tool removes the row") {
  DomainSchema schema = make_schema({"item"});
  const ToolGraph g = graph_of(schema, {purger("p_del", "item", schema)});
  DatabaseState db = DatabaseState::empty_for(schema);
  db.insert_row("items", schema, {});
  const ToolResult r = apply_tool(db, ToolCall{"p_del", {{"item_id", int64_t{1}}}}, g);
  REQUIRE(r.ok());
  CHECK(!db.has_row("items", 1));
  CHECK(r.payload.at("deleted").at("items") == std::vector<int64_t>{1});
}

TEST_CASE("execute_tool never mutates its input state") {
  const ToolGraph g = line_graph();
  const DatabaseState db = DatabaseState::empty_for(g.schema);
  const auto [r, next] = execute_tool(db, ToolCall{"a_make", {{"label", std::string("x")}}}, g);
  CHECK(r.ok());
  CHECK(db.total_rows() == 0);
  CHECK(next.total_rows() == 1);
}

TEST_CASE("replay runs a full chain from an empty database") {
  const ToolGraph g = line_graph();
  DatabaseState db = DatabaseState::empty_for(g.schema);
  ReplayLog log;
  const ReplayOutcome out = replay_chain(ToolChain{{"a_make", "b_step", "c_close"}, g.domain}, g,
                                         db, &log);
  CHECK(out.kind == ReplayOutcome::Kind::Ok);
  REQUIRE(log.calls.size() == 3);
  CHECK(std::get<std::string>(log.calls[0].args.at("label")) == "v_label");
  CHECK(std::get<int64_t>(log.calls[1].args.at("item_ref")) == 1);
  CHECK(std::get<std::string>(db.find_row("items", 1)->at("status")) == "closed");
}

TEST_CASE("replay binds the producer's output over older rows") {
  const ToolGraph g = line_graph();
  DatabaseState db = DatabaseState::empty_for(g.schema);
  db.insert_row("items", g.schema, {{"status", std::string("pre")}});
  ReplayLog log;
  REQUIRE(replay_chain(ToolChain{{"a_make", "b_step"}, g.domain}, g, db, &log).kind ==
          ReplayOutcome::Kind::Ok);
  CHECK(std::get<int64_t>(log.calls[1].args.at("item_ref")) == 2);
  CHECK(std::get<std::string>(db.find_row("items", 1)->at("status")) == "pre");
  CHECK(std::get<std::string>(db.find_row("items", 2)->at("status")) == "stepped");
}

TEST_CASE("replay falls back to the latest output of the kind") {
  const ToolGraph g = line_graph();
  DatabaseState db = DatabaseState::empty_for(g.schema);
  db.insert_row("items", g.schema, {});
  ReplayLog log;
  // c_close's declared producer b_step is absent from the chain.
  REQUIRE(replay_chain(ToolChain{{"a_make", "c_close"}, g.domain}, g, db, &log).kind ==
          ReplayOutcome::Kind::Ok);
  CHECK(std::get<int64_t>(log.calls[1].args.at("item_ref")) == 2);
}

TEST_CASE("replay falls back to the smallest existing id") {
  const ToolGraph g = line_graph();
  DatabaseState db = DatabaseState::empty_for(g.schema);
  db.insert_row("items", g.schema, {});
  db.insert_row("items", g.schema, {});
  ReplayLog log;
  REQUIRE(replay_chain(ToolChain{{"c_close"}, g.domain}, g, db, &log).kind ==
          ReplayOutcome::Kind::Ok);
  CHECK(std::get<int64_t>(log.calls[0].args.at("item_ref")) == 1);
}

TEST_CASE("a mid-chain delete drops the binding cleanly") {
  ToolGraph g = line_graph();
  g.tools["p_del"] = purger("p_del", "item", g.schema);
  DatabaseState db = DatabaseState::empty_for(g.schema);
  const ReplayOutcome out =
      replay_chain(ToolChain{{"a_make", "p_del", "b_step"}, g.domain}, g, db);
  CHECK(out.kind == ReplayOutcome::Kind::NeedRow);
  CHECK(out.table == "items");
  CHECK(out.failed_step == 2);
}

TEST_CASE("row synthesis seeds exactly what a chain is missing") {
  const ToolGraph g = line_graph();
  Rng rng(1);
  DatabaseState db = DatabaseState::empty_for(g.schema);
  db.insert_row("items", g.schema, {{"label", std::string("keep")}});
  const DatabaseState before = db;
  const ToolChain chain{{"c_close"}, g.domain};
  augment_chain_db(chain, g, db, rng);
  // Already satisfiable: nothing may change.
  CHECK(db == before);

  DatabaseState fresh = instantiate_chain_db(chain, g, rng);
  CHECK(fresh.total_rows() == 1);
  CHECK(std::get<std::string>(fresh.tables.at("items").begin()->second.at("status")) == "open");
  CHECK(replay_chain(chain, g, fresh).kind == ReplayOutcome::Kind::Ok);
}

TEST_CASE("row synthesis honors scan filters") {
  DomainSchema schema = make_schema({"item"});
  ToolSpec scan;
  scan.id = "t_filter";
  scan.domain = schema.domain;
  scan.inputs = {user_enum("status", {"special"})};
  scan.reads = {"items"};
  scan.output_entities = {"item"};
  const ToolGraph g = graph_of(schema, {scan});

  DatabaseState db = DatabaseState::empty_for(schema);
  db.insert_row("items", schema, {{"status", std::string("created")}});
  const ReplayOutcome miss = replay_chain(ToolChain{{"t_filter"}, g.domain}, g, db);
  CHECK(miss.kind == ReplayOutcome::Kind::NeedRow);
  CHECK(miss.filter_column == "status");
  CHECK(std::get<std::string>(miss.filter_value) == "special");

  Rng rng(2);
  augment_chain_db(ToolChain{{"t_filter"}, g.domain}, g, db, rng);
  CHECK(db.total_rows() == 2);
  CHECK(replay_chain(ToolChain{{"t_filter"}, g.domain}, g, db).kind == ReplayOutcome::Kind::Ok);
}

TEST_CASE("an empty enum domain is unsatisfiable") {
  DomainSchema schema = make_schema({"item"});
  ToolSpec t = updater("t_stuck", "item", {user_id("item_id", "item"), user_enum("mode", {})},
                       "never", schema);
  const ToolGraph g = graph_of(schema, {t});
  DatabaseState db = DatabaseState::empty_for(schema);
  db.insert_row("items", schema, {});

  const ReplayOutcome out = replay_chain(ToolChain{{"t_stuck"}, g.domain}, g, db);
  CHECK(out.kind == ReplayOutcome::Kind::HardFail);
  CHECK(out.detail.rfind("unsatisfiable-slot:", 0) == 0);

  Rng rng(3);
  CHECK_THROWS_AS(augment_chain_db(ToolChain{{"t_stuck"}, g.domain}, g, db, rng),
                  UnsatisfiableSlotError);
}

TEST_CASE("an unknown tool in a chain is a fault, not a missing row") {
  const ToolGraph g = line_graph();
  DatabaseState db = DatabaseState::empty_for(g.schema);
  CHECK(replay_chain(ToolChain{{"ghost"}, g.domain}, g, db).kind ==
        ReplayOutcome::Kind::HardFail);
  Rng rng(4);
  CHECK_THROWS_AS(augment_chain_db(ToolChain{{"ghost"}, g.domain}, g, db, rng),
                  std::logic_error);
}

TEST_CASE("chain instantiation is deterministic per seed") {
  const ToolGraph g = ten_tool_graph();
  // Producers are absent, so one alpha and one beta row get synthesized.
  const ToolChain chain{{"u_alpha2", "u_beta", "f_join"}, g.domain};
  Rng r1(42), r2(42), r3(43);
  const DatabaseState a = instantiate_chain_db(chain, g, r1);
  const DatabaseState b = instantiate_chain_db(chain, g, r2);
  CHECK(a == b);
  CHECK(a.total_rows() == 2);
  // A different seed may only differ in synthesized labels, never in shape.
  const DatabaseState c = instantiate_chain_db(chain, g, r3);
  CHECK(a.total_rows() == c.total_rows());
}

TEST_CASE("call and chain json round-trips are exact") {
  ToolCall call{"t", {{"a", int64_t{7}}, {"b", std::string("s")}, {"c", 2.5}}};
  CHECK(ToolCall::from_json(call.to_json()) == call);
  ToolChain chain{{"x", "y"}, "d"};
  CHECK(ToolChain::from_json(chain.to_json()) == chain);
}
