// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "envforge/domain_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>

#include "envforge/errors.hpp"
#include "envforge/rng.hpp"
#include "envforge/tool_exec.hpp"

namespace envforge {

namespace {

// Entity noun pools per domain style. Kinds are drawn in order; extra tables
// wrap around with a numeric suffix.
const std::vector<std::pair<std::string, std::vector<std::string>>>& style_pools() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> pools = {
      {"retail",
       {"order", "product", "cart", "shipment", "invoice", "customer", "refund", "coupon",
        "review", "warehouse"}},
      {"banking",
       {"account", "transfer", "card", "loan", "statement", "payee", "dispute", "deposit"}},
      {"travel", {"booking", "flight", "hotel", "itinerary", "traveler", "voucher", "seat",
                  "claim"}},
      {"healthcare", {"patient", "appointment", "prescription", "lab_test", "referral",
                      "provider", "claim", "chart"}},
      {"logistics",
       {"parcel", "route", "driver", "manifest", "depot", "pickup", "delivery", "container"}},
      {"insurance", {"policy", "claim", "quote", "adjuster", "premium", "beneficiary",
                     "endorsement", "incident"}},
      {"hr", {"employee", "position", "timesheet", "leave_request", "payroll", "candidate",
              "interview", "onboarding"}},
      {"real_estate",
       {"listing", "showing", "offer", "lease", "tenant", "inspection", "deed", "escrow"}},
      {"telecom", {"subscriber", "plan", "device", "ticket", "outage", "invoice", "port_request",
                   "tower"}},
      {"education", {"student", "course", "enrollment", "assignment", "grade", "transcript",
                     "instructor", "section"}},
      {"restaurant", {"reservation", "dining_table", "menu_item", "order_ticket", "guest",
                      "shift", "supplier", "tasting"}},
      {"fitness", {"member", "class_session", "trainer", "membership", "workout", "assessment",
                   "locker", "referral"}},
      {"library",
       {"book", "loan", "hold", "patron", "branch", "fine", "catalog_entry", "reading_event"}},
      {"automotive", {"vehicle", "work_order", "part", "technician", "estimate", "test_drive",
                      "recall", "warranty"}},
      {"energy", {"meter", "reading", "outage_report", "service_order", "tariff", "installer",
                  "rebate", "inspection"}},
      {"events",
       {"event", "venue", "ticket_order", "attendee", "sponsor", "session", "speaker", "badge"}},
      {"gaming", {"player", "match", "tournament", "loadout", "clan", "reward", "season_pass",
                  "conduct_report"}},
      {"streaming", {"profile", "subscription", "title", "watchlist", "device", "payment",
                     "download", "recommendation"}},
      {"freight", {"shipment", "carrier", "quote", "dock_slot", "customs_entry", "pallet",
                   "claim", "waybill"}},
      {"pharmacy", {"prescription", "refill", "medication", "pharmacist", "insurance_claim",
                    "counseling", "transfer_request", "inventory_lot"}},
      {"legal", {"case_file", "filing", "client", "hearing", "document", "billing_entry",
                 "deadline", "conflict_check"}},
      {"agriculture", {"field", "crop_plan", "harvest", "sensor", "irrigation_run", "shipment",
                       "soil_test", "contract"}},
      {"hospitality", {"guest", "room", "reservation", "housekeeping_task", "amenity", "folio",
                       "maintenance_ticket", "loyalty_account"}},
      {"support", {"ticket", "agent", "customer", "escalation", "kb_article", "sla_record",
                   "survey", "callback"}},
  };
  return pools;
}

const std::vector<std::string>& nouns_for_style(const std::string& style) {
  for (const auto& [name, nouns] : style_pools()) {
    if (name == style) return nouns;
  }
  static const std::vector<std::string> generic = {"record", "item", "request", "case", "note",
                                                   "batch",  "job",  "entry",   "slot", "asset"};
  return generic;
}

const std::vector<std::string> kCategories = {"basic", "standard", "premium"};
const std::vector<std::string> kVerifyModes = {"full", "quick"};

ParamSlot id_slot(const std::string& kind) {
  ParamSlot s;
  s.name = kind + "_id";
  s.value_kind = ValueKind::EntityId;
  s.source = SlotSource::UserProvided;
  s.entity_kind = kind;
  return s;
}

ParamSlot text_slot(const std::string& name) {
  ParamSlot s;
  s.name = name;
  s.value_kind = ValueKind::Text;
  s.source = SlotSource::UserProvided;
  return s;
}

ParamSlot scalar_slot(const std::string& name) {
  ParamSlot s;
  s.name = name;
  s.value_kind = ValueKind::Scalar;
  s.source = SlotSource::UserProvided;
  return s;
}

ParamSlot enum_slot(const std::string& name, std::vector<std::string> values) {
  ParamSlot s;
  s.name = name;
  s.value_kind = ValueKind::Enum;
  s.source = SlotSource::UserProvided;
  s.enum_values = std::move(values);
  return s;
}

WriteEffect update_effect(const std::string& table, const std::string& target,
                          std::map<std::string, ColumnSpec> columns) {
  WriteEffect e;
  e.table = table;
  e.kind = EffectKind::Update;
  e.columns = std::move(columns);
  e.target_slot = target;
  return e;
}

// Template families, in rank-major order: one family is stamped out for every
// entity kind before the next family starts, so producers for every kind sit
// at the lowest ranks.
ToolSpec make_family_tool(int family, const std::string& kind, const std::string& parent_kind,
                          const DomainSchema& schema, const std::string& domain) {
  const std::string table = schema.table_of(kind);
  ToolSpec t;
  t.domain = domain;
  switch (family) {
    case 0: {  // create
      t.id = "create_" + kind;
      t.inputs = {text_slot("label"), scalar_slot("amount"), enum_slot("category", kCategories)};
      WriteEffect e;
      e.table = table;
      e.kind = EffectKind::Insert;
      e.columns["label"] = ColumnSpec::from_slot("label");
      e.columns["amount"] = ColumnSpec::from_slot("amount");
      e.columns["category"] = ColumnSpec::from_slot("category");
      e.columns["status"] = ColumnSpec::from_constant(std::string("created"));
      if (!parent_kind.empty()) {
        ParamSlot parent = id_slot(parent_kind);
        parent.name = parent_kind + "_ref";
        t.inputs.push_back(parent);
        e.columns["parent_ref"] = ColumnSpec::from_slot(parent_kind + "_ref");
      }
      t.writes = {e};
      t.output_entities = {kind};
      break;
    }
    case 1:  // get
      t.id = "get_" + kind;
      t.inputs = {id_slot(kind)};
      t.reads = {table};
      t.output_entities = {kind};
      break;
    case 2:  // update
      t.id = "update_" + kind;
      t.inputs = {id_slot(kind), scalar_slot("amount")};
      t.writes = {update_effect(table, kind + "_id",
                                {{"amount", ColumnSpec::from_slot("amount")},
                                 {"status", ColumnSpec::from_constant(std::string("updated"))}})};
      t.output_entities = {kind};
      break;
    case 3:  // cancel
      t.id = "cancel_" + kind;
      t.inputs = {id_slot(kind)};
      t.writes = {update_effect(
          table, kind + "_id",
          {{"status", ColumnSpec::from_constant(std::string("cancelled"))}})};
      break;
    case 4:  // list
      t.id = "list_" + kind;
      t.inputs = {enum_slot("category", kCategories)};
      t.reads = {table};
      t.output_entities = {kind};
      break;
    case 5:  // verify
      t.id = "verify_" + kind;
      t.inputs = {id_slot(kind), enum_slot("mode", kVerifyModes)};
      t.reads = {table};
      t.output_entities = {kind};
      break;
    case 6:  // close
      t.id = "close_" + kind;
      t.inputs = {id_slot(kind)};
      t.writes = {update_effect(table, kind + "_id",
                                {{"status", ColumnSpec::from_constant(std::string("closed"))}})};
      break;
    case 7:  // tag
      t.id = "tag_" + kind;
      t.inputs = {id_slot(kind), text_slot("label")};
      t.writes = {update_effect(table, kind + "_id",
                                {{"label", ColumnSpec::from_slot("label")}})};
      t.output_entities = {kind};
      break;
    case 8: {  // purge
      t.id = "purge_" + kind;
      t.inputs = {id_slot(kind)};
      WriteEffect e;
      e.table = table;
      e.kind = EffectKind::Delete;
      e.target_slot = kind + "_id";
      t.writes = {e};
      break;
    }
    case 9: {  // clone
      t.id = "clone_" + kind;
      t.inputs = {id_slot(kind)};
      t.reads = {table};
      WriteEffect e;
      e.table = table;
      e.kind = EffectKind::Insert;
      e.columns["label"] = ColumnSpec::from_constant(std::string("copy"));
      e.columns["amount"] = ColumnSpec::from_constant(0.0);
      e.columns["category"] = ColumnSpec::from_constant(std::string("basic"));
      e.columns["status"] = ColumnSpec::from_constant(std::string("created"));
      t.writes = {e};
      t.output_entities = {kind};
      break;
    }
    default: {  // audit2, audit3, ... read-only reviews
      t.id = "audit" + std::to_string(family - 9) + "_" + kind;
      t.inputs = {id_slot(kind)};
      t.reads = {table};
      t.output_entities = {kind};
      break;
    }
  }
  return t;
}

}  // namespace

std::string to_string(ValueKind k) {
  switch (k) {
    case ValueKind::EntityId: return "entity-id";
    case ValueKind::Scalar: return "scalar";
    case ValueKind::Enum: return "enum";
    case ValueKind::Text: return "text";
  }
  return "?";
}

std::string to_string(SlotSource s) {
  switch (s) {
    case SlotSource::UserProvided: return "user-provided";
    case SlotSource::ProducedByTool: return "produced-by-tool";
    case SlotSource::Constant: return "constant";
  }
  return "?";
}

std::string to_string(EffectKind e) {
  switch (e) {
    case EffectKind::Insert: return "insert";
    case EffectKind::Update: return "update";
    case EffectKind::Delete: return "delete";
  }
  return "?";
}

std::string to_string(ColumnType t) {
  switch (t) {
    case ColumnType::Int: return "int";
    case ColumnType::Real: return "real";
    case ColumnType::Text: return "text";
    case ColumnType::Bool: return "bool";
  }
  return "?";
}

namespace {

ValueKind value_kind_from(const std::string& s) {
  if (s == "entity-id") return ValueKind::EntityId;
  if (s == "scalar") return ValueKind::Scalar;
  if (s == "enum") return ValueKind::Enum;
  if (s == "text") return ValueKind::Text;
  throw std::invalid_argument("unknown value kind: " + s);
}

SlotSource slot_source_from(const std::string& s) {
  if (s == "user-provided") return SlotSource::UserProvided;
  if (s == "produced-by-tool") return SlotSource::ProducedByTool;
  if (s == "constant") return SlotSource::Constant;
  throw std::invalid_argument("unknown slot source: " + s);
}

EffectKind effect_kind_from(const std::string& s) {
  if (s == "insert") return EffectKind::Insert;
  if (s == "update") return EffectKind::Update;
  if (s == "delete") return EffectKind::Delete;
  throw std::invalid_argument("unknown effect kind: " + s);
}

ColumnType column_type_from(const std::string& s) {
  if (s == "int") return ColumnType::Int;
  if (s == "real") return ColumnType::Real;
  if (s == "text") return ColumnType::Text;
  if (s == "bool") return ColumnType::Bool;
  throw std::invalid_argument("unknown column type: " + s);
}

}  // namespace

const ParamSlot* ToolSpec::find_slot(const std::string& name) const {
  for (const auto& s : inputs) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const std::string& DomainSchema::table_of(const std::string& kind) const {
  auto it = entity_kinds.find(kind);
  if (it == entity_kinds.end()) throw std::invalid_argument("unknown entity kind: " + kind);
  return it->second;
}

double ToolGraph::density() const {
  const size_t n = tools.size();
  if (n < 2) return 0.0;
  return static_cast<double>(edges.size()) / (0.5 * static_cast<double>(n) * (n - 1));
}

std::vector<std::string> ToolGraph::topo_order() const {
  std::map<std::string, int> indeg;
  std::map<std::string, std::vector<std::string>> succ;
  for (const auto& [id, spec] : tools) {
    (void)spec;
    indeg[id] = 0;
  }
  for (const auto& [a, b] : edges) {
    succ[a].push_back(b);
    ++indeg[b];
  }
  // Kahn with a sorted ready set for deterministic order.
  std::set<std::string> ready;
  for (const auto& [id, d] : indeg) {
    if (d == 0) ready.insert(id);
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const auto& nxt : succ[id]) {
      if (--indeg[nxt] == 0) ready.insert(nxt);
    }
  }
  if (order.size() != tools.size()) return {};
  return order;
}

bool ToolGraph::is_dag() const { return tools.empty() || !topo_order().empty(); }

std::vector<std::string> ToolGraph::producers_of(const std::string& kind) const {
  std::vector<std::string> out;
  for (const auto& [id, spec] : tools) {
    if (std::find(spec.output_entities.begin(), spec.output_entities.end(), kind) !=
        spec.output_entities.end()) {
      out.push_back(id);
    }
  }
  return out;
}

double ValidationReport::pass_rate() const {
  if (entries.empty()) return 1.0;
  size_t ok = 0;
  for (const auto& e : entries) {
    if (e.ok()) ++ok;
  }
  return static_cast<double>(ok) / entries.size();
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json out;
  out["pass"] = pass;
  out["pass_rate"] = pass_rate();
  out["entries"] = nlohmann::json::array();
  for (const auto& e : entries) {
    out["entries"].push_back({{"tool_id", e.tool_id},
                              {"executable", e.executable},
                              {"edges_consistent", e.edges_consistent},
                              {"detail", e.detail}});
  }
  return out;
}

const std::vector<std::string>& domain_styles() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, nouns] : style_pools()) {
      (void)nouns;
      v.push_back(name);
    }
    return v;
  }();
  return names;
}

std::pair<DomainSchema, ToolGraph> generate_domain(uint64_t seed, const DomainGenConfig& config) {
  if (config.tool_count < 1) throw InfeasibleConfigError("tool_count must be >= 1");
  if (config.table_count < 1) throw InfeasibleConfigError("table_count must be >= 1");
  if (!(config.edge_density > 0.0 && config.edge_density < 1.0)) {
    throw InfeasibleConfigError("edge_density must lie in (0,1)");
  }

  Rng rng(seed ^ Rng::hash_str(config.style));
  const auto& nouns = nouns_for_style(config.style);
  const std::string domain = config.style;

  // Schema: one table per entity kind, shared column layout. Kinds past the
  // noun pool wrap around with a numeric suffix.
  DomainSchema schema;
  schema.domain = domain;
  std::vector<std::string> kinds;
  for (int i = 0; i < config.table_count; ++i) {
    std::string kind = nouns[i % nouns.size()];
    if (i >= static_cast<int>(nouns.size())) {
      kind += "_" + std::to_string(i / nouns.size() + 1);
    }
    kinds.push_back(kind);
    const std::string table = kind + "s";
    schema.entity_kinds[kind] = table;
    std::vector<Column> cols = {{"id", ColumnType::Int},
                                {"status", ColumnType::Text},
                                {"label", ColumnType::Text},
                                {"amount", ColumnType::Real},
                                {"category", ColumnType::Text}};
    if (i > 0) cols.push_back({"parent_ref", ColumnType::Int});
    schema.tables[table] = cols;
  }

  const int n = config.tool_count;
  const double max_pairs = 0.5 * static_cast<double>(n) * (n - 1);
  const int target_edges =
      n < 2 ? 0 : std::max(1, static_cast<int>(std::lround(config.edge_density * max_pairs)));

  int aux = config.aux_ref_slots;
  if (aux < 0) {
    aux = n > 0 ? std::min(6, std::max(1, static_cast<int>(std::ceil(
                                              static_cast<double>(target_edges) / n))))
                : 0;
  }

  // Stamp out tools in rank-major family order and attach the extra
  // convertible reference slots.
  std::vector<ToolSpec> ranked;
  const int num_kinds = static_cast<int>(kinds.size());
  for (int r = 0; r < n; ++r) {
    const int family = r / num_kinds;
    const int k = r % num_kinds;
    const std::string parent = k > 0 ? kinds[k - 1] : "";
    ToolSpec t = make_family_tool(family, kinds[k], parent, schema, domain);
    for (int a = 0; a < aux; ++a) {
      const std::string ref_kind = kinds[rng.index(kinds.size())];
      ParamSlot s;
      s.value_kind = ValueKind::EntityId;
      s.source = SlotSource::UserProvided;
      s.entity_kind = ref_kind;
      s.name = "ref_" + ref_kind;
      int dup = 2;
      while (t.find_slot(s.name) != nullptr) {
        s.name = "ref_" + ref_kind + "_" + std::to_string(dup++);
      }
      t.inputs.push_back(s);
    }
    ranked.push_back(std::move(t));
  }

  // Candidate rewires: (consumer rank, slot index, producer rank) where the
  // producer outputs the slot's entity kind and sits strictly earlier. A
  // shuffled greedy pass converts slots until the edge target is met.
  std::map<std::string, std::vector<int>> producers_by_kind;  // kind -> ranks
  for (int r = 0; r < n; ++r) {
    for (const auto& kind : ranked[r].output_entities) producers_by_kind[kind].push_back(r);
  }
  struct Candidate {
    int consumer;
    int slot;
    int producer;
  };
  std::vector<Candidate> candidates;
  for (int r = 0; r < n; ++r) {
    for (size_t si = 0; si < ranked[r].inputs.size(); ++si) {
      const ParamSlot& slot = ranked[r].inputs[si];
      if (slot.value_kind != ValueKind::EntityId || slot.source != SlotSource::UserProvided) {
        continue;
      }
      auto it = producers_by_kind.find(slot.entity_kind);
      if (it == producers_by_kind.end()) continue;
      for (int p : it->second) {
        if (p < r) candidates.push_back({r, static_cast<int>(si), p});
      }
    }
  }
  rng.shuffle(candidates);

  std::set<std::pair<int, int>> edge_ranks;
  std::set<std::pair<int, int>> converted;  // (consumer, slot)
  for (const auto& c : candidates) {
    if (static_cast<int>(edge_ranks.size()) >= target_edges) break;
    if (converted.count({c.consumer, c.slot})) continue;
    if (edge_ranks.count({c.producer, c.consumer})) continue;
    ParamSlot& slot = ranked[c.consumer].inputs[c.slot];
    slot.source = SlotSource::ProducedByTool;
    slot.producer = ranked[c.producer].id;
    converted.insert({c.consumer, c.slot});
    edge_ranks.insert({c.producer, c.consumer});
  }
  if (static_cast<int>(edge_ranks.size()) < target_edges) {
    std::ostringstream msg;
    msg << "edge density " << config.edge_density << " unachievable: reached "
        << edge_ranks.size() << " of " << target_edges << " edges for " << n << " tools";
    throw InfeasibleConfigError(msg.str());
  }

  ToolGraph graph;
  graph.domain = domain;
  graph.schema = schema;
  for (auto& t : ranked) graph.tools[t.id] = t;
  for (const auto& [p, c] : edge_ranks) graph.edges.insert({ranked[p].id, ranked[c].id});
  return {schema, graph};
}

ValidationReport validate_toolset(const ToolGraph& graph) {
  ValidationReport report;

  // Consumer-side edge bookkeeping for the "edge iff slot" direction.
  std::map<std::string, std::set<std::string>> edge_producers;  // consumer -> producers
  for (const auto& [a, b] : graph.edges) edge_producers[b].insert(a);

  for (const auto& [id, spec] : graph.tools) {
    ToolValidation v;
    v.tool_id = id;
    std::vector<std::string> problems;

    // Dependency-edge consistency.
    std::set<std::string> slot_producers;
    for (const auto& slot : spec.inputs) {
      if (slot.value_kind == ValueKind::Enum && slot.enum_values.empty()) {
        problems.push_back("enum slot '" + slot.name + "' has no values");
      }
      if (slot.source != SlotSource::ProducedByTool) continue;
      slot_producers.insert(slot.producer);
      auto pit = graph.tools.find(slot.producer);
      if (pit == graph.tools.end()) {
        problems.push_back("slot '" + slot.name + "' references missing producer '" +
                           slot.producer + "'");
        continue;
      }
      if (!graph.has_edge(slot.producer, id)) {
        problems.push_back("missing edge " + slot.producer + " -> " + id);
      }
      const auto& outs = pit->second.output_entities;
      if (std::find(outs.begin(), outs.end(), slot.entity_kind) == outs.end()) {
        problems.push_back("producer '" + slot.producer + "' does not output kind '" +
                           slot.entity_kind + "'");
      }
    }
    for (const auto& p : edge_producers[id]) {
      if (!slot_producers.count(p)) {
        problems.push_back("edge " + p + " -> " + id + " backed by no slot");
      }
    }
    for (const auto& t : spec.reads) {
      if (!graph.schema.tables.count(t)) problems.push_back("read of unknown table '" + t + "'");
    }
    for (const auto& w : spec.writes) {
      if (!graph.schema.tables.count(w.table)) {
        problems.push_back("write to unknown table '" + w.table + "'");
      }
      if (w.kind != EffectKind::Insert && spec.find_slot(w.target_slot) == nullptr) {
        problems.push_back("write target slot '" + w.target_slot + "' not an input");
      }
    }
    v.edges_consistent = problems.empty();

    // Executability: replay the tool behind its transitive producer closure
    // against a minimally instantiated database.
    std::set<std::string> closure;
    std::deque<std::string> work{id};
    bool closed_ok = true;
    while (!work.empty()) {
      const std::string cur = work.front();
      work.pop_front();
      if (!closure.insert(cur).second) continue;
      auto it = graph.tools.find(cur);
      if (it == graph.tools.end()) {
        closed_ok = false;
        break;
      }
      for (const auto& slot : it->second.inputs) {
        if (slot.source == SlotSource::ProducedByTool) work.push_back(slot.producer);
      }
    }
    if (!closed_ok) {
      v.executable = false;
      problems.push_back("producer closure incomplete");
    } else {
      std::vector<std::string> order;
      for (const auto& t : graph.topo_order()) {
        if (closure.count(t) && t != id) order.push_back(t);
      }
      order.push_back(id);
      ToolChain chain{order, graph.domain};
      try {
        Rng rng(Rng::hash_str(id));
        DatabaseState db = instantiate_chain_db(chain, graph, rng);
        auto outcome = replay_chain(chain, graph, db);
        v.executable = outcome.kind == ReplayOutcome::Kind::Ok;
        if (!v.executable) problems.push_back("replay failed: " + outcome.detail);
      } catch (const std::exception& e) {
        v.executable = false;
        problems.push_back(std::string("instantiation failed: ") + e.what());
      }
    }

    for (size_t i = 0; i < problems.size(); ++i) {
      if (i) v.detail += "; ";
      v.detail += problems[i];
    }
    report.pass = report.pass && v.ok();
    report.entries.push_back(std::move(v));
  }
  return report;
}

namespace {

nlohmann::json slot_to_json(const ParamSlot& s) {
  return {{"name", s.name},
          {"value_kind", to_string(s.value_kind)},
          {"source", to_string(s.source)},
          {"producer", s.producer},
          {"entity_kind", s.entity_kind},
          {"enum_values", s.enum_values},
          {"constant", value_to_json(s.constant)}};
}

ParamSlot slot_from_json(const nlohmann::json& j) {
  ParamSlot s;
  s.name = j.at("name").get<std::string>();
  s.value_kind = value_kind_from(j.at("value_kind").get<std::string>());
  s.source = slot_source_from(j.at("source").get<std::string>());
  s.producer = j.at("producer").get<std::string>();
  s.entity_kind = j.at("entity_kind").get<std::string>();
  s.enum_values = j.at("enum_values").get<std::vector<std::string>>();
  s.constant = value_from_json(j.at("constant"));
  return s;
}

nlohmann::json effect_to_json(const WriteEffect& e) {
  nlohmann::json cols = nlohmann::json::object();
  for (const auto& [name, spec] : e.columns) {
    if (spec.from == ColumnSpec::From::Slot) {
      cols[name] = {{"from", "slot"}, {"slot", spec.slot}};
    } else {
      cols[name] = {{"from", "constant"}, {"value", value_to_json(spec.constant)}};
    }
  }
  return {{"table", e.table},
          {"kind", to_string(e.kind)},
          {"columns", cols},
          {"target_slot", e.target_slot}};
}

WriteEffect effect_from_json(const nlohmann::json& j) {
  WriteEffect e;
  e.table = j.at("table").get<std::string>();
  e.kind = effect_kind_from(j.at("kind").get<std::string>());
  e.target_slot = j.at("target_slot").get<std::string>();
  for (const auto& [name, spec] : j.at("columns").items()) {
    if (spec.at("from").get<std::string>() == "slot") {
      e.columns[name] = ColumnSpec::from_slot(spec.at("slot").get<std::string>());
    } else {
      e.columns[name] = ColumnSpec::from_constant(value_from_json(spec.at("value")));
    }
  }
  return e;
}

}  // namespace

nlohmann::json graph_to_json(const ToolGraph& graph) {
  nlohmann::json schema;
  schema["domain"] = graph.schema.domain;
  schema["tables"] = nlohmann::json::object();
  for (const auto& [table, cols] : graph.schema.tables) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : cols) arr.push_back({{"name", c.name}, {"type", to_string(c.type)}});
    schema["tables"][table] = arr;
  }
  schema["entity_kinds"] = graph.schema.entity_kinds;

  nlohmann::json tools = nlohmann::json::object();
  for (const auto& [id, spec] : graph.tools) {
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& s : spec.inputs) inputs.push_back(slot_to_json(s));
    nlohmann::json writes = nlohmann::json::array();
    for (const auto& w : spec.writes) writes.push_back(effect_to_json(w));
    tools[id] = {{"id", spec.id},          {"domain", spec.domain},
                 {"inputs", inputs},       {"reads", spec.reads},
                 {"writes", writes},       {"output_entities", spec.output_entities}};
  }

  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : graph.edges) edges.push_back({a, b});

  return {{"schema_version", 1},
          {"domain", graph.domain},
          {"schema", schema},
          {"tools", tools},
          {"edges", edges}};
}

ToolGraph graph_from_json(const nlohmann::json& j) {
  if (j.at("schema_version").get<int>() != 1) {
    throw std::invalid_argument("unsupported graph schema_version");
  }
  ToolGraph g;
  g.domain = j.at("domain").get<std::string>();
  const auto& schema = j.at("schema");
  g.schema.domain = schema.at("domain").get<std::string>();
  for (const auto& [table, cols] : schema.at("tables").items()) {
    std::vector<Column> parsed;
    for (const auto& c : cols) {
      parsed.push_back({c.at("name").get<std::string>(),
                        column_type_from(c.at("type").get<std::string>())});
    }
    g.schema.tables[table] = parsed;
  }
  g.schema.entity_kinds =
      schema.at("entity_kinds").get<std::map<std::string, std::string>>();
  for (const auto& [id, spec] : j.at("tools").items()) {
    ToolSpec t;
    t.id = spec.at("id").get<std::string>();
    if (t.id != id) throw std::invalid_argument("tool key/id mismatch: " + id);
    t.domain = spec.at("domain").get<std::string>();
    for (const auto& s : spec.at("inputs")) t.inputs.push_back(slot_from_json(s));
    t.reads = spec.at("reads").get<std::vector<std::string>>();
    for (const auto& w : spec.at("writes")) t.writes.push_back(effect_from_json(w));
    t.output_entities = spec.at("output_entities").get<std::vector<std::string>>();
    g.tools[id] = std::move(t);
  }
  for (const auto& e : j.at("edges")) {
    g.edges.insert({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
  }
  return g;
}

}  // namespace envforge
