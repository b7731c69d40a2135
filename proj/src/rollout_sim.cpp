// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "envforge/rollout_sim.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <stdexcept>

#include "envforge/errors.hpp"

namespace envforge {

namespace {

std::string dist_kind_name(DistSpec::Kind k) {
  switch (k) {
    case DistSpec::Kind::Constant: return "constant";
    case DistSpec::Kind::Uniform: return "uniform";
    case DistSpec::Kind::LogNormal: return "lognormal";
    case DistSpec::Kind::Pareto: return "pareto";
    case DistSpec::Kind::Exponential: return "exponential";
  }
  return "constant";
}

DistSpec::Kind dist_kind_from(const std::string& s) {
  if (s == "constant") return DistSpec::Kind::Constant;
  if (s == "uniform") return DistSpec::Kind::Uniform;
  if (s == "lognormal") return DistSpec::Kind::LogNormal;
  if (s == "pareto") return DistSpec::Kind::Pareto;
  if (s == "exponential") return DistSpec::Kind::Exponential;
  throw std::invalid_argument("unknown distribution kind: " + s);
}

}  // namespace

double DistSpec::sample(Rng& rng) const {
  switch (kind) {
    case Kind::Constant: return a;
    case Kind::Uniform: return a + (b - a) * rng.uniform01();
    case Kind::LogNormal: return rng.lognormal(a, b);
    case Kind::Pareto: return rng.pareto(a, b);
    case Kind::Exponential: return rng.exponential(a);
  }
  return a;
}

nlohmann::json DistSpec::to_json() const {
  return {{"kind", dist_kind_name(kind)}, {"a", a}, {"b", b}};
}

DistSpec DistSpec::from_json(const nlohmann::json& j) {
  DistSpec d;
  d.kind = dist_kind_from(j.value("kind", std::string("constant")));
  d.a = j.value("a", d.a);
  d.b = j.value("b", d.b);
  return d;
}

nlohmann::json CpuSwapConfig::to_json() const {
  return {{"enabled", enabled}, {"watermark", watermark}, {"swap_cost", swap_cost}};
}

CpuSwapConfig CpuSwapConfig::from_json(const nlohmann::json& j) {
  CpuSwapConfig c;
  c.enabled = j.value("enabled", c.enabled);
  c.watermark = j.value("watermark", c.watermark);
  c.swap_cost = j.value("swap_cost", c.swap_cost);
  return c;
}

nlohmann::json PdConfig::to_json() const {
  return {{"disaggregated", disaggregated},
          {"prefill_devices", prefill_devices},
          {"decode_devices", decode_devices},
          {"chunk_size", chunk_size},
          {"link_rate", link_rate},
          {"chunk_compute", chunk_compute}};
}

PdConfig PdConfig::from_json(const nlohmann::json& j) {
  PdConfig c;
  c.disaggregated = j.value("disaggregated", c.disaggregated);
  c.prefill_devices = j.value("prefill_devices", c.prefill_devices);
  c.decode_devices = j.value("decode_devices", c.decode_devices);
  c.chunk_size = j.value("chunk_size", c.chunk_size);
  c.link_rate = j.value("link_rate", c.link_rate);
  c.chunk_compute = j.value("chunk_compute", c.chunk_compute);
  return c;
}

nlohmann::json ClusterConfig::to_json() const {
  return {{"gen_devices", gen_devices},
          {"env_workers", env_workers},
          {"device_capacity", device_capacity},
          {"initial_capacity", initial_capacity},
          {"first_balance_time", first_balance_time},
          {"kv_blocks_per_device", kv_blocks_per_device},
          {"kv_block_tokens", kv_block_tokens},
          {"cpu_swap", cpu_swap.to_json()},
          {"pd", pd.to_json()},
          {"max_version_lag", max_version_lag},
          {"train_batch_size", train_batch_size},
          {"train_step_time", train_step_time},
          {"version_every_batches", version_every_batches},
          {"elastic", elastic},
          {"model_recompute", model_recompute},
          {"alpha_prefill", alpha_prefill},
          {"beta_decode", beta_decode},
          {"gamma_slowdown", gamma_slowdown}};
}

ClusterConfig ClusterConfig::from_json(const nlohmann::json& j) {
  ClusterConfig c;
  c.gen_devices = j.value("gen_devices", c.gen_devices);
  c.env_workers = j.value("env_workers", c.env_workers);
  c.device_capacity = j.value("device_capacity", c.device_capacity);
  c.initial_capacity = j.value("initial_capacity", c.initial_capacity);
  c.first_balance_time = j.value("first_balance_time", c.first_balance_time);
  c.kv_blocks_per_device = j.value("kv_blocks_per_device", c.kv_blocks_per_device);
  c.kv_block_tokens = j.value("kv_block_tokens", c.kv_block_tokens);
  if (j.count("cpu_swap")) c.cpu_swap = CpuSwapConfig::from_json(j.at("cpu_swap"));
  if (j.count("pd")) c.pd = PdConfig::from_json(j.at("pd"));
  c.max_version_lag = j.value("max_version_lag", c.max_version_lag);
  c.train_batch_size = j.value("train_batch_size", c.train_batch_size);
  c.train_step_time = j.value("train_step_time", c.train_step_time);
  c.version_every_batches = j.value("version_every_batches", c.version_every_batches);
  c.elastic = j.value("elastic", c.elastic);
  c.model_recompute = j.value("model_recompute", c.model_recompute);
  c.alpha_prefill = j.value("alpha_prefill", c.alpha_prefill);
  c.beta_decode = j.value("beta_decode", c.beta_decode);
  c.gamma_slowdown = j.value("gamma_slowdown", c.gamma_slowdown);
  return c;
}

nlohmann::json WorkloadModel::to_json() const {
  return {{"num_samples", num_samples},
          {"num_domains", num_domains},
          {"domain_weights", domain_weights},
          {"prompt_tokens", prompt_tokens.to_json()},
          {"decode_tokens", decode_tokens.to_json()},
          {"env_latency", env_latency.to_json()},
          {"turns", turns.to_json()}};
}

WorkloadModel WorkloadModel::from_json(const nlohmann::json& j) {
  WorkloadModel w;
  w.num_samples = j.value("num_samples", w.num_samples);
  w.num_domains = j.value("num_domains", w.num_domains);
  w.domain_weights = j.value("domain_weights", w.domain_weights);
  if (j.count("prompt_tokens")) w.prompt_tokens = DistSpec::from_json(j.at("prompt_tokens"));
  if (j.count("decode_tokens")) w.decode_tokens = DistSpec::from_json(j.at("decode_tokens"));
  if (j.count("env_latency")) w.env_latency = DistSpec::from_json(j.at("env_latency"));
  if (j.count("turns")) w.turns = DistSpec::from_json(j.at("turns"));
  return w;
}

std::string to_string(SimMode m) { return m == SimMode::Sync ? "sync" : "async"; }

nlohmann::json SimMetrics::to_json() const {
  return {{"makespan", makespan},
          {"samples_per_sec", samples_per_sec},
          {"request_load_ratio", request_load_ratio},
          {"staleness_mean", staleness_mean},
          {"staleness_max", staleness_max},
          {"per_domain_counts", per_domain_counts},
          {"kv_recomputations", kv_recomputations},
          {"transfer_overlap_ratio", transfer_overlap_ratio},
          {"generated", generated},
          {"trained", trained},
          {"rejected_stale", rejected_stale},
          {"in_flight", in_flight}};
}

bool staleness_admit(SampleQueueState& queue, int sample_version, int current_version,
                     int max_lag) {
  if (sample_version < 0 || current_version < 0) {
    throw std::invalid_argument("versions must be nonnegative");
  }
  queue.current_version = current_version;
  const bool ok = current_version - sample_version <= max_lag;
  if (ok) {
    queue.admitted += 1;
  } else {
    queue.rejected += 1;
  }
  return ok;
}

double request_load_ratio(const std::vector<OccupancyTimeline>& devices, int capacity) {
  if (capacity <= 0) throw std::invalid_argument("capacity must be positive");
  if (devices.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& dev : devices) {
    if (dev.end_time <= 0.0) continue;  // idle device contributes 0
    double integral = 0.0;
    for (size_t i = 0; i < dev.steps.size(); ++i) {
      const double t0 = dev.steps[i].first;
      const double t1 = i + 1 < dev.steps.size() ? dev.steps[i + 1].first : dev.end_time;
      if (t1 > t0) integral += dev.steps[i].second * (t1 - t0);
    }
    sum += std::clamp(integral / dev.end_time / capacity, 0.0, 1.0);
  }
  return sum / static_cast<double>(devices.size());
}

int two_phase_caps(double sim_time, double first_balance_time, int initial_cap, int steady_cap) {
  if (initial_cap <= 0 || steady_cap <= 0) throw std::invalid_argument("caps must be positive");
  return sim_time < first_balance_time ? initial_cap : steady_cap;
}

TransferTimeline pd_transfer_schedule(int64_t prompt_tokens, int chunk_size, double link_rate,
                                      const DecodeStartPolicy& policy) {
  if (chunk_size <= 0) throw std::invalid_argument("chunk_size must be positive");
  if (prompt_tokens < 0 || link_rate <= 0.0) {
    throw std::invalid_argument("tokens nonnegative and link_rate positive required");
  }
  TransferTimeline tl;
  const int64_t total = std::max<int64_t>(prompt_tokens, 1);
  const int n_chunks = static_cast<int>((total + chunk_size - 1) / chunk_size);

  double transfer_cursor = 0.0;
  double compute_cursor =
      policy.when == DecodeStartPolicy::When::AfterAll
          ? static_cast<double>(total) / link_rate  // all chunks land first
          : 0.0;
  for (int i = 0; i < n_chunks; ++i) {
    const int64_t tokens =
        i + 1 < n_chunks ? chunk_size : total - static_cast<int64_t>(i) * chunk_size;
    TransferTimeline::ChunkSpan span;
    span.chunk = i;
    span.transfer_start = transfer_cursor;
    span.transfer_end = transfer_cursor + static_cast<double>(tokens) / link_rate;
    transfer_cursor = span.transfer_end;
    span.compute_start = std::max(span.transfer_end, compute_cursor);
    span.compute_end = span.compute_start + policy.compute_per_chunk;
    compute_cursor = span.compute_end;
    tl.total_transfer_time += span.transfer_end - span.transfer_start;
    tl.chunks.push_back(span);
  }
  tl.decode_ready_time = tl.chunks.back().compute_end;

  // Transfer time hidden behind some chunk's consumer-side compute.
  for (const auto& t : tl.chunks) {
    for (const auto& c : tl.chunks) {
      const double lo = std::max(t.transfer_start, c.compute_start);
      const double hi = std::min(t.transfer_end, c.compute_end);
      if (hi > lo) tl.overlapped_transfer += hi - lo;
    }
  }
  tl.overlap_ratio =
      tl.total_transfer_time > 0.0 ? tl.overlapped_transfer / tl.total_transfer_time : 0.0;
  return tl;
}

std::vector<KvSwapAction> kv_swap_step(double usage, double watermark,
                                       const std::vector<KvBlockGroup>& lru_groups,
                                       double swap_cost, int64_t total_blocks) {
  if (usage < 0.0 || usage > 1.0) throw std::invalid_argument("usage must lie in [0,1]");
  if (watermark <= 0.0 || watermark > 1.0) throw std::invalid_argument("watermark in (0,1]");
  if (total_blocks <= 0) throw std::invalid_argument("total_blocks must be positive");
  std::vector<KvSwapAction> actions;
  if (usage < watermark) return actions;

  std::vector<KvBlockGroup> order = lru_groups;
  std::stable_sort(order.begin(), order.end(), [](const KvBlockGroup& a, const KvBlockGroup& b) {
    if (a.last_use != b.last_use) return a.last_use < b.last_use;
    return a.request < b.request;
  });
  double used = usage * static_cast<double>(total_blocks);
  for (const auto& g : order) {
    if (used / static_cast<double>(total_blocks) < watermark) break;
    actions.push_back({g.request, g.blocks, static_cast<double>(g.blocks) * swap_cost});
    used -= static_cast<double>(g.blocks);
  }
  return actions;
}

std::string domain_oversample_dispatch(const std::vector<std::string>& domains,
                                       const std::map<std::string, double>& ratios,
                                       SwrrState& state) {
  if (domains.empty()) throw std::invalid_argument("domains must be nonempty");
  double total = 0.0;
  for (const auto& d : domains) {
    const auto it = ratios.find(d);
    if (it == ratios.end() || !(it->second > 0.0)) {
      throw std::invalid_argument("every domain needs a positive ratio: " + d);
    }
    total += it->second;
  }
  std::string best;
  double best_current = 0.0;
  for (const auto& d : domains) {
    state.current[d] += ratios.at(d);
    if (best.empty() || state.current[d] > best_current) {
      best = d;
      best_current = state.current[d];
    }
  }
  state.current[best] -= total;
  return best;
}

namespace {

// ---------------------------------------------------------------------------
// Event-driven engine
// ---------------------------------------------------------------------------

struct SamplePlan {
  int64_t id = 0;
  std::string domain;
  int64_t prompt_tokens = 1;
  int turns = 1;
  std::vector<int64_t> decode_tokens;
  std::vector<double> env_latency;
  int64_t total_tokens = 0;  // prompt + all decode
};

struct Request {
  int64_t sample = 0;
  int version = 0;  // policy version at generation start
  int turn = 0;     // next decode turn; -1 = pending prefill on a prefill pool
  int device = -1;
  int64_t decoded = 0;
  int64_t kv_blocks = 0;  // blocks at last residency (for swap-in accounting)
  bool started = false;
  bool prefilled = false;
  bool swapped = false;
  bool dropped = false;
  double last_use = 0.0;
};

struct Device {
  int active = 0;
  int64_t used_blocks = 0;
  std::map<int64_t, int64_t> resident;  // request -> blocks
  std::set<int64_t> idle_resident;
  std::deque<int64_t> return_queue;
  OccupancyTimeline occ;
  bool prefill_role = false;
  bool decode_role = true;
  bool elastic = false;
};

struct Event {
  double time = 0.0;
  uint64_t seq = 0;
  int type = 0;  // 0 phase-end, 1 env-end, 2 transfer-end, 3 train-end
  int64_t req = -1;
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

class SimEngine {
 public:
  SimEngine(const ClusterConfig& cluster, const WorkloadModel& workload, SimMode mode,
            uint64_t seed)
      : cfg_(cluster), wl_(workload), mode_(mode), rng_(seed) {}

  SimResult run() {
    validate();
    materialize();
    build_devices();
    if (mode_ == SimMode::Sync) {
      dispatch_batch(0);
    } else {
      for (const auto& p : plans_) fresh_queue_.push_back(new_request(p.id));
    }
    try_dispatch();

    while (!events_.empty()) {
      const Event ev = events_.top();
      events_.pop();
      now_ = ev.time;
      switch (ev.type) {
        case 0: on_phase_end(ev.req); break;
        case 1: on_env_end(ev.req); break;
        case 2: on_transfer_end(ev.req); break;
        case 3: on_train_end(); break;
        default: throw std::logic_error("unknown event type");
      }
    }
    return finish();
  }

 private:
  void validate() const {
    if (cfg_.gen_devices < 1 || cfg_.env_workers < 1 || cfg_.device_capacity < 1 ||
        cfg_.initial_capacity < 1 || cfg_.kv_blocks_per_device < 1 || cfg_.kv_block_tokens < 1 ||
        cfg_.train_batch_size < 1 || cfg_.version_every_batches < 1) {
      throw std::invalid_argument("cluster counts must be positive");
    }
    if (cfg_.pd.disaggregated && (cfg_.pd.prefill_devices < 1 || cfg_.pd.decode_devices < 1)) {
      throw std::invalid_argument("pd pools must be positive");
    }
    if (wl_.num_samples < 1 || wl_.num_domains < 1) {
      throw std::invalid_argument("workload counts must be positive");
    }
    if (!wl_.domain_weights.empty() &&
        wl_.domain_weights.size() != static_cast<size_t>(wl_.num_domains)) {
      throw std::invalid_argument("domain_weights size must match num_domains");
    }
  }

  // All per-sample randomness is drawn up front in sample order, so sync and
  // async runs on the same seed execute identical work.
  void materialize() {
    std::vector<std::string> domains;
    std::map<std::string, double> ratios;
    for (int d = 0; d < wl_.num_domains; ++d) {
      const std::string name = "d" + std::to_string(d);
      domains.push_back(name);
      ratios[name] =
          wl_.domain_weights.empty() ? 1.0 : wl_.domain_weights[static_cast<size_t>(d)];
    }
    SwrrState swrr;
    const int64_t device_tokens =
        static_cast<int64_t>(cfg_.kv_blocks_per_device) * cfg_.kv_block_tokens;
    for (int i = 0; i < wl_.num_samples; ++i) {
      SamplePlan p;
      p.id = i;
      p.domain = domain_oversample_dispatch(domains, ratios, swrr);
      p.prompt_tokens = std::max<int64_t>(1, std::llround(wl_.prompt_tokens.sample(rng_)));
      p.turns = std::max(1, static_cast<int>(std::lround(wl_.turns.sample(rng_))));
      p.total_tokens = p.prompt_tokens;
      for (int t = 0; t < p.turns; ++t) {
        p.decode_tokens.push_back(std::max<int64_t>(1, std::llround(wl_.decode_tokens.sample(rng_))));
        p.env_latency.push_back(std::max(0.0, wl_.env_latency.sample(rng_)));
        p.total_tokens += p.decode_tokens.back();
      }
      if (blocks_for(p.total_tokens) > cfg_.kv_blocks_per_device) {
        throw CapacityInfeasibleError("sample " + std::to_string(i) + " needs " +
                                      std::to_string(blocks_for(p.total_tokens)) +
                                      " KV blocks; device holds " +
                                      std::to_string(cfg_.kv_blocks_per_device) +
                                      " (" + std::to_string(device_tokens) + " tokens)");
      }
      plans_.push_back(std::move(p));
    }
  }

  void build_devices() {
    const int gen_count =
        cfg_.pd.disaggregated ? cfg_.pd.prefill_devices + cfg_.pd.decode_devices : cfg_.gen_devices;
    devices_.resize(static_cast<size_t>(gen_count));
    for (int i = 0; i < gen_count; ++i) {
      Device& d = devices_[static_cast<size_t>(i)];
      if (cfg_.pd.disaggregated) {
        d.prefill_role = i < cfg_.pd.prefill_devices;
        d.decode_role = !d.prefill_role;
      } else {
        d.prefill_role = true;
        d.decode_role = true;
      }
    }
    if (mode_ == SimMode::Async && cfg_.elastic) {
      Device d;
      d.prefill_role = false;
      d.decode_role = true;
      d.elastic = true;
      devices_.push_back(d);
    }
  }

  int64_t blocks_for(int64_t tokens) const {
    return (tokens + cfg_.kv_block_tokens - 1) / cfg_.kv_block_tokens;
  }

  int64_t new_request(int64_t sample) {
    Request r;
    r.sample = sample;
    r.turn = cfg_.pd.disaggregated ? -1 : 0;
    requests_.push_back(r);
    return static_cast<int64_t>(requests_.size()) - 1;
  }

  int cap_now() const {
    return two_phase_caps(now_, cfg_.first_balance_time, cfg_.initial_capacity,
                          cfg_.device_capacity);
  }

  bool device_open(const Device& d) const {
    if (d.elastic && (trainer_busy_ || mode_ != SimMode::Async)) return false;
    return d.active < cap_now();
  }

  void occ_step(size_t dev) {
    Device& d = devices_[dev];
    d.occ.steps.emplace_back(now_, d.active);
  }

  void log(const std::string& entity, const std::string& event, nlohmann::json payload) {
    events_log_.push_back(
        {{"time", now_}, {"entity", entity}, {"event", event}, {"payload", std::move(payload)}});
  }

  void schedule(double time, int type, int64_t req) {
    events_.push(Event{time, seq_++, type, req});
  }

  // --- KV residency ---------------------------------------------------------

  void evict_victim(Device& d, size_t dev, int64_t victim) {
    Request& v = requests_[static_cast<size_t>(victim)];
    const int64_t blocks = d.resident.at(victim);
    d.resident.erase(victim);
    d.idle_resident.erase(victim);
    d.used_blocks -= blocks;
    v.kv_blocks = blocks;
    if (cfg_.cpu_swap.enabled) {
      v.swapped = true;
      log("device" + std::to_string(dev), "kv_swap_out",
          {{"request", victim}, {"blocks", blocks}});
    } else {
      v.dropped = true;
      log("device" + std::to_string(dev), "kv_preempt",
          {{"request", victim}, {"blocks", blocks}});
    }
  }

  int64_t pick_lru_idle(const Device& d, int64_t excluding) const {
    int64_t best = -1;
    double best_use = 0.0;
    for (int64_t r : d.idle_resident) {
      if (r == excluding) continue;
      const double use = requests_[static_cast<size_t>(r)].last_use;
      if (best == -1 || use < best_use) {
        best = r;
        best_use = use;
      }
    }
    return best;
  }

  // Makes `needed` blocks resident for request r on its device; returns the
  // simulated time the residency work costs (swap-in, recompute, evictions).
  double ensure_kv(int64_t req, size_t dev, int64_t needed) {
    Request& r = requests_[static_cast<size_t>(req)];
    Device& d = devices_[dev];
    double cost = 0.0;
    if (r.swapped) {
      cost += static_cast<double>(r.kv_blocks) * cfg_.cpu_swap.swap_cost;
      log("device" + std::to_string(dev), "kv_swap_in",
          {{"request", req}, {"blocks", r.kv_blocks}});
      r.swapped = false;
    }
    if (r.dropped) {
      metrics_.kv_recomputations += 1;
      cost += cfg_.alpha_prefill *
              static_cast<double>(plans_[static_cast<size_t>(r.sample)].prompt_tokens + r.decoded);
      log("device" + std::to_string(dev), "kv_recompute",
          {{"request", req}, {"tokens", plans_[static_cast<size_t>(r.sample)].prompt_tokens + r.decoded}});
      r.dropped = false;
    }
    const auto cur_it = d.resident.find(req);
    const int64_t cur = cur_it == d.resident.end() ? 0 : cur_it->second;
    while (needed - cur > cfg_.kv_blocks_per_device - d.used_blocks) {
      const int64_t victim = pick_lru_idle(d, req);
      if (victim < 0) {
        throw CapacityInfeasibleError("device " + std::to_string(dev) +
                                      " cannot host request KV: " + std::to_string(needed) +
                                      " blocks needed and no idle KV left to evict");
      }
      if (!cfg_.cpu_swap.enabled && !cfg_.model_recompute) {
        throw CapacityInfeasibleError(
            "KV over capacity with swapping disabled and recompute modeling off");
      }
      if (cfg_.cpu_swap.enabled) {
        cost += static_cast<double>(d.resident.at(victim)) * cfg_.cpu_swap.swap_cost;
      }
      evict_victim(d, dev, victim);
    }
    d.used_blocks += needed - cur;
    d.resident[req] = needed;
    r.kv_blocks = needed;

    // Watermark pass: proactively move idle KV out before pressure builds.
    if (cfg_.cpu_swap.enabled && cfg_.kv_blocks_per_device > 0) {
      const double usage =
          static_cast<double>(d.used_blocks) / static_cast<double>(cfg_.kv_blocks_per_device);
      if (usage >= cfg_.cpu_swap.watermark) {
        std::vector<KvBlockGroup> groups;
        for (int64_t idle : d.idle_resident) {
          if (idle == req) continue;
          groups.push_back({idle, d.resident.at(idle),
                            requests_[static_cast<size_t>(idle)].last_use});
        }
        const auto actions = kv_swap_step(std::min(usage, 1.0), cfg_.cpu_swap.watermark, groups,
                                          cfg_.cpu_swap.swap_cost, cfg_.kv_blocks_per_device);
        for (const auto& act : actions) {
          cost += act.cost;
          evict_victim(d, dev, act.request);
        }
      }
    }
    return cost;
  }

  // --- dispatch --------------------------------------------------------------

  void admit(int64_t req, size_t dev) {
    Request& r = requests_[static_cast<size_t>(req)];
    Device& d = devices_[dev];
    d.active += 1;
    occ_step(dev);
    d.idle_resident.erase(req);
    if (!r.started) {
      r.started = true;
      r.version = version_;
      outstanding_ += 1;
    }

    double dur = 0.0;
    if (r.turn == -1) {
      // Disaggregated prefill: pure compute, KV handed off afterwards.
      dur = cfg_.alpha_prefill * static_cast<double>(plans_[static_cast<size_t>(r.sample)].prompt_tokens);
      r.device = static_cast<int>(dev);
      schedule(now_ + dur, 0, req);
      return;
    }

    r.device = static_cast<int>(dev);
    const SamplePlan& p = plans_[static_cast<size_t>(r.sample)];
    if (!r.prefilled) {
      if (!cfg_.pd.disaggregated) dur += cfg_.alpha_prefill * static_cast<double>(p.prompt_tokens);
      r.prefilled = true;
    }
    const int64_t needed =
        blocks_for(p.prompt_tokens + r.decoded + p.decode_tokens[static_cast<size_t>(r.turn)]);
    dur += ensure_kv(req, dev, needed);
    const double slowdown = 1.0 + cfg_.gamma_slowdown * static_cast<double>(d.active - 1);
    dur += cfg_.beta_decode * static_cast<double>(p.decode_tokens[static_cast<size_t>(r.turn)]) *
           slowdown;
    schedule(now_ + dur, 0, req);
  }

  void try_dispatch() {
    // Returning requests have device affinity (their KV lives there).
    for (size_t dev = 0; dev < devices_.size(); ++dev) {
      Device& d = devices_[dev];
      while (!d.return_queue.empty() && device_open(d)) {
        const int64_t req = d.return_queue.front();
        d.return_queue.pop_front();
        admit(req, dev);
      }
    }
    auto place = [&](std::deque<int64_t>& queue, bool want_prefill) {
      while (!queue.empty()) {
        // Backpressure: never run generation more than a few batches ahead of
        // the trainer, or freshly started work would be stale on arrival.
        if (mode_ == SimMode::Async && !requests_[static_cast<size_t>(queue.front())].started &&
            outstanding_ >= static_cast<int64_t>(cfg_.train_batch_size) *
                                std::max(1, cfg_.max_version_lag)) {
          break;
        }
        size_t best = devices_.size();
        for (size_t dev = 0; dev < devices_.size(); ++dev) {
          const Device& d = devices_[dev];
          const bool role_ok = want_prefill ? d.prefill_role : d.decode_role;
          if (!role_ok || !device_open(d)) continue;
          if (best == devices_.size() || d.active < devices_[best].active) best = dev;
        }
        if (best == devices_.size()) break;
        const int64_t req = queue.front();
        queue.pop_front();
        admit(req, best);
      }
    };
    place(fresh_queue_, /*want_prefill=*/true);
    if (cfg_.pd.disaggregated) place(decode_entry_queue_, /*want_prefill=*/false);
  }

  // --- event handlers ---------------------------------------------------------

  void release_device(int64_t req) {
    Request& r = requests_[static_cast<size_t>(req)];
    Device& d = devices_[static_cast<size_t>(r.device)];
    d.active -= 1;
    occ_step(static_cast<size_t>(r.device));
    r.last_use = now_;
    if (d.resident.count(req)) d.idle_resident.insert(req);
  }

  void on_phase_end(int64_t req) {
    Request& r = requests_[static_cast<size_t>(req)];
    const SamplePlan& p = plans_[static_cast<size_t>(r.sample)];
    release_device(req);

    if (r.turn == -1) {
      // Prefill finished; stream the KV over in chunks.
      const auto tl = pd_transfer_schedule(p.prompt_tokens, cfg_.pd.chunk_size, cfg_.pd.link_rate,
                                           {DecodeStartPolicy::When::AfterFirstChunk,
                                            cfg_.pd.chunk_compute});
      transfer_total_ += tl.total_transfer_time;
      transfer_overlapped_ += tl.overlapped_transfer;
      log("sample" + std::to_string(r.sample), "prefill_done",
          {{"device", r.device}, {"transfer", tl.decode_ready_time}});
      r.prefilled = true;
      r.turn = 0;
      schedule(now_ + tl.decode_ready_time, 2, req);
      return;
    }

    log("sample" + std::to_string(r.sample), "decode_done",
        {{"device", r.device}, {"turn", r.turn}});
    r.decoded += p.decode_tokens[static_cast<size_t>(r.turn)];
    enter_env(req);
    try_dispatch();
  }

  void on_transfer_end(int64_t req) {
    decode_entry_queue_.push_back(req);
    try_dispatch();
  }

  void enter_env(int64_t req) {
    if (env_active_ < cfg_.env_workers) {
      env_active_ += 1;
      const Request& r = requests_[static_cast<size_t>(req)];
      const SamplePlan& p = plans_[static_cast<size_t>(r.sample)];
      schedule(now_ + p.env_latency[static_cast<size_t>(r.turn)], 1, req);
    } else {
      env_queue_.push_back(req);
    }
  }

  void on_env_end(int64_t req) {
    env_active_ -= 1;
    if (!env_queue_.empty()) {
      const int64_t next = env_queue_.front();
      env_queue_.pop_front();
      env_active_ += 1;
      const Request& nr = requests_[static_cast<size_t>(next)];
      const SamplePlan& np = plans_[static_cast<size_t>(nr.sample)];
      schedule(now_ + np.env_latency[static_cast<size_t>(nr.turn)], 1, next);
    }

    Request& r = requests_[static_cast<size_t>(req)];
    const SamplePlan& p = plans_[static_cast<size_t>(r.sample)];
    log("sample" + std::to_string(r.sample), "env_done", {{"turn", r.turn}});
    r.turn += 1;
    if (r.turn < p.turns) {
      devices_[static_cast<size_t>(r.device)].return_queue.push_back(req);
      try_dispatch();
      return;
    }

    // Generation complete: free the KV and hand the sample to the queue.
    Device& d = devices_[static_cast<size_t>(r.device)];
    if (d.resident.count(req)) {
      d.used_blocks -= d.resident.at(req);
      d.resident.erase(req);
      d.idle_resident.erase(req);
    }
    metrics_.generated += 1;
    metrics_.per_domain_counts[p.domain] += 1;
    log("sample" + std::to_string(r.sample), "generation_complete", {{"version", r.version}});
    pending_.push_back({r.sample, r.version});
    if (mode_ == SimMode::Sync) {
      batch_outstanding_ -= 1;
      if (batch_outstanding_ == 0) start_train();
    } else {
      try_train();
    }
    try_dispatch();
  }

  void try_train() {
    while (!trainer_busy_ && !pending_.empty()) {
      const auto s = pending_.front();
      pending_.pop_front();
      outstanding_ -= 1;
      if (!staleness_admit(queue_, s.version, version_, cfg_.max_version_lag)) {
        metrics_.rejected_stale += 1;
        log("queue", "reject_stale", {{"sample", s.sample}, {"version", s.version},
                                      {"current_version", version_}});
        continue;
      }
      const int lag = version_ - s.version;
      staleness_sum_ += lag;
      metrics_.staleness_max = std::max(metrics_.staleness_max, lag);
      batch_fill_ += 1;
      log("queue", "admit", {{"sample", s.sample}, {"lag", lag}});
      if (batch_fill_ == cfg_.train_batch_size) start_train();
    }
  }

  void start_train() {
    trainer_busy_ = true;
    const int count = mode_ == SimMode::Sync ? static_cast<int>(pending_.size()) : batch_fill_;
    if (mode_ == SimMode::Sync) {
      // Barrier semantics: the whole batch is admitted at once, lag 0.
      for (const auto& s : pending_) {
        staleness_admit(queue_, s.version, version_, cfg_.max_version_lag);
        outstanding_ -= 1;
        log("queue", "admit", {{"sample", s.sample}, {"lag", version_ - s.version}});
      }
      pending_.clear();
    }
    train_count_ = count;
    batch_fill_ = 0;
    log("trainer", "train_start", {{"batch", train_count_}});
    schedule(now_ + cfg_.train_step_time, 3, -1);
  }

  void on_train_end() {
    trainer_busy_ = false;
    metrics_.trained += train_count_;
    batches_done_ += 1;
    if (batches_done_ % cfg_.version_every_batches == 0) {
      version_ += 1;
      log("trainer", "version", {{"version", version_}});
    }
    log("trainer", "train_done", {{"batch", train_count_}});
    train_count_ = 0;
    if (mode_ == SimMode::Sync) {
      next_batch_ += 1;
      dispatch_batch(next_batch_);
    } else {
      try_train();
    }
    try_dispatch();
  }

  void dispatch_batch(int batch) {
    const int64_t lo = static_cast<int64_t>(batch) * cfg_.train_batch_size;
    const int64_t hi =
        std::min<int64_t>(lo + cfg_.train_batch_size, static_cast<int64_t>(plans_.size()));
    if (lo >= hi) return;
    batch_outstanding_ = static_cast<int>(hi - lo);
    for (int64_t i = lo; i < hi; ++i) fresh_queue_.push_back(new_request(i));
  }

  SimResult finish() {
    metrics_.in_flight = static_cast<int64_t>(pending_.size()) + batch_fill_;
    metrics_.makespan = now_;
    metrics_.samples_per_sec =
        now_ > 0.0 ? static_cast<double>(metrics_.trained) / now_ : 0.0;
    metrics_.staleness_mean =
        metrics_.trained > 0 ? staleness_sum_ / static_cast<double>(metrics_.trained) : 0.0;
    metrics_.transfer_overlap_ratio =
        transfer_total_ > 0.0 ? transfer_overlapped_ / transfer_total_ : 0.0;

    std::vector<OccupancyTimeline> occ;
    for (auto& d : devices_) {
      if (d.elastic) continue;  // trainer hardware, not a generation device
      d.occ.end_time = now_;
      occ.push_back(d.occ);
    }
    metrics_.request_load_ratio = request_load_ratio(occ, cfg_.device_capacity);

    SimResult result;
    result.metrics = std::move(metrics_);
    result.events = std::move(events_log_);
    return result;
  }

  ClusterConfig cfg_;
  WorkloadModel wl_;
  SimMode mode_;
  Rng rng_;

  std::vector<SamplePlan> plans_;
  std::vector<Request> requests_;
  std::vector<Device> devices_;
  std::priority_queue<Event, std::vector<Event>, EventAfter> events_;
  std::vector<nlohmann::json> events_log_;
  uint64_t seq_ = 0;
  double now_ = 0.0;

  std::deque<int64_t> fresh_queue_;
  std::deque<int64_t> decode_entry_queue_;
  std::deque<int64_t> env_queue_;
  int env_active_ = 0;

  std::deque<SampleQueueState::Pending> pending_;
  SampleQueueState queue_;
  int64_t outstanding_ = 0;  // started generating, not yet admitted or rejected
  int version_ = 0;
  int batches_done_ = 0;
  int batch_fill_ = 0;
  int train_count_ = 0;
  bool trainer_busy_ = false;
  int batch_outstanding_ = 0;
  int next_batch_ = 0;

  double staleness_sum_ = 0.0;
  double transfer_total_ = 0.0;
  double transfer_overlapped_ = 0.0;
  SimMetrics metrics_;
};

}  // namespace

SimResult run_simulation(const ClusterConfig& cluster, const WorkloadModel& workload, SimMode mode,
                         uint64_t seed) {
  SimEngine engine(cluster, workload, mode, seed);
  return engine.run();
}

}  // namespace envforge
