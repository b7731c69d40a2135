// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic discrete-event simulator of the rollout infrastructure:
// streaming per-sample pipeline vs batch-barrier baseline, version-lag
// admission, two-phase request caps, prefill/decode disaggregation with
// chunked KV transfer, CPU-swap watermark eviction, and the request-load
// ratio metric.

#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "envforge/rng.hpp"

namespace envforge {

struct DistSpec {
  enum class Kind { Constant, Uniform, LogNormal, Pareto, Exponential };
  Kind kind = Kind::Constant;
  double a = 1.0;  // Constant: value; Uniform: lo; LogNormal: mu; Pareto: xm; Exponential: rate
  double b = 0.0;  // Uniform: hi; LogNormal: sigma; Pareto: alpha

  double sample(Rng& rng) const;

  nlohmann::json to_json() const;
  static DistSpec from_json(const nlohmann::json& j);
};

struct CpuSwapConfig {
  bool enabled = true;
  double watermark = 0.9;    // cache-usage fraction that triggers eviction
  double swap_cost = 0.002;  // simulated seconds per block moved

  nlohmann::json to_json() const;
  static CpuSwapConfig from_json(const nlohmann::json& j);
};

struct PdConfig {
  bool disaggregated = false;
  int prefill_devices = 2;
  int decode_devices = 6;
  int chunk_size = 512;        // tokens per KV transfer chunk
  double link_rate = 65536.0;  // tokens per simulated second
  double chunk_compute = 0.01;

  nlohmann::json to_json() const;
  static PdConfig from_json(const nlohmann::json& j);
};

struct ClusterConfig {
  int gen_devices = 8;
  int env_workers = 16;
  int device_capacity = 4;   // steady-state requests per device
  int initial_capacity = 8;  // before the first load-balancing event
  double first_balance_time = 5.0;
  int kv_blocks_per_device = 4096;
  int kv_block_tokens = 16;
  CpuSwapConfig cpu_swap;
  PdConfig pd;
  int max_version_lag = 2;
  int train_batch_size = 32;
  double train_step_time = 1.0;
  int version_every_batches = 1;
  bool elastic = true;          // idle trainer lends decode capacity (async)
  bool model_recompute = true;  // allow recompute path when swap is off
  // Cost model: prefill takes alpha per prompt token, decode beta per token
  // with a capacity-dependent slowdown of (1 + gamma * (active - 1)).
  double alpha_prefill = 1e-5;
  double beta_decode = 1e-4;
  double gamma_slowdown = 0.05;

  nlohmann::json to_json() const;
  static ClusterConfig from_json(const nlohmann::json& j);
};

struct WorkloadModel {
  int num_samples = 512;
  int num_domains = 4;
  std::vector<double> domain_weights;  // defaults to uniform when empty
  DistSpec prompt_tokens{DistSpec::Kind::Constant, 512.0, 0.0};
  DistSpec decode_tokens{DistSpec::Kind::LogNormal, 4.8, 1.2};  // per turn
  DistSpec env_latency{DistSpec::Kind::Pareto, 0.05, 1.5};
  DistSpec turns{DistSpec::Kind::Uniform, 1.0, 4.0};  // rounded to int >= 1

  nlohmann::json to_json() const;
  static WorkloadModel from_json(const nlohmann::json& j);
};

enum class SimMode { Sync, Async };

std::string to_string(SimMode m);

struct SimMetrics {
  double makespan = 0.0;
  double samples_per_sec = 0.0;
  double request_load_ratio = 0.0;
  double staleness_mean = 0.0;
  int staleness_max = 0;
  std::map<std::string, int64_t> per_domain_counts;
  int64_t kv_recomputations = 0;
  double transfer_overlap_ratio = 0.0;
  int64_t generated = 0;
  int64_t trained = 0;
  int64_t rejected_stale = 0;
  int64_t in_flight = 0;

  nlohmann::json to_json() const;
};

struct SampleQueueState {
  struct Pending {
    int64_t sample = 0;
    int version = 0;
  };
  std::deque<Pending> pending;
  int current_version = 0;
  int64_t admitted = 0;
  int64_t rejected = 0;
};

// True iff current_version - sample_version <= max_lag; updates counters.
bool staleness_admit(SampleQueueState& queue, int sample_version, int current_version,
                     int max_lag);

// Per-device step function of concurrently active requests.
struct OccupancyTimeline {
  std::vector<std::pair<double, int>> steps;  // (time, active from here on)
  double end_time = 0.0;
};

// Time-weighted mean over devices of active/capacity, clamped to [0,1].
double request_load_ratio(const std::vector<OccupancyTimeline>& devices, int capacity);

// Initial cap strictly before the first balance event, steady cap from it on.
int two_phase_caps(double sim_time, double first_balance_time, int initial_cap = 8,
                   int steady_cap = 4);

struct DecodeStartPolicy {
  enum class When { AfterFirstChunk, AfterAll };
  When when = When::AfterFirstChunk;
  double compute_per_chunk = 0.01;  // consumer-side work done per chunk
};

struct TransferTimeline {
  struct ChunkSpan {
    int chunk = 0;
    double transfer_start = 0.0;
    double transfer_end = 0.0;
    double compute_start = 0.0;
    double compute_end = 0.0;
  };
  std::vector<ChunkSpan> chunks;
  double decode_ready_time = 0.0;     // when decode may begin
  double total_transfer_time = 0.0;   // sum of chunk transfer durations
  double overlapped_transfer = 0.0;   // transfer time hidden behind compute
  double overlap_ratio = 0.0;         // overlapped / total
};

// Chunked asynchronous KV handoff; chunk i's consumer work may run while
// chunk i+1 is in flight.
TransferTimeline pd_transfer_schedule(int64_t prompt_tokens, int chunk_size, double link_rate,
                                      const DecodeStartPolicy& policy);

struct KvBlockGroup {
  int64_t request = 0;
  int64_t blocks = 0;
  double last_use = 0.0;
};

struct KvSwapAction {
  int64_t request = 0;
  int64_t blocks = 0;
  double cost = 0.0;
};

// When usage >= watermark, evicts least-recently-used groups until usage
// drops below it. Pure; the caller applies the actions.
std::vector<KvSwapAction> kv_swap_step(double usage, double watermark,
                                       const std::vector<KvBlockGroup>& lru_groups,
                                       double swap_cost, int64_t total_blocks);

// Smooth weighted round-robin state for domain oversampling.
struct SwrrState {
  std::map<std::string, double> current;
};

// Next domain under smooth weighted round-robin; long-run frequencies are
// proportional to ratios and no domain starves.
std::string domain_oversample_dispatch(const std::vector<std::string>& domains,
                                       const std::map<std::string, double>& ratios,
                                       SwrrState& state);

struct SimResult {
  SimMetrics metrics;
  std::vector<nlohmann::json> events;  // (time, entity, event, payload) records
};

// Event-driven execution of the workload; fully deterministic per seed. Sync
// mode trains on full-batch barriers; async streams per-sample with staleness
// admission and elastic decode capacity. Throws CapacityInfeasibleError when
// a request cannot fit device KV with swapping disabled and recomputation
// modeling off.
SimResult run_simulation(const ClusterConfig& cluster, const WorkloadModel& workload, SimMode mode,
                         uint64_t seed);

}  // namespace envforge
