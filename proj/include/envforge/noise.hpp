// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Typed, leveled instruction and tool noise with solvability preservation and
// curriculum escalation. Tool noise is observational plus transient: it never
// corrupts database state, so replays stay valid.

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "envforge/rng.hpp"
#include "envforge/tool_exec.hpp"

namespace envforge {

struct Task;         // task_runtime.hpp
struct Environment;  // env_scaling.hpp

enum class NoiseKind {
  ToolFailure,
  InconsistentResponse,
  PartialResult,
  LatencySpike,
  ConstraintObfuscation,
  DistractorPreference,
  Reordering,
};

std::string to_string(NoiseKind k);

constexpr int kMaxNoiseLevel = 4;
// Transient-failure probability grows linearly per tool level (0.3 at max).
constexpr double kFailProbPerLevel = 0.075;

std::set<NoiseKind> kinds_for_instruction_level(int level);
std::set<NoiseKind> kinds_for_tool_level(int level);

struct NoiseProfile {
  int instruction_level = 0;
  int tool_level = 0;
  std::set<NoiseKind> enabled_kinds;

  static NoiseProfile for_levels(int instruction_level, int tool_level);
  // Convenience: both families at the same level.
  static NoiseProfile for_level(int level) { return for_levels(level, level); }

  nlohmann::json to_json() const;
  static NoiseProfile from_json(const nlohmann::json& j);
};

// Level 0 is the identity. Higher levels, in order: move explicit argument
// values into the withheld set (one per level), insert distractor
// preferences, shuffle the description's step sentences. The rubric is never
// touched.
Task inject_instruction_noise(const Task& task, int level, Rng& rng);

// Distributional form over a single executed result: with level-scaled
// probability replaces Ok by a transient failure (original result stashed for
// the retry), truncates the payload, or tags a latency spike.
ToolResult inject_tool_noise(const ToolResult& result, int level, Rng& rng);

// Stateful per-episode injector. A call that just failed transiently is
// exempt from failure on its retry, which keeps worst-case runs solvable.
class EpisodicToolNoise {
 public:
  explicit EpisodicToolNoise(NoiseProfile profile, bool adversarial = false)
      : profile_(std::move(profile)), adversarial_(adversarial) {}

  // Decide before execution whether this call fails transiently (no db
  // effect). Adversarial mode fails every first attempt deterministically.
  bool pre_execution_failure(const std::string& call_key, Rng& rng);
  // Observational transforms applied to an executed result.
  ToolResult post_transform(ToolResult result, Rng& rng);
  // Wall-time multiplier (latency spikes).
  double latency_multiplier(Rng& rng);

  const NoiseProfile& profile() const { return profile_; }

 private:
  NoiseProfile profile_;
  bool adversarial_ = false;
  std::set<std::string> retry_exempt_;
};

// True iff a skill=1.0 solver with the given retry budget completes the task
// under worst-case enabled noise draws.
bool verify_solvability(const Environment& env, const ToolGraph& graph, const Task& task,
                        const NoiseProfile& profile, int retry_budget);

struct CurriculumState {
  int current_level = 0;
  double promotion_threshold = 0.1;
  int max_level = kMaxNoiseLevel;
  std::vector<std::pair<int, double>> history;  // (level, robustness gap)

  nlohmann::json to_json() const;
  static CurriculumState from_json(const nlohmann::json& j);
};

// Appends gap = clean - noisy; promotes one level iff gap <= threshold.
CurriculumState curriculum_step(const CurriculumState& state, double clean_pass,
                                double noisy_pass);

}  // namespace envforge
