// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pure-math training strategy: sequence-level clipped policy objective,
// group-normalized advantages, budget allocation, curriculum ordering, data
// selection, and power-law hyperparameter prediction.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace envforge {

struct TrajectoryStats {
  double reward = 0.0;
  double old_logp_sum = 0.0;
  double new_logp_sum = 0.0;
  int64_t token_count = 1;
};

struct TrajectoryGroup {
  std::vector<TrajectoryStats> trajectories;
};

// s = exp((new - old) / tokens); length-normalized, so s is invariant to
// token count at a fixed per-token log ratio. Non-finite inputs are faults.
double sequence_importance_ratio(double new_logp_sum, double old_logp_sum, int64_t token_count);

// (r_i - mean) / max(std, 1e-8), population std. Size < 2 is a fault.
std::vector<double> group_advantages(const std::vector<double>& rewards);

// Mean over trajectories of min(s*A, clip(s, 1-eps, 1+eps)*A), averaged per
// group and then across groups.
double gspo_objective(const std::vector<TrajectoryGroup>& groups, double epsilon);

struct TaskValueState {
  std::string task_id;
  double pass_rate = 0.0;
  int attempts = 0;
};

struct TaskValueWeights {
  double warmup_bonus = 0.5;
  int warmup_attempts = 8;
};

// v = 4*p*(1-p) + bonus while attempts < warmup; peaked at p = 0.5.
double task_value(const TaskValueState& state, const TaskValueWeights& weights);

// Heap greedy over diminishing marginal values v_i/k; maximizes
// sum_i v_i * H(n_i) exactly. Infeasible bounds throw InfeasibleBudgetError.
std::vector<int> allocate_budget(const std::vector<double>& values, int total_rollouts,
                                 int per_task_min, int per_task_max);

// clamp(ceil(k_max * (1 - pass_rate)), 1, k_max); nonincreasing in pass_rate.
int oversampling_coefficient(double pass_rate, int k_max);

struct CurriculumTask {
  std::string id;
  double difficulty = 0.0;  // 1 - pass rate
  std::string tier;
};

// Schedule indices: prerequisite tiers first (tier_edges = (before, after)
// pairs), then ascending difficulty, stable for ties. Cyclic tiers are a
// fault.
std::vector<size_t> curriculum_order(const std::vector<CurriculumTask>& tasks,
                                     const std::vector<std::pair<std::string, std::string>>& tier_edges);

// True iff the least-squares slope of the last `window` mean rewards is below
// slope_eps.
bool self_verification_trigger(const std::vector<double>& reward_history, int window,
                               double slope_eps);

// Max over all contiguous windows of length min(window, n) of exp(mean NLL).
double sliding_window_ppl(const std::vector<double>& token_nlls, int window = 512);

// Score-weighted k-center greedy: first pick = argmax score, then argmax of
// score * min Euclidean distance to the selected set; lowest index wins ties.
std::vector<size_t> kcg_select(const std::vector<std::vector<double>>& points,
                               const std::vector<double>& ppl_scores, size_t k);

struct PowerLawFit {
  double coefficient = 0.0;  // a in y = a * x^b
  double exponent = 0.0;     // b
  double rms_log_residual = 0.0;
  double x_min = 0.0;  // fitted input range, for extrapolation checks
  double x_max = 0.0;
};

// Least squares on (ln x, ln y). Nonpositive inputs are faults.
PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points);

double power_law_eval(const PowerLawFit& fit, double x);

struct HparamLaws {
  PowerLawFit loss_law;   // loss vs compute (negative exponent)
  PowerLawFit batch_law;  // optimal batch size vs compute
  PowerLawFit lr_law;     // optimal learning rate vs compute
};

struct HparamPrediction {
  double batch_size = 0.0;
  double learning_rate = 0.0;
  double equivalent_compute = 0.0;
  bool extrapolated = false;  // loss outside the fitted law's range
};

// Inverts the loss law to the equivalent compute for checkpoint_loss and
// evaluates the batch/lr laws there. actual_compute is reported alongside so
// callers can see how far ahead of raw compute the checkpoint sits.
HparamPrediction predict_optimal_hparams(double checkpoint_loss, double actual_compute,
                                         const HparamLaws& laws);

}  // namespace envforge
