// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "envforge/training_strategy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>

#include "envforge/errors.hpp"

namespace envforge {

namespace {

constexpr double kNumEps = 1e-8;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + " must be finite");
}

}  // namespace

double sequence_importance_ratio(double new_logp_sum, double old_logp_sum, int64_t token_count) {
  require_finite(new_logp_sum, "new_logp_sum");
  require_finite(old_logp_sum, "old_logp_sum");
  if (token_count < 1) throw std::invalid_argument("token_count must be >= 1");
  return std::exp((new_logp_sum - old_logp_sum) / static_cast<double>(token_count));
}

std::vector<double> group_advantages(const std::vector<double>& rewards) {
  if (rewards.size() < 2) {
    throw std::invalid_argument("advantage normalization needs a group of >= 2");
  }
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rewards.size());
  const double denom = std::max(std::sqrt(var), kNumEps);
  std::vector<double> adv;
  adv.reserve(rewards.size());
  for (double r : rewards) adv.push_back((r - mean) / denom);
  return adv;
}

double gspo_objective(const std::vector<TrajectoryGroup>& groups, double epsilon) {
  if (epsilon <= 0.0 || epsilon >= 1.0) throw std::invalid_argument("epsilon must be in (0,1)");
  if (groups.empty()) return 0.0;
  double group_sum = 0.0;
  size_t counted_groups = 0;
  for (const auto& group : groups) {
    const auto& trajs = group.trajectories;
    if (trajs.size() < 2) throw std::invalid_argument("each group needs >= 2 trajectories");
    std::vector<double> rewards;
    rewards.reserve(trajs.size());
    for (const auto& t : trajs) rewards.push_back(t.reward);
    const std::vector<double> adv = group_advantages(rewards);
    double traj_sum = 0.0;
    for (size_t i = 0; i < trajs.size(); ++i) {
      const double s =
          sequence_importance_ratio(trajs[i].new_logp_sum, trajs[i].old_logp_sum,
                                    trajs[i].token_count);
      const double clipped = std::clamp(s, 1.0 - epsilon, 1.0 + epsilon);
      traj_sum += std::min(s * adv[i], clipped * adv[i]);
    }
    group_sum += traj_sum / static_cast<double>(trajs.size());
    counted_groups += 1;
  }
  return group_sum / static_cast<double>(counted_groups);
}

double task_value(const TaskValueState& state, const TaskValueWeights& weights) {
  if (state.pass_rate < 0.0 || state.pass_rate > 1.0) {
    throw std::invalid_argument("pass_rate must lie in [0,1]");
  }
  const double p = state.pass_rate;
  double v = 4.0 * p * (1.0 - p);
  if (state.attempts < weights.warmup_attempts) v += weights.warmup_bonus;
  return v;
}

std::vector<int> allocate_budget(const std::vector<double>& values, int total_rollouts,
                                 int per_task_min, int per_task_max) {
  const int n = static_cast<int>(values.size());
  if (n == 0) {
    if (total_rollouts != 0) throw InfeasibleBudgetError("no tasks to absorb the budget");
    return {};
  }
  if (per_task_min < 0 || per_task_max < per_task_min) {
    throw std::invalid_argument("per-task bounds must satisfy 0 <= min <= max");
  }
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("task values must be finite and nonnegative");
    }
  }
  const long long floor_total = static_cast<long long>(n) * per_task_min;
  const long long ceil_total = static_cast<long long>(n) * per_task_max;
  if (total_rollouts < floor_total || total_rollouts > ceil_total) {
    throw InfeasibleBudgetError("total " + std::to_string(total_rollouts) +
                                " outside [" + std::to_string(floor_total) + ", " +
                                std::to_string(ceil_total) + "]");
  }

  std::vector<int> alloc(static_cast<size_t>(n), per_task_min);
  int remaining = total_rollouts - static_cast<int>(floor_total);

  // Marginal value of granting task i its k-th rollout is v_i/k, so the
  // utility sum_i v_i * H(n_i) is concave and greedy is exact.
  using Entry = std::pair<double, int>;  // (marginal value, task) — max-heap
  auto cmp = [](const Entry& a, const Entry& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second > b.second;  // lowest index wins ties
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
  for (int i = 0; i < n; ++i) {
    if (alloc[static_cast<size_t>(i)] < per_task_max) {
      heap.push({values[static_cast<size_t>(i)] / (alloc[static_cast<size_t>(i)] + 1), i});
    }
  }
  while (remaining > 0) {
    if (heap.empty()) throw std::logic_error("budget heap exhausted with rollouts remaining");
    const auto [mv, task] = heap.top();
    (void)mv;
    heap.pop();
    alloc[static_cast<size_t>(task)] += 1;
    remaining -= 1;
    if (alloc[static_cast<size_t>(task)] < per_task_max) {
      heap.push({values[static_cast<size_t>(task)] / (alloc[static_cast<size_t>(task)] + 1), task});
    }
  }
  return alloc;
}

int oversampling_coefficient(double pass_rate, int k_max) {
  if (pass_rate < 0.0 || pass_rate > 1.0) throw std::invalid_argument("pass_rate in [0,1]");
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  const int raw = static_cast<int>(std::ceil(static_cast<double>(k_max) * (1.0 - pass_rate)));
  return std::clamp(raw, 1, k_max);
}

std::vector<size_t> curriculum_order(
    const std::vector<CurriculumTask>& tasks,
    const std::vector<std::pair<std::string, std::string>>& tier_edges) {
  // Topological ranks over tiers (Kahn), deterministic by sorted tier name.
  std::set<std::string> tiers;
  for (const auto& t : tasks) tiers.insert(t.tier);
  for (const auto& [a, b] : tier_edges) {
    tiers.insert(a);
    tiers.insert(b);
  }
  std::map<std::string, std::set<std::string>> succ;
  std::map<std::string, int> indegree;
  for (const auto& t : tiers) indegree[t] = 0;
  for (const auto& [before, after] : tier_edges) {
    if (succ[before].insert(after).second) indegree[after] += 1;
  }
  std::map<std::string, size_t> rank;
  std::set<std::string> ready;
  for (const auto& [t, deg] : indegree) {
    if (deg == 0) ready.insert(t);
  }
  size_t next_rank = 0;
  while (!ready.empty()) {
    const std::string t = *ready.begin();
    ready.erase(ready.begin());
    rank[t] = next_rank++;
    for (const auto& s : succ[t]) {
      if (--indegree[s] == 0) ready.insert(s);
    }
  }
  if (rank.size() != tiers.size()) throw std::invalid_argument("tier order is cyclic");

  std::vector<size_t> order(tasks.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const size_t ra = rank.at(tasks[a].tier);
    const size_t rb = rank.at(tasks[b].tier);
    if (ra != rb) return ra < rb;
    return tasks[a].difficulty < tasks[b].difficulty;
  });
  return order;
}

bool self_verification_trigger(const std::vector<double>& reward_history, int window,
                               double slope_eps) {
  if (window < 2) throw std::invalid_argument("window must be >= 2");
  if (static_cast<int>(reward_history.size()) < window) return false;
  const size_t start = reward_history.size() - static_cast<size_t>(window);
  // Least-squares slope over x = 0..window-1.
  const double n = static_cast<double>(window);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < window; ++i) {
    const double x = static_cast<double>(i);
    const double y = reward_history[start + static_cast<size_t>(i)];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return slope < slope_eps;
}

double sliding_window_ppl(const std::vector<double>& token_nlls, int window) {
  if (token_nlls.empty()) throw std::invalid_argument("token_nlls must be nonempty");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  const size_t n = token_nlls.size();
  const size_t w = std::min(static_cast<size_t>(window), n);
  // Fresh per-window sums rather than a sliding accumulator: O(n*w) is cheap
  // at realistic window sizes and immune to cancellation drift.
  double best = -std::numeric_limits<double>::infinity();
  for (size_t start = 0; start + w <= n; ++start) {
    double sum = 0.0;
    for (size_t i = start; i < start + w; ++i) sum += token_nlls[i];
    best = std::max(best, std::exp(sum / static_cast<double>(w)));
  }
  return best;
}

std::vector<size_t> kcg_select(const std::vector<std::vector<double>>& points,
                               const std::vector<double>& ppl_scores, size_t k) {
  const size_t n = points.size();
  if (ppl_scores.size() != n) throw std::invalid_argument("scores size mismatch");
  if (k > n) throw std::invalid_argument("k must be <= number of points");
  for (double s : ppl_scores) {
    if (!(s > 0.0)) throw std::invalid_argument("scores must be positive");
  }
  for (const auto& p : points) {
    if (p.size() != points.front().size()) {
      throw std::invalid_argument("points must share a dimension");
    }
  }

  auto dist = [&](size_t a, size_t b) {
    double d2 = 0.0;
    for (size_t i = 0; i < points[a].size(); ++i) {
      const double diff = points[a][i] - points[b][i];
      d2 += diff * diff;
    }
    return std::sqrt(d2);
  };

  std::vector<size_t> selected;
  if (k == 0) return selected;
  std::vector<bool> taken(n, false);
  std::vector<double> min_dist(n, 0.0);

  size_t first = 0;
  for (size_t i = 1; i < n; ++i) {
    if (ppl_scores[i] > ppl_scores[first]) first = i;  // ties keep lowest index
  }
  selected.push_back(first);
  taken[first] = true;
  for (size_t i = 0; i < n; ++i) min_dist[i] = dist(i, first);

  while (selected.size() < k) {
    size_t best = n;
    double best_obj = -1.0;
    for (size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double obj = ppl_scores[i] * min_dist[i];
      if (obj > best_obj) {
        best_obj = obj;
        best = i;
      }
    }
    selected.push_back(best);
    taken[best] = true;
    for (size_t i = 0; i < n; ++i) min_dist[i] = std::min(min_dist[i], dist(i, best));
  }
  return selected;
}

PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw std::invalid_argument("need >= 2 points to fit");
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) throw std::invalid_argument("power-law inputs must be positive");
  }
  const double n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    const double lx = std::log(x);
    const double ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) throw std::invalid_argument("degenerate fit: all x equal");
  PowerLawFit fit;
  fit.exponent = (n * sxy - sx * sy) / denom;
  fit.coefficient = std::exp((sy - fit.exponent * sx) / n);
  double ss = 0.0;
  fit.x_min = points.front().first;
  fit.x_max = points.front().first;
  for (const auto& [x, y] : points) {
    const double resid = std::log(y) - (std::log(fit.coefficient) + fit.exponent * std::log(x));
    ss += resid * resid;
    fit.x_min = std::min(fit.x_min, x);
    fit.x_max = std::max(fit.x_max, x);
  }
  fit.rms_log_residual = std::sqrt(ss / n);
  return fit;
}

double power_law_eval(const PowerLawFit& fit, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("power-law input must be positive");
  return fit.coefficient * std::pow(x, fit.exponent);
}

HparamPrediction predict_optimal_hparams(double checkpoint_loss, double actual_compute,
                                         const HparamLaws& laws) {
  if (!(checkpoint_loss > 0.0)) throw std::invalid_argument("loss must be positive");
  if (!(actual_compute > 0.0)) throw std::invalid_argument("compute must be positive");
  if (laws.loss_law.exponent == 0.0) throw std::invalid_argument("loss law has zero exponent");
  (void)actual_compute;  // reported context only; equivalence comes from loss

  HparamPrediction pred;
  // Invert loss = a * compute^b  =>  compute = (loss/a)^(1/b).
  pred.equivalent_compute =
      std::pow(checkpoint_loss / laws.loss_law.coefficient, 1.0 / laws.loss_law.exponent);
  const double lo = power_law_eval(laws.loss_law, laws.loss_law.x_min);
  const double hi = power_law_eval(laws.loss_law, laws.loss_law.x_max);
  const double loss_min = std::min(lo, hi);
  const double loss_max = std::max(lo, hi);
  pred.extrapolated = checkpoint_loss < loss_min || checkpoint_loss > loss_max;
  pred.batch_size = power_law_eval(laws.batch_law, pred.equivalent_compute);
  pred.learning_rate = power_law_eval(laws.lr_law, pred.equivalent_compute);
  return pred;
}

}  // namespace envforge
