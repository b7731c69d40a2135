// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "envforge/rng.hpp"

#include <numbers>

namespace envforge {

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
  if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
  const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  if (span == 0) return lo + static_cast<int64_t>(next_u64());  // full 64-bit range
  // Rejection sampling to avoid modulo bias.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return lo + static_cast<int64_t>(x % span);
}

size_t Rng::index(size_t n) {
  if (n == 0) throw std::invalid_argument("index: empty range");
  return static_cast<size_t>(uniform_int(0, static_cast<int64_t>(n) - 1));
}

double Rng::normal(double mean, double stddev) {
  // Box-Muller, discarding the second variate.
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * mag * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be positive");
  double u = uniform01();
  while (u <= 0.0) u = uniform01();
  return -std::log(u) / rate;
}

double Rng::pareto(double xm, double alpha) {
  if (!(xm > 0.0) || !(alpha > 0.0)) {
    throw std::invalid_argument("pareto: scale and shape must be positive");
  }
  double u = uniform01();
  while (u <= 0.0) u = uniform01();
  return xm / std::pow(u, 1.0 / alpha);
}

size_t Rng::weighted_index(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("weighted_index: empty weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("weighted_index: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("weighted_index: all weights zero");
  const double target = uniform01() * total;
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (target < acc) return i;
  }
  return weights.size() - 1;  // guards floating-point edge at target == total
}

}  // namespace envforge
