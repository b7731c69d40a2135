// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace envforge {

// Deterministic random source. std::mt19937_64 is fully specified by the
// standard; the distribution helpers below are hand-rolled because the
// std::*_distribution classes are implementation-defined and would break
// byte-identical reruns across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(splitmix(seed)) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [lo, hi], inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi);

  size_t index(size_t n);

  bool bernoulli(double p) { return uniform01() < p; }

  // Basic Box-Muller; one fresh pair per call keeps the state trajectory
  // independent of call interleaving.
  double normal(double mean = 0.0, double stddev = 1.0);

  double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

  double exponential(double rate);

  // Pareto with scale xm > 0 and shape alpha > 0 (heavy tail for alpha <= ~2).
  double pareto(double xm, double alpha);

  // Index sampled proportionally to nonnegative weights.
  size_t weighted_index(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  // Child stream decorrelated from the parent by a label, so independent
  // subsystems can draw without perturbing each other's sequences.
  Rng fork(uint64_t label) {
    uint64_t s = next_u64();
    return Rng(s ^ (0x9e3779b97f4a7c15ULL * (label + 1)));
  }

  static uint64_t hash_str(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

 private:
  static uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 eng_;
};

}  // namespace envforge
