// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace envforge {

// Domain-specific failures a caller is expected to handle. Anything else
// (contract violations, unknown ids) surfaces as std::invalid_argument or
// std::logic_error and is a programming fault, not a recoverable condition.

struct InfeasibleConfigError : std::runtime_error {
  explicit InfeasibleConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct NoFeasibleChainError : std::runtime_error {
  explicit NoFeasibleChainError(const std::string& what) : std::runtime_error(what) {}
};

struct UnsatisfiableSlotError : std::runtime_error {
  explicit UnsatisfiableSlotError(const std::string& what) : std::runtime_error(what) {}
};

struct GraphTooSmallError : std::runtime_error {
  explicit GraphTooSmallError(const std::string& what) : std::runtime_error(what) {}
};

struct CapacityInfeasibleError : std::runtime_error {
  explicit CapacityInfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

struct InfeasibleBudgetError : std::runtime_error {
  explicit InfeasibleBudgetError(const std::string& what) : std::runtime_error(what) {}
};

// Bad or missing run configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace envforge
