// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "envforge/run_config.hpp"

namespace envforge {

// Exit codes shared by all subcommands.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;      // bad config / missing inputs
constexpr int kExitInvariant = 3;   // an artifact violated its invariants
constexpr int kExitInfeasible = 4;  // infeasible workload or budget

// Each command writes its artifacts atomically under config.out_dir and
// returns an exit code; diagnostics go to stderr.
int cmd_gen_domains(const RunConfig& config);
int cmd_build_envs(const RunConfig& config);
int cmd_run_episodes(const RunConfig& config);
int cmd_simulate(const RunConfig& config);
int cmd_report(const RunConfig& config);

}  // namespace envforge
