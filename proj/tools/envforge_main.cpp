// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// envforge: procedural tool-use environments, scripted episode batches, and a
// deterministic rollout-cluster simulator behind one pipeline-style CLI.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "envforge/cli_commands.hpp"
#include "envforge/errors.hpp"

namespace {

struct GlobalArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> mode;
};

// Loads the run config (or defaults when no --config given) and applies the
// flag overrides.
envforge::RunConfig resolve_config(const GlobalArgs& args) {
  envforge::RunConfig config;
  if (!args.config_path.empty()) config = envforge::load_run_config(args.config_path);
  if (args.seed) config.seed = *args.seed;
  if (args.out_dir) config.out_dir = *args.out_dir;
  if (args.mode) {
    if (*args.mode != "sync" && *args.mode != "async" && *args.mode != "compare") {
      throw envforge::ConfigError("--mode must be sync, async, or compare");
    }
    config.sim.mode = *args.mode;
  }
  return config;
}

void add_common_flags(CLI::App* cmd, GlobalArgs& args) {
  cmd->add_option("--config", args.config_path, "Run config JSON file");
  cmd->add_option("--seed", args.seed, "Override the config seed");
  cmd->add_option("--out", args.out_dir, "Override the output directory");
  cmd->add_option("--mode", args.mode, "Simulation mode: sync|async|compare");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Procedural agentic environments and rollout simulation"};
  app.require_subcommand(1);

  GlobalArgs args;
  int (*command)(const envforge::RunConfig&) = nullptr;

  auto* gen = app.add_subcommand("gen-domains", "Generate and validate domain tool graphs");
  add_common_flags(gen, args);
  gen->callback([&]() { command = envforge::cmd_gen_domains; });

  auto* build = app.add_subcommand("build-envs", "Assemble environments from generated domains");
  add_common_flags(build, args);
  build->callback([&]() { command = envforge::cmd_build_envs; });

  auto* run = app.add_subcommand("run-episodes", "Run scripted episode batches over a skill/noise grid");
  add_common_flags(run, args);
  run->callback([&]() { command = envforge::cmd_run_episodes; });

  auto* sim = app.add_subcommand("simulate", "Simulate the rollout cluster");
  add_common_flags(sim, args);
  sim->callback([&]() { command = envforge::cmd_simulate; });

  auto* report = app.add_subcommand("report", "Aggregate run artifacts into a report");
  add_common_flags(report, args);
  report->callback([&]() { command = envforge::cmd_report; });

  CLI11_PARSE(app, argc, argv);

  envforge::RunConfig config;
  try {
    config = resolve_config(args);
  } catch (const envforge::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return envforge::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return envforge::kExitConfig;
  }
  return command(config);
}
