// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "envforge/cli_commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "envforge/errors.hpp"
#include "envforge/json_util.hpp"
#include "envforge/noise.hpp"

namespace envforge {

namespace fs = std::filesystem;

namespace {

// Maps the library's exception taxonomy onto the exit-code contract.
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CapacityInfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const NoFeasibleChainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const InfeasibleBudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const UnsatisfiableSlotError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const InfeasibleConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvariant;
  }
}

std::string zero_pad(int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*d", width, value);
  return buf;
}

uint64_t mix_seed(uint64_t seed, const std::string& label) {
  return seed ^ Rng::hash_str(label);
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& prefix) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind(prefix, 0) == 0 &&
        entry.path().extension() == ".json") {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

int cmd_gen_domains(const RunConfig& config) {
  return guarded([&]() {
    const fs::path dir = fs::path(config.out_dir) / "domains";
    fs::create_directories(dir);
    const std::vector<std::string>& styles =
        config.domains.styles.empty() ? domain_styles() : config.domains.styles;

    bool all_pass = true;
    nlohmann::json reports = nlohmann::json::array();
    for (int i = 0; i < config.domains.count; ++i) {
      DomainGenConfig gen = config.domains.gen;
      gen.style = styles[static_cast<size_t>(i) % styles.size()];
      const uint64_t seed = mix_seed(config.seed, "domain:" + std::to_string(i));
      const auto [schema, graph] = generate_domain(seed, gen);
      const ValidationReport report = validate_toolset(graph);
      all_pass = all_pass && report.pass;

      const std::string name = "domain_" + zero_pad(i, 3) + ".json";
      write_json_atomic(dir / name, {{"schema_version", 1},
                                     {"index", i},
                                     {"style", gen.style},
                                     {"seed", seed},
                                     {"graph", graph_to_json(graph)}});
      reports.push_back({{"file", name},
                         {"style", gen.style},
                         {"tools", graph.node_count()},
                         {"pass", report.pass},
                         {"pass_rate", report.pass_rate()},
                         {"report", report.to_json()}});
    }
    write_json_atomic(dir / "validation.json", {{"schema_version", 1},
                                                {"domains", config.domains.count},
                                                {"pass", all_pass},
                                                {"reports", reports}});
    return all_pass ? kExitOk : kExitInvariant;
  });
}

int cmd_build_envs(const RunConfig& config) {
  return guarded([&]() {
    const fs::path domains_dir = fs::path(config.out_dir) / "domains";
    const auto domain_files = sorted_files(domains_dir, "domain_");
    if (domain_files.empty()) {
      throw ConfigError("no domain files under " + domains_dir.string() +
                        "; run gen-domains first");
    }
    std::vector<ToolGraph> graphs;
    for (const auto& path : domain_files) {
      graphs.push_back(graph_from_json(load_json(path).at("graph")));
    }

    const fs::path dir = fs::path(config.out_dir) / "envs";
    fs::create_directories(dir);

    // One usage-count table per domain; sharing it makes later environments
    // prefer tools earlier ones skipped.
    std::vector<std::map<std::string, int>> usage(graphs.size());
    double complexity_min = 0.0, complexity_max = 0.0, complexity_sum = 0.0;
    int meets_min_tools = 0;
    for (int e = 0; e < config.envs.count; ++e) {
      const size_t d = static_cast<size_t>(e) % graphs.size();
      Rng rng(mix_seed(config.seed, "env:" + std::to_string(e)));
      std::map<std::string, int>* counts =
          config.envs.share_usage_counts ? &usage[d] : nullptr;
      const Environment env = assemble_environment(graphs[d], config.envs.env, rng, counts);

      const size_t need = std::min<size_t>(static_cast<size_t>(config.envs.env.min_tools),
                                           graphs[d].node_count());
      if (env.subgraph.included.size() >= need) meets_min_tools += 1;
      complexity_sum += env.complexity;
      complexity_min = e == 0 ? env.complexity : std::min(complexity_min, env.complexity);
      complexity_max = e == 0 ? env.complexity : std::max(complexity_max, env.complexity);

      write_json_atomic(dir / ("env_" + zero_pad(e, 3) + ".json"),
                        {{"schema_version", 1},
                         {"index", e},
                         {"domain_index", d},
                         {"domain_file", domain_files[d].filename().string()},
                         {"env", env.to_json()}});
    }
    write_json_atomic(dir / "build_summary.json",
                      {{"schema_version", 1},
                       {"envs", config.envs.count},
                       {"domains", graphs.size()},
                       {"min_tools", config.envs.env.min_tools},
                       {"min_tools_fraction",
                        config.envs.count > 0
                            ? static_cast<double>(meets_min_tools) / config.envs.count
                            : 0.0},
                       {"complexity",
                        {{"min", complexity_min},
                         {"mean", config.envs.count > 0 ? complexity_sum / config.envs.count : 0.0},
                         {"max", complexity_max}}}});
    return kExitOk;
  });
}

int cmd_run_episodes(const RunConfig& config) {
  return guarded([&]() {
    const fs::path envs_dir = fs::path(config.out_dir) / "envs";
    const auto env_files = sorted_files(envs_dir, "env_");
    if (env_files.empty()) {
      throw ConfigError("no environment files under " + envs_dir.string() +
                        "; run build-envs first");
    }
    const fs::path domains_dir = fs::path(config.out_dir) / "domains";

    const fs::path dir = fs::path(config.out_dir) / "episodes";
    fs::create_directories(dir / "trajectories");

    std::ostringstream rewards;
    rewards << "env,skill,noise_level,episode," << RewardReport::csv_header() << "\n";
    std::ostringstream pass_rates;
    pass_rates << "env,skill,noise_level,episodes,pass_rate,mean_turns,mean_tokens,"
                  "robustness_gap\n";
    nlohmann::json cells = nlohmann::json::array();

    const int n_envs = std::min<int>(config.episodes.max_envs,
                                     static_cast<int>(env_files.size()));
    for (int ei = 0; ei < n_envs; ++ei) {
      const nlohmann::json bundle = load_json(env_files[static_cast<size_t>(ei)]);
      const Environment env = Environment::from_json(bundle.at("env"));
      const fs::path domain_path = domains_dir / bundle.at("domain_file").get<std::string>();
      const ToolGraph graph = graph_from_json(load_json(domain_path).at("graph"));

      // Pass rate of the clean column, per skill, for the robustness gap.
      std::map<size_t, double> clean_rate;
      for (size_t si = 0; si < config.episodes.skill_grid.size(); ++si) {
        for (size_t ni = 0; ni < config.episodes.noise_levels.size(); ++ni) {
          const double skill = config.episodes.skill_grid[si];
          const int level = config.episodes.noise_levels[ni];
          const NoiseProfile profile = NoiseProfile::for_level(level);
          ScriptedSolver solver = config.episodes.solver;
          solver.skill = skill;

          int passes = 0;
          double turn_sum = 0.0, token_sum = 0.0;
          for (int ep = 0; ep < config.episodes.episodes_per_cell; ++ep) {
            const std::string label = "ep:" + std::to_string(ei) + ":" + std::to_string(si) +
                                      ":" + std::to_string(level) + ":" + std::to_string(ep);
            Rng rng(mix_seed(config.seed, label));
            Task task = generate_task(env, graph, rng);
            if (level > 0) task = inject_instruction_noise(task, level, rng);
            const auto [traj, report] =
                run_episode(env, graph, task, solver, profile, config.episodes.context,
                            config.episodes.limits, config.episodes.tokens, rng);
            passes += report.reward;
            turn_sum += report.turns;
            token_sum += static_cast<double>(report.tokens);
            rewards << ei << "," << format_double(skill) << "," << level << "," << ep << ","
                    << report.csv_row("env" + std::to_string(ei)) << "\n";
            if (ep == 0) {
              write_file_atomic(dir / "trajectories" /
                                    ("env" + std::to_string(ei) + "_s" + std::to_string(si) +
                                     "_n" + std::to_string(level) + ".jsonl"),
                                traj.to_jsonl());
            }
          }
          const int n = config.episodes.episodes_per_cell;
          const double rate = n > 0 ? static_cast<double>(passes) / n : 0.0;
          if (ni == 0) clean_rate[si] = rate;
          const double gap = clean_rate.count(si) ? clean_rate[si] - rate : 0.0;
          pass_rates << ei << "," << format_double(skill) << "," << level << "," << n << ","
                     << format_double(rate) << "," << format_double(n > 0 ? turn_sum / n : 0.0)
                     << "," << format_double(n > 0 ? token_sum / n : 0.0) << ","
                     << format_double(gap) << "\n";
          cells.push_back({{"env", ei},
                           {"skill", skill},
                           {"noise_level", level},
                           {"episodes", n},
                           {"pass_rate", rate},
                           {"mean_turns", n > 0 ? turn_sum / n : 0.0},
                           {"mean_tokens", n > 0 ? token_sum / n : 0.0},
                           {"robustness_gap", gap}});
        }
      }
    }
    write_file_atomic(dir / "rewards.csv", rewards.str());
    write_file_atomic(dir / "pass_rates.csv", pass_rates.str());
    write_json_atomic(dir / "summary.json",
                      {{"schema_version", 1},
                       {"envs", n_envs},
                       {"episodes_per_cell", config.episodes.episodes_per_cell},
                       {"cells", cells}});
    return kExitOk;
  });
}

int cmd_simulate(const RunConfig& config) {
  return guarded([&]() {
    const fs::path dir = fs::path(config.out_dir) / "sim";
    fs::create_directories(dir);

    std::vector<SimMode> modes;
    if (config.sim.mode == "sync") modes = {SimMode::Sync};
    else if (config.sim.mode == "async") modes = {SimMode::Async};
    else modes = {SimMode::Sync, SimMode::Async};

    std::map<std::string, SimMetrics> metrics;
    for (SimMode mode : modes) {
      const SimResult result =
          run_simulation(config.sim.cluster, config.sim.workload, mode, config.seed);
      metrics[to_string(mode)] = result.metrics;
      write_json_atomic(dir / ("metrics_" + to_string(mode) + ".json"),
                        {{"schema_version", 1},
                         {"mode", to_string(mode)},
                         {"seed", config.seed},
                         {"metrics", result.metrics.to_json()}});
      std::ostringstream events;
      for (const auto& e : result.events) events << e.dump() << "\n";
      write_file_atomic(dir / ("events_" + to_string(mode) + ".jsonl"), events.str());
    }
    if (config.sim.mode == "compare") {
      const double sync_sps = metrics.at("sync").samples_per_sec;
      const double speedup = sync_sps > 0.0 ? metrics.at("async").samples_per_sec / sync_sps : 0.0;
      write_json_atomic(dir / "comparison.json",
                        {{"schema_version", 1},
                         {"seed", config.seed},
                         {"speedup_samples_per_sec", speedup},
                         {"sync", metrics.at("sync").to_json()},
                         {"async", metrics.at("async").to_json()}});
      std::cout << "speedup " << format_double(speedup) << "\n";
    }
    return kExitOk;
  });
}

int cmd_report(const RunConfig& config) {
  return guarded([&]() {
    const fs::path out(config.out_dir);
    nlohmann::json report{{"schema_version", 1}};
    std::vector<std::string> warnings;
    std::ostringstream md;
    md << "# Run report\n";

    md << "\n## Domains\n";
    const fs::path validation = out / "domains" / "validation.json";
    if (fs::exists(validation)) {
      const auto v = load_json(validation);
      report["domains"] = {{"count", v.value("domains", 0)}, {"pass", v.value("pass", false)}};
      md << "- domains: " << v.value("domains", 0) << "\n- all tools valid: "
         << (v.value("pass", false) ? "yes" : "no") << "\n";
    } else {
      warnings.push_back("no domain validation report");
      md << "- not run\n";
    }

    md << "\n## Environments\n";
    const fs::path build = out / "envs" / "build_summary.json";
    if (fs::exists(build)) {
      const auto b = load_json(build);
      report["environments"] = b;
      md << "- environments: " << b.value("envs", 0) << "\n- fraction meeting tool minimum: "
         << format_double(b.value("min_tools_fraction", 0.0)) << "\n- complexity mean: "
         << format_double(b.at("complexity").value("mean", 0.0)) << "\n";
    } else {
      warnings.push_back("no environment build summary");
      md << "- not run\n";
    }

    md << "\n## Episodes\n";
    const fs::path episodes = out / "episodes" / "summary.json";
    if (fs::exists(episodes)) {
      const auto s = load_json(episodes);
      report["episodes"] = s;
      md << "- environments exercised: " << s.value("envs", 0) << "\n";
      md << "- episodes per cell: " << s.value("episodes_per_cell", 0) << "\n";
      md << "\n| env | skill | noise | pass rate | gap |\n";
      md << "| --- | ----- | ----- | --------- | --- |\n";
      for (const auto& c : s.value("cells", nlohmann::json::array())) {
        md << "| " << c.value("env", 0) << " | " << format_double(c.value("skill", 0.0)) << " | "
           << c.value("noise_level", 0) << " | " << format_double(c.value("pass_rate", 0.0))
           << " | " << format_double(c.value("robustness_gap", 0.0)) << " |\n";
      }
    } else {
      warnings.push_back("no episode summary");
      md << "- not run\n";
    }

    md << "\n## Simulation\n";
    const fs::path comparison = out / "sim" / "comparison.json";
    if (fs::exists(comparison)) {
      const auto c = load_json(comparison);
      report["simulation"] = c;
      md << "- async/sync speedup: " << format_double(c.value("speedup_samples_per_sec", 0.0))
         << "\n";
    } else {
      bool any = false;
      for (const std::string mode : {"sync", "async"}) {
        const fs::path m = out / "sim" / ("metrics_" + mode + ".json");
        if (!fs::exists(m)) continue;
        any = true;
        report["simulation"][mode] = load_json(m);
        md << "- " << mode << " metrics recorded\n";
      }
      if (!any) {
        warnings.push_back("no simulation metrics");
        md << "- not run\n";
      }
    }

    md << "\n## Warnings\n";
    if (warnings.empty()) {
      md << "- none\n";
    } else {
      for (const auto& w : warnings) md << "- " << w << "\n";
    }
    report["warnings"] = warnings;

    fs::create_directories(out / "report");
    write_json_atomic(out / "report" / "report.json", report);
    write_file_atomic(out / "report" / "report.md", md.str());
    return kExitOk;
  });
}

}  // namespace envforge
