// Copyright 2026 The bubble Authors - All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Command-line entry point: run, validate, scenarios.

#include <iostream>

#include "CLI11.hpp"
#include "bubble/io.hpp"
#include "bubble/parallel.hpp"
#include "bubble/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"bubble: spin-chain transition and ramp-dynamics scenarios"};
  app.set_version_flag("--version", std::string(bubble::kToolVersion));
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario config");
  std::string run_config;
  int workers = bubble::default_workers();
  std::uint64_t seed = 0;
  std::string out_dir;
  run->add_option("config", run_config, "YAML scenario config")->required();
  run->add_option("--workers", workers, "worker threads (default: core count)")
      ->check(CLI::PositiveNumber);
  auto* seed_opt = run->add_option("--seed", seed, "override shots.seed");
  auto* out_opt = run->add_option("--out", out_dir, "override the output directory");

  auto* validate = app.add_subcommand("validate", "check a config and list every problem");
  std::string validate_config;
  validate->add_option("config", validate_config, "YAML scenario config")->required();

  auto* scenarios = app.add_subcommand("scenarios", "list the available scenarios");

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    bubble::RunOptions opts;
    opts.workers = workers;
    if (*seed_opt) opts.seed = seed;
    if (*out_opt) opts.output = out_dir;
    const auto m = bubble::run_config_file(run_config, opts);
    std::cout << "scenario " << m.scenario << ": " << (m.exit_code() == 0 ? "ok" : "failed")
              << " in " << bubble::format_double(m.wall_time_s) << " s, " << m.outputs.size()
              << " output files\n";
    for (const auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
    if (!m.error.empty()) std::cerr << "error: " << m.error << "\n";
    return m.exit_code();
  }

  if (*validate) {
    std::vector<bubble::ConfigIssue> issues;
    try {
      issues = bubble::validate_config(bubble::read_file(validate_config));
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
    for (const auto& i : issues) std::cerr << i.str() << "\n";
    if (!issues.empty()) return 2;
    std::cout << "ok\n";
    return 0;
  }

  if (*scenarios) {
    for (const auto& s : bubble::list_scenarios()) {
      std::cout << s.name << "\n  " << s.summary << "\n  reads:";
      for (const auto& p : s.parameters) std::cout << " " << p;
      std::cout << "\n";
    }
  }
  return 0;
}
