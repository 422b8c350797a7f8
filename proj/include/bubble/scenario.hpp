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


// Declarative experiment configs and the runner behind the command line.

#ifndef BUBBLE_SCENARIO_HPP
#define BUBBLE_SCENARIO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bubble/errors.hpp"
#include "bubble/spinchain.hpp"

namespace bubble {

inline constexpr const char* kToolVersion = "0.1.0";

struct ScanSection {
  double h_start = 0.0;
  double h_end = 0.6;
  int points = 31;
  int levels = 2;  // spectrum only
};

struct ScheduleSection {
  std::vector<double> taus;
  double g_ramp_time = 2.4;
  double h_start = 0.0;
  double h_end = 1.0;
  std::string shape = "optimized";  // optimized | linear
  double t_max = 20.0;
  int samples = 101;
  std::string initial = "down";  // down | up
};

struct NoiseSection {
  double gamma_i = 0.0;
  double gamma_c = 0.0;
  double flip_p = 0.02;

  bool active() const { return gamma_i > 0.0 || gamma_c > 0.0; }
};

struct ShotSection {
  int count = 0;
  std::uint64_t seed = 1;
  int bootstrap = 1000;
};

struct IonSection {
  int N = 15;
  double mu_khz = -100.0;
  double eta = 0.08;
  double amplitude_khz = 50.0;
};

struct ScenarioConfig {
  std::string scenario;
  ChainSpec chain;
  ScanSection scan;
  ScheduleSection schedule;
  NoiseSection noise;
  ShotSection shots;
  IonSection ion;
  std::string output = "out";
};

struct ConfigIssue {
  std::string field;
  int line = 0;  // 1-based, 0 when unknown
  std::string message;

  std::string str() const;
};

/// Carries every issue found, not only the first.
class ConfigError : public InvalidArgument {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// Parses YAML text; throws ConfigError listing all problems.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// All problems in the text (empty when valid).
std::vector<ConfigIssue> validate_config(const std::string& text);

/// Range and cross-field checks on an already parsed config.
std::vector<ConfigIssue> check_config(const ScenarioConfig& config);

/// Canonical text: fixed key order, shortest round-trip numbers, units header.
std::string serialize_config(const ScenarioConfig& config);

struct ScenarioInfo {
  std::string name;
  std::string summary;
  std::vector<std::string> parameters;  // config fields the scenario reads
};

/// The nine registered scenarios.
const std::vector<ScenarioInfo>& list_scenarios();

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

enum class RunStatus { Ok, ConfigError, NumericalError, Failed };

struct RunManifest {
  std::string scenario;
  std::string config_sha256;
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
  int workers = 1;
  double wall_time_s = 0.0;
  std::vector<std::pair<std::string, double>> tolerances;
  std::vector<OutputFile> outputs;
  std::vector<std::string> warnings;
  RunStatus status = RunStatus::Ok;
  std::string error;

  int exit_code() const;
  std::string to_json() const;
};

struct RunOptions {
  int workers = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output;
};

/// Executes the scenario and writes its outputs plus run_manifest.json into
/// the output directory. The manifest is written even when the run fails.
RunManifest run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// Loads, validates, and runs a config file. Unreadable or invalid configs
/// still produce a manifest (status config-error) in the requested output
/// directory, or in the config's `output` when it can be read.
RunManifest run_config_file(const std::filesystem::path& path, const RunOptions& options = {});

}  // namespace bubble

#endif  // BUBBLE_SCENARIO_HPP
