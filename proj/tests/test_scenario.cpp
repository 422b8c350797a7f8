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


#include <algorithm>
#include <fstream>
#include <set>

#include "bubble/analysis.hpp"
#include "bubble/io.hpp"
#include "bubble/scenario.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bubble;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("bubble_scenario_test_" + name);
  fs::remove_all(p);
  return p;
}

bool has_issue(const std::vector<ConfigIssue>& issues, const std::string& field) {
  return std::any_of(issues.begin(), issues.end(),
                     [&](const ConfigIssue& i) { return i.field == field; });
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      row.push_back(std::stod(line.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(row);
  }
  return rows;
}

const char* kGapScan = R"(scenario: gap-scan
chain:
  ell: 5
  beta: 1.21
  g: 1.2
scan: {h_start: 0, h_end: 0.6, points: 31}
)";

}  // namespace

TEST_CASE("scenario registry") {
  const std::set<std::string> expected{"gap-scan",      "quench-scan",  "lz-probe",
                                       "ramp-dynamics", "kz-collapse",  "spectrum",
                                       "ion-calibrate", "correlations", "energy-cross"};
  std::set<std::string> names;
  for (const auto& s : list_scenarios()) {
    names.insert(s.name);
    CHECK_FALSE(s.summary.empty());
    CHECK_FALSE(s.parameters.empty());
  }
  CHECK(list_scenarios().size() == 9);
  CHECK(names == expected);
}

TEST_CASE("validation names the offending fields") {
  const auto missing = validate_config("scenario: gap-scan\nchain:\n  beta: 1.21\n");
  REQUIRE(has_issue(missing, "chain.ell"));
  CHECK(missing[0].line == 3);

  const auto range = validate_config("scenario: gap-scan\nchain: {ell: 5, beta: -1}\n");
  REQUIRE(has_issue(range, "chain.beta"));
  CHECK(range[0].line == 2);

  // all problems at once, not only the first
  const auto many = validate_config(
      "scenario: nope\nchain: {ell: 5, beta: -1, J: 0}\nscan: {points: 3}\ncolour: red\n");
  CHECK(has_issue(many, "colour"));
  const auto many2 = validate_config(
      "scenario: nope\nchain: {ell: 5, beta: -1, J: 0}\nscan: {points: 3}\n");
  CHECK(has_issue(many2, "scenario"));
  CHECK(has_issue(many2, "chain.beta"));
  CHECK(has_issue(many2, "chain.J"));

  const auto both = validate_config("scenario: gap-scan\nchain:\n  beta: -1\n");
  CHECK(has_issue(both, "chain.ell"));
  CHECK(has_issue(both, "chain.beta"));

  const auto types = validate_config("scenario: gap-scan\nchain: {ell: five, beta: x}\n");
  CHECK(has_issue(types, "chain.ell"));
  CHECK(has_issue(types, "chain.beta"));

  CHECK(has_issue(validate_config("scenario: [\n"), "(document)"));
  CHECK(validate_config(kGapScan).empty());

  CHECK_THROWS_AS(parse_config("scenario: gap-scan\n"), ConfigError);
  try {
    parse_config("scenario: lz-probe\nchain: {ell: 12, beta: 1, g: 1}\nnoise: {gamma_i: 0.1}\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(has_issue(e.issues(), "chain.ell"));
    CHECK(has_issue(e.issues(), "schedule.taus"));
  }
}

TEST_CASE("canonical serialization round-trips byte for byte") {
  auto c = parse_config(kGapScan);
  c.schedule.taus = {0.27, 1.33, 3.98, 1e-3};
  c.chain.h = 0.1 + 0.2;
  c.shots.seed = 18446744073709551615ULL;
  c.output = "out dir/\"quoted\"";
  const std::string once = serialize_config(c);
  const auto back = parse_config(once);
  CHECK(serialize_config(back) == once);
  CHECK(back.chain.h == c.chain.h);
  CHECK(back.schedule.taus == c.schedule.taus);
  CHECK(back.shots.seed == c.shots.seed);
  CHECK(back.output == c.output);
  CHECK(once.rfind("# bubble scenario configuration\n# units:", 0) == 0);

  for (const auto& entry : fs::directory_iterator(BUBBLE_CONFIG_DIR)) {
    CAPTURE(entry.path().string());
    const auto cfg = load_config(entry.path());
    const auto text = serialize_config(cfg);
    CHECK(serialize_config(parse_config(text)) == text);
  }
}

TEST_CASE("gap scan run finds the avoided crossing") {
  const auto dir = scratch("gap");
  RunOptions o;
  o.output = dir;
  const auto m = run_scenario(parse_config(kGapScan), o);
  REQUIRE(m.exit_code() == 0);
  const auto rows = read_csv(dir / "gap_scan.csv");
  REQUIRE(rows.size() == 31);
  const auto best = std::min_element(rows.begin(), rows.end(),
                                     [](const auto& a, const auto& b) { return a[3] < b[3]; });
  CHECK(std::abs((*best)[0] - 0.31) <= 0.02);
  const auto fit = nlohmann::json::parse(read_file(dir / "gap_fit.json"));
  CHECK(std::abs(fit["h_c[J]"].get<double>() - 0.31) < 0.02);

  const auto manifest = nlohmann::json::parse(read_file(dir / "run_manifest.json"));
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["tool_version"] == kToolVersion);
  CHECK(manifest["config_sha256"].get<std::string>().size() == 64);
  for (const auto& f : manifest["outputs"])
    CHECK(sha256_file(dir / f["path"].get<std::string>()) == f["sha256"].get<std::string>());
  CHECK(manifest["outputs"].size() == 3);
}

TEST_CASE("quench scan without a transverse field stays polarized") {
  auto c = parse_config(
      "scenario: quench-scan\nchain: {ell: 4, beta: 1.21, g: 0}\n"
      "scan: {h_start: 0, h_end: 0.6, points: 5}\nschedule: {t_max: 5, samples: 51}\n");
  RunOptions o;
  o.output = scratch("quench");
  REQUIRE(run_scenario(c, o).exit_code() == 0);
  const auto rows = read_csv(*o.output / "quench_scan.csv");
  REQUIRE(rows.size() == 5);
  for (const auto& r : rows) CHECK(std::abs(r[1] + 1.0) < 1e-12);
}

TEST_CASE("identical config and seed give identical outputs") {
  auto c = parse_config(
      "scenario: ramp-dynamics\nchain: {ell: 5, beta: 1.21, g: 1.2}\n"
      "schedule: {taus: [0.5, 2], g_ramp_time: 1, h_end: 2, shape: linear, samples: 11}\n"
      "shots: {count: 300, seed: 5}\n");
  RunOptions a, b;
  a.output = scratch("det_a");
  b.output = scratch("det_b");
  b.workers = 2;
  const auto ma = run_scenario(c, a);
  const auto mb = run_scenario(c, b);
  REQUIRE(ma.exit_code() == 0);
  REQUIRE(ma.outputs.size() == mb.outputs.size());
  for (std::size_t i = 0; i < ma.outputs.size(); ++i) {
    CHECK(ma.outputs[i].path == mb.outputs[i].path);
    CHECK(ma.outputs[i].sha256 == mb.outputs[i].sha256);
  }
  const auto shots = read_shots(*a.output / "ramp_tau0.5_shots.bin");
  CHECK(shots.ell == 5);
  CHECK(shots.repetitions() == 300);

  RunOptions reseeded = a;
  reseeded.output = scratch("det_c");
  reseeded.seed = 6;
  const auto mc = run_scenario(c, reseeded);
  CHECK(mc.seed == 6);
  CHECK(mc.config_sha256 != ma.config_sha256);
}

TEST_CASE("failed runs still write a manifest") {
  // ramps that end before the transition never flip the magnetization
  auto c = parse_config(
      "scenario: kz-collapse\nchain: {ell: 4, beta: 1.21, g: 1.2}\n"
      "scan: {h_start: 0, h_end: 0.8}\nschedule: {taus: [1, 2], h_end: 0.05, samples: 11}\n");
  RunOptions o;
  o.output = scratch("fail");
  const auto m = run_scenario(c, o);
  CHECK(m.exit_code() == 3);
  const auto manifest = nlohmann::json::parse(read_file(*o.output / "run_manifest.json"));
  CHECK(manifest["status"] == "numerical-error");
  CHECK(manifest["exit_code"] == 3);
  CHECK_FALSE(manifest["error"].is_null());

  auto bad = c;
  bad.chain.beta = -1;
  o.output = scratch("fail_cfg");
  CHECK(run_scenario(bad, o).exit_code() == 2);
  CHECK(fs::exists(*o.output / "run_manifest.json"));

  const auto cfg_path = scratch("fail_file.yaml");
  write_file(cfg_path, "scenario: gap-scan\nchain: {beta: 1}\n");
  o.output = scratch("fail_file");
  const auto mf = run_config_file(cfg_path, o);
  CHECK(mf.exit_code() == 2);
  const auto j = nlohmann::json::parse(read_file(*o.output / "run_manifest.json"));
  CHECK(j["status"] == "config-error");
  CHECK(j["error"].get<std::string>().find("chain.ell") != std::string::npos);
}

TEST_CASE("small runs of the remaining scenarios") {
  const std::vector<std::string> configs{
      "scenario: lz-probe\nchain: {ell: 3, beta: 1.21, g: 1.2}\n"
      "schedule: {taus: [1, 4], g_ramp_time: 1, h_end: 1, shape: optimized}\n",
      "scenario: lz-probe\nchain: {ell: 3, beta: 1.21, g: 1.2}\n"
      "schedule: {taus: [1], g_ramp_time: 1, h_end: 1, shape: linear}\n"
      "noise: {gamma_i: 0.01, gamma_c: 0.01}\n",
      "scenario: spectrum\nchain: {ell: 5, beta: 1.21, g: 1.2}\n"
      "scan: {h_start: 0, h_end: 0.6, points: 4, levels: 3}\n",
      "scenario: ion-calibrate\nchain: {ell: 13, beta: 1}\nion: {N: 15}\n",
      "scenario: correlations\nchain: {ell: 5, beta: 0.78, g: 1.7, h: 0.3}\n",
      "scenario: energy-cross\nchain: {ell: 4, beta: 0.78, g: 1.2}\n"
      "scan: {h_start: 0, h_end: 1, points: 5}\nshots: {count: 200, bootstrap: 20}\n",
  };
  int k = 0;
  for (const auto& text : configs) {
    CAPTURE(text);
    RunOptions o;
    o.output = scratch("misc" + std::to_string(k++));
    const auto m = run_scenario(parse_config(text), o);
    CHECK(m.error == "");
    CHECK(m.exit_code() == 0);
    CHECK(m.outputs.size() >= 2);
  }
}
