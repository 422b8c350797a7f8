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


#include "bubble/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "bubble/analysis.hpp"
#include "bubble/dynamics.hpp"
#include "bubble/io.hpp"
#include "bubble/ionmodel.hpp"
#include "bubble/parallel.hpp"
#include "bubble/spectral.hpp"
#include "json.hpp"

namespace bubble {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kHeader =
    "# bubble scenario configuration\n"
    "# units: energies and fields in J, times in 1/J, ion detuning and drive in kHz\n";

const std::vector<ScenarioInfo>& registry() {
  static const std::vector<ScenarioInfo> r{
      {"gap-scan", "two lowest levels on an h grid and the avoided-crossing fit",
       {"chain", "scan.h_start", "scan.h_end", "scan.points"}},
      {"quench-scan", "maximum order parameter after quenching |down..down> to each h",
       {"chain", "scan.h_start", "scan.h_end", "scan.points", "schedule.t_max",
        "schedule.samples"}},
      {"lz-probe", "final polarized-state probabilities after g-ramp, h-ramp, g-ramp",
       {"chain", "schedule.taus", "schedule.g_ramp_time", "schedule.h_end", "schedule.shape",
        "noise.gamma_i", "noise.gamma_c"}},
      {"ramp-dynamics", "site magnetizations and largest-domain histograms along h-ramps",
       {"chain", "schedule.taus", "schedule.g_ramp_time", "schedule.h_start", "schedule.h_end",
        "schedule.shape", "schedule.samples", "schedule.initial", "noise.gamma_i",
        "noise.gamma_c", "shots.count", "shots.seed"}},
      {"kz-collapse", "zero-crossing times of linear ramps and the scaling collapse",
       {"chain", "scan.h_start", "scan.h_end", "schedule.taus", "schedule.g_ramp_time",
        "schedule.h_end", "schedule.samples", "shots.count", "shots.seed", "shots.bootstrap"}},
      {"spectrum", "lowest levels of the reflection-symmetric sector versus h",
       {"chain", "scan.h_start", "scan.h_end", "scan.points", "scan.levels"}},
      {"ion-calibrate", "ion-chain modes, flattened drive, couplings and fitted decay",
       {"chain.ell", "ion.N", "ion.mu_khz", "ion.eta", "ion.amplitude_khz"}},
      {"correlations", "connected zz correlations of a g-ramped state",
       {"chain", "schedule.g_ramp_time", "schedule.initial"}},
      {"energy-cross", "energies of the two g-ramped polarized states versus h",
       {"chain", "scan.h_start", "scan.h_end", "scan.points", "schedule.g_ramp_time",
        "noise.flip_p", "shots.count", "shots.seed", "shots.bootstrap"}},
  };
  return r;
}

bool known_scenario(const std::string& s) {
  for (const auto& info : registry())
    if (info.name == s) return true;
  return false;
}

// ---- parsing ---------------------------------------------------------------

class Reader {
 public:
  std::vector<ConfigIssue> issues;
  std::map<std::string, int> lines;

  void issue(const std::string& field, int line, const std::string& msg) {
    issues.push_back({field, line, msg});
  }

  static int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

  // Reports keys of `map` outside `known`.
  void check_keys(const YAML::Node& map, const std::string& prefix,
                  const std::set<std::string>& known) {
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!known.count(key))
        issue(prefix + key, line_of(kv.first), "unknown field");
    }
  }

  template <typename T>
  void get(const YAML::Node& map, const std::string& prefix, const std::string& key, T& out,
           bool required = false) {
    const std::string field = prefix + key;
    const YAML::Node n = map[key];
    if (!n) {
      if (required) issue(field, line_of(map), "required field missing");
      return;
    }
    lines[field] = line_of(n);
    try {
      if (!n.IsScalar()) throw YAML::Exception(n.Mark(), "not a scalar");
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      issue(field, line_of(n), std::string("expected ") + type_name<T>());
    }
  }

  void get_list(const YAML::Node& map, const std::string& prefix, const std::string& key,
                std::vector<double>& out) {
    const std::string field = prefix + key;
    const YAML::Node n = map[key];
    if (!n) return;
    lines[field] = line_of(n);
    if (!n.IsSequence()) {
      issue(field, line_of(n), "expected a list of numbers");
      return;
    }
    out.clear();
    for (const auto& item : n) {
      try {
        out.push_back(item.as<double>());
      } catch (const YAML::Exception&) {
        issue(field, line_of(item), "expected a number");
      }
    }
  }

  YAML::Node section(const YAML::Node& root, const std::string& key, bool required = false) {
    const YAML::Node n = root[key];
    if (!n) {
      if (required) issue(key, line_of(root), "required section missing");
      return {};
    }
    if (!n.IsMap()) {
      issue(key, line_of(n), "expected a mapping");
      return {};
    }
    return n;
  }

 private:
  template <typename T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, std::string>) return "a string";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else return "a number";
  }
};

ScenarioConfig read_config(const std::string& text, Reader& r) {
  ScenarioConfig c;
  c.chain.boundary = Boundary::StaticDomainWalls;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    r.issue("(document)", e.mark.line + 1, e.msg);
    return c;
  }
  if (!root.IsMap()) {
    r.issue("(document)", 1, "expected a mapping at the top level");
    return c;
  }
  r.check_keys(root, "", {"scenario", "chain", "scan", "schedule", "noise", "shots", "ion",
                          "output"});
  r.get(root, "", "scenario", c.scenario, true);
  r.get(root, "", "output", c.output);

  if (auto n = r.section(root, "chain", true)) {
    r.check_keys(n, "chain.", {"ell", "beta", "J", "boundary", "g", "h"});
    r.get(n, "chain.", "ell", c.chain.ell, true);
    r.get(n, "chain.", "beta", c.chain.beta, true);
    r.get(n, "chain.", "J", c.chain.J);
    r.get(n, "chain.", "g", c.chain.g);
    r.get(n, "chain.", "h", c.chain.h);
    std::string b = to_string(c.chain.boundary);
    r.get(n, "chain.", "boundary", b);
    try {
      c.chain.boundary = boundary_from_string(b);
    } catch (const InvalidArgument& e) {
      r.issue("chain.boundary", r.lines["chain.boundary"], e.what());
    }
  }
  if (auto n = r.section(root, "scan")) {
    r.check_keys(n, "scan.", {"h_start", "h_end", "points", "levels"});
    r.get(n, "scan.", "h_start", c.scan.h_start);
    r.get(n, "scan.", "h_end", c.scan.h_end);
    r.get(n, "scan.", "points", c.scan.points);
    r.get(n, "scan.", "levels", c.scan.levels);
  }
  if (auto n = r.section(root, "schedule")) {
    r.check_keys(n, "schedule.", {"taus", "g_ramp_time", "h_start", "h_end", "shape", "t_max",
                                  "samples", "initial"});
    r.get_list(n, "schedule.", "taus", c.schedule.taus);
    r.get(n, "schedule.", "g_ramp_time", c.schedule.g_ramp_time);
    r.get(n, "schedule.", "h_start", c.schedule.h_start);
    r.get(n, "schedule.", "h_end", c.schedule.h_end);
    r.get(n, "schedule.", "shape", c.schedule.shape);
    r.get(n, "schedule.", "t_max", c.schedule.t_max);
    r.get(n, "schedule.", "samples", c.schedule.samples);
    r.get(n, "schedule.", "initial", c.schedule.initial);
  }
  if (auto n = r.section(root, "noise")) {
    r.check_keys(n, "noise.", {"gamma_i", "gamma_c", "flip_p"});
    r.get(n, "noise.", "gamma_i", c.noise.gamma_i);
    r.get(n, "noise.", "gamma_c", c.noise.gamma_c);
    r.get(n, "noise.", "flip_p", c.noise.flip_p);
  }
  if (auto n = r.section(root, "shots")) {
    r.check_keys(n, "shots.", {"count", "seed", "bootstrap"});
    r.get(n, "shots.", "count", c.shots.count);
    r.get(n, "shots.", "seed", c.shots.seed);
    r.get(n, "shots.", "bootstrap", c.shots.bootstrap);
  }
  if (auto n = r.section(root, "ion")) {
    r.check_keys(n, "ion.", {"N", "mu_khz", "eta", "amplitude_khz"});
    r.get(n, "ion.", "N", c.ion.N);
    r.get(n, "ion.", "mu_khz", c.ion.mu_khz);
    r.get(n, "ion.", "eta", c.ion.eta);
    r.get(n, "ion.", "amplitude_khz", c.ion.amplitude_khz);
  }
  return c;
}

std::string num(double x) { return format_double(x); }

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

// ---- running ---------------------------------------------------------------

class Outputs {
 public:
  Outputs(fs::path dir, std::vector<OutputFile>& list) : dir_(std::move(dir)), list_(list) {}

  void write(const std::string& name, const std::string& content) {
    write_file(dir_ / name, content);
    list_.push_back({name, sha256_hex(content), content.size()});
  }

 private:
  fs::path dir_;
  std::vector<OutputFile>& list_;
};

struct Context {
  ScenarioConfig config;
  int workers = 1;
  std::uint64_t seed = 0;
  Outputs* out = nullptr;
  std::vector<std::string>* warnings = nullptr;

  void warn(const std::string& w) const { warnings->push_back(w); }
  void absorb(const Diagnostics& d, const std::string& where) const {
    for (const auto& w : d.warnings) warn(where + ": " + w);
  }
};

std::vector<double> h_grid(const ScanSection& s) {
  std::vector<double> h;
  for (int i = 0; i < s.points; ++i)
    h.push_back(s.points == 1 ? s.h_start
                              : s.h_start + (s.h_end - s.h_start) * i / (s.points - 1));
  return h;
}

StateVector initial_state(const ScenarioConfig& c) {
  return c.schedule.initial == "up" ? StateVector::all_up(c.chain.ell)
                                    : StateVector::all_down(c.chain.ell);
}

std::string tau_tag(double tau) { return "tau" + format_double(tau); }

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  std::uint32_t v[2];
  seq.generate(v, v + 2);
  return (std::uint64_t{v[0]} << 32) | v[1];
}

// Ground-state preparation used by several scenarios: transverse field ramped
// linearly from 0 at constant h.
StateVector g_ramped(const ChainSpec& spec, double g, double h, double ramp_time,
                     const StateVector& start) {
  if (ramp_time <= 0.0) return start;
  Schedule s;
  s.append(linear_stage(StageKind::GRampUp, ramp_time, 0.0, g, h, h));
  return *evolve_pure(spec, s, start, {ramp_time}).final_state;
}

json fit_json(const GapFit& f) {
  return {{"h_c[J]", f.h_c},         {"Delta_c[J]", f.Delta_c},
          {"delta[J]", f.delta},     {"M[1]", f.M},
          {"rms_residual[J]", f.rms_residual}, {"window_points", f.window_points}};
}

void run_gap_scan(const Context& ctx) {
  const auto& c = ctx.config;
  ScanOptions so;
  so.workers = ctx.workers;
  Diagnostics d;
  const auto scan = gap_scan(c.chain, c.chain.g, h_grid(c.scan), so, &d);
  ctx.absorb(d, "gap_scan");
  Csv csv({"h[J]", "E0[J]", "E1[J]", "gap[J]", "m0[1]", "m1[1]"});
  for (const auto& p : scan)
    csv.row({p.h, p.energies[0], p.energies[1], p.gap(), p.order_parameters[0],
             p.order_parameters[1]});
  ctx.out->write("gap_scan.csv", csv.str());
  try {
    ctx.out->write("gap_fit.json", fit_json(fit_gap(scan)).dump(2) + "\n");
  } catch (const FitDegenerate& e) {
    ctx.warn(std::string("gap fit skipped: ") + e.what());
  }
}

void run_quench_scan(const Context& ctx) {
  const auto& c = ctx.config;
  const auto qs = quench_scan(c.chain, c.chain.g, h_grid(c.scan), c.schedule.t_max,
                              c.schedule.samples, ctx.workers);
  ctx.absorb(qs.diagnostics, "quench_scan");
  Csv csv({"h[J]", "max_sigma_z[1]", "t_at_max[1/J]"});
  for (const auto& p : qs.points) csv.row({p.h, p.max_order_parameter, p.t_at_max});
  ctx.out->write("quench_scan.csv", csv.str());
  ctx.out->write("quench_scan.json", json{{"h_peak[J]", qs.h_peak}}.dump(2) + "\n");
}

std::string ramp_profile_csv(const OptimizedRamp& ramp) {
  Csv csv({"h[J]", "t_fraction[1]", "gap[J]"});
  for (std::size_t i = 0; i < ramp.h_knots.size(); ++i)
    csv.row({ramp.h_knots[i], ramp.t_unit[i], ramp.gap_knots[i]});
  return csv.str();
}

void run_lz_probe(const Context& ctx) {
  const auto& c = ctx.config;
  LZOptions o;
  o.g_ramp_time = c.schedule.g_ramp_time;
  o.optimized = c.schedule.shape == "optimized";
  o.workers = ctx.workers;
  if (c.noise.active()) o.noise = NoiseModel::uniform(c.chain.ell, c.noise.gamma_i, c.noise.gamma_c);
  std::optional<OptimizedRamp> ramp;
  if (o.optimized) {
    ramp = optimized_h_ramp(c.chain, c.chain.g, 0.0, c.schedule.h_end, 201, ctx.workers);
    ctx.out->write("ramp_profile.csv", ramp_profile_csv(*ramp));
  }
  const auto pts = landau_zener_probe(c.chain, c.chain.g, c.schedule.h_end, c.schedule.taus, o,
                                      ramp ? &*ramp : nullptr);
  Csv csv({"tau[1/J]", "p_down[1]", "p_up[1]"});
  for (const auto& p : pts) csv.row({p.tau, p.p_down, p.p_up});
  ctx.out->write("lz_probe.csv", csv.str());
}

json first_crossings(const TrajectoryRecord& rec) {
  json arr = json::array();
  for (int i = 0; i < rec.ell; ++i) {
    std::vector<double> v;
    for (const auto& row : rec.site_mz) v.push_back(row[i]);
    try {
      arr.push_back(first_zero_crossing(rec.times, v));
    } catch (const NoCrossing&) {
      arr.push_back(nullptr);
    }
  }
  return arr;
}

void run_ramp_dynamics(const Context& ctx) {
  const auto& c = ctx.config;
  const double g = c.chain.g;
  std::optional<OptimizedRamp> ramp;
  if (c.schedule.shape == "optimized") {
    ramp = optimized_h_ramp(c.chain, g, c.schedule.h_start, c.schedule.h_end, 201, ctx.workers);
    ctx.out->write("ramp_profile.csv", ramp_profile_csv(*ramp));
  }
  const auto start = initial_state(c);
  const auto& taus = c.schedule.taus;
  struct Result {
    TrajectoryRecord rec;
    Eigen::VectorXd final_p;
  };
  const auto results = parallel_map(taus.size(), ctx.workers, [&](std::size_t k) {
    Schedule s;
    if (c.schedule.g_ramp_time > 0.0)
      s.append(linear_stage(StageKind::GRampUp, c.schedule.g_ramp_time, 0.0, g,
                            c.schedule.h_start, c.schedule.h_start));
    s.append(ramp ? ramp->stage(taus[k])
                  : linear_stage(StageKind::HRamp, taus[k], g, g, c.schedule.h_start,
                                 c.schedule.h_end));
    const auto times = uniform_times(s.duration(), c.schedule.samples);
    Result r;
    if (c.noise.active()) {
      r.rec = evolve_lindblad(c.chain, s,
                              NoiseModel::uniform(c.chain.ell, c.noise.gamma_i, c.noise.gamma_c),
                              start, times);
      r.final_p = r.rec.final_density->diagonal().real();
    } else {
      r.rec = evolve_pure(c.chain, s, start, times);
      r.final_p = r.rec.final_state->probabilities();
    }
    return r;
  });
  json summary = json::array();
  for (std::size_t k = 0; k < taus.size(); ++k) {
    const auto& r = results[k];
    ctx.absorb(r.rec.diagnostics, tau_tag(taus[k]));
    const std::string tag = "ramp_" + tau_tag(taus[k]);
    ctx.out->write(tag + "_sites.csv", r.rec.site_csv());
    ctx.out->write(tag + "_summary.csv", r.rec.summary_csv());
    const auto hist = largest_domain_histogram(c.chain.ell, r.final_p / r.final_p.sum());
    ctx.out->write(tag + "_domains.csv", hist.to_csv());
    json entry{{"tau[1/J]", taus[k]},
               {"final_order_parameter[1]", r.rec.order_parameter.back()},
               {"domain_peak_exact", hist.peak()},
               {"first_sign_change_by_site[1/J]", first_crossings(r.rec)}};
    if (c.shots.count > 0) {
      const auto shots = sample_outcomes(c.chain.ell, r.final_p / r.final_p.sum(),
                                         MeasurementBasis::Z, c.shots.count,
                                         derived_seed(ctx.seed, k));
      ctx.out->write(tag + "_shots.bin", encode_shots(shots));
      const auto sh = largest_domain_histogram(shots);
      ctx.out->write(tag + "_domains_shots.csv", sh.to_csv());
      entry["domain_peak_shots"] = sh.peak();
    }
    summary.push_back(entry);
  }
  ctx.out->write("ramp_dynamics.json", summary.dump(2) + "\n");
}

void run_kz_collapse(const Context& ctx) {
  const auto& c = ctx.config;
  const double g = c.chain.g, J = c.chain.J;
  ScanOptions so;
  so.workers = ctx.workers;
  const auto tr = locate_transition(c.chain, g, c.scan.h_start, c.scan.h_end, so);
  const double h_c = tr.fit.h_c;
  const auto prepared = g_ramped(c.chain, g, 0.0, c.schedule.g_ramp_time, initial_state(c));
  const auto& taus = c.schedule.taus;
  const bool use_shots = c.shots.count > 0;
  const auto trajectories = parallel_map(taus.size(), ctx.workers, [&](std::size_t k) {
    // h(t) = 2 J t / tau from 0 up to h_end
    const double duration = taus[k] * c.schedule.h_end / (2.0 * J);
    Schedule s;
    s.append(linear_stage(StageKind::HRamp, duration, g, g, 0.0, c.schedule.h_end));
    const auto times = uniform_times(duration, c.schedule.samples);
    IntegratorOptions io;
    io.keep_probabilities = use_shots;
    const auto rec = evolve_pure(c.chain, s, prepared, times, io);
    KZTrajectory t{taus[k], rec.times, rec.order_parameter};
    if (use_shots) {
      for (std::size_t i = 0; i < times.size(); ++i) {
        const auto shots = sample_outcomes(c.chain.ell, rec.probabilities[i], MeasurementBasis::Z,
                                           c.shots.count, derived_seed(ctx.seed, k, i));
        double m = 0.0;
        for (auto b : shots.bitstrings)
          for (int site = 0; site < c.chain.ell; ++site) m += spin_z(b, site);
        t.sigma_z[i] = m / (static_cast<double>(shots.repetitions()) * c.chain.ell);
      }
    }
    return t;
  });
  KZOptions ko;
  ko.J = J;
  ko.bootstrap = c.shots.bootstrap;
  ko.seed = ctx.seed;
  ko.source = use_shots ? "shots:" + std::to_string(c.shots.count) : "exact";
  const auto fit = kz_collapse(trajectories, h_c, ko);
  for (std::size_t i = 0; i < fit.excluded_taus.size(); ++i)
    ctx.warn("tau " + format_double(fit.excluded_taus[i]) + " excluded: " +
             fit.excluded_reasons[i]);
  Csv csv({"tau[1/J]", "t[1/J]", "sigma_z[1]"});
  for (const auto& t : trajectories)
    for (std::size_t i = 0; i < t.times.size(); ++i) csv.row({t.tau, t.times[i], t.sigma_z[i]});
  ctx.out->write("kz_trajectories.csv", csv.str());
  ctx.out->write("kz_crossings.csv", fit.crossings_csv());
  ctx.out->write("kz_rescaled.csv", kz_rescaled_csv(trajectories, fit, J));
  auto j = json::parse(fit.to_json());
  j["gap_fit"] = fit_json(tr.fit);
  j["tau_range[1/J]"] = {*std::min_element(taus.begin(), taus.end()),
                         *std::max_element(taus.begin(), taus.end())};
  ctx.out->write("kz_fit.json", j.dump(2) + "\n");
}

void run_spectrum(const Context& ctx) {
  const auto& c = ctx.config;
  const auto levels =
      symmetric_spectrum_vs_h(c.chain, c.chain.g, h_grid(c.scan), c.scan.levels, false, ctx.workers);
  Csv csv({"h[J]", "level", "energy[J]", "order_parameter[1]"});
  for (const auto& l : levels)
    for (Eigen::Index k = 0; k < l.energies.size(); ++k)
      csv.row({l.h, static_cast<double>(k), l.energies[k], l.order_parameters[k]});
  ctx.out->write("spectrum.csv", csv.str());
}

void run_ion_calibrate(const Context& ctx) {
  const auto& c = ctx.config;
  const int ell = c.chain.ell;
  const auto potential = ion::even_spacing_potential(c.ion.N, ell);
  const auto modes = ion::chain_modes(c.ion.N, potential);
  auto drive = ion::DriveConfig::uniform(c.ion.N, ion::kTwoPi * c.ion.mu_khz * 1e3,
                                         ion::kTwoPi * c.ion.amplitude_khz * 1e3);
  drive.eta = c.ion.eta;
  const bool staggered = ion::is_sign_staggered(ion::raw_couplings(modes, drive), ell);
  drive.Omega = ion::flatten_amplitudes(modes, drive, ell);
  const auto block = ion::central_block(ion::jij_from_modes(modes, drive), ell);
  const auto fit = ion::fit_beta(block);
  ctx.out->write("ion_modes.csv", modes.to_csv());
  ctx.out->write("ion_couplings.csv", ion::normalize_couplings(block).to_csv());
  std::vector<double> omega_khz, positions;
  for (Eigen::Index i = 0; i < drive.Omega.size(); ++i)
    omega_khz.push_back(drive.Omega[i] / ion::kTwoPi / 1e3);
  for (Eigen::Index i = 0; i < modes.positions.size(); ++i) positions.push_back(modes.positions[i]);
  json j{{"potential", {{"quadratic", potential.quadratic}, {"quartic", potential.quartic}}},
         {"positions[1]", positions},
         {"spacing_deviation[1]", ion::spacing_deviation(modes.positions, ell)},
         {"raw_sign_staggered", staggered},
         {"Omega[kHz]", omega_khz},
         {"nn_spread[1]", ion::nn_spread(block)},
         {"J_nn[kHz]", fit.J / ion::kTwoPi / 1e3},
         {"beta", fit.beta},
         {"beta_rms_residual", fit.rms_residual},
         {"exponential", fit.exponential}};
  ctx.out->write("ion_calibration.json", j.dump(2) + "\n");
}

void run_correlations(const Context& ctx) {
  const auto& c = ctx.config;
  const auto psi =
      g_ramped(c.chain, c.chain.g, c.chain.h, c.schedule.g_ramp_time, initial_state(c));
  const auto C = connected_correlations(psi);
  Csv csv({"row", "col", "C[1]"});
  for (int i = 0; i < c.chain.ell; ++i)
    for (int j = 0; j < c.chain.ell; ++j) csv.row({double(i + 1), double(j + 1), C(i, j)});
  ctx.out->write("correlations.csv", csv.str());
  std::vector<double> nn;
  for (int i = 0; i + 1 < c.chain.ell; ++i) nn.push_back(C(i, i + 1));
  ctx.out->write("correlations.json",
                 json{{"order_parameter[1]", order_parameter(psi)}, {"nearest_neighbour[1]", nn}}
                         .dump(2) +
                     "\n");
}

void run_energy_cross(const Context& ctx) {
  const auto& c = ctx.config;
  const auto grid = h_grid(c.scan);
  const int ell = c.chain.ell;
  struct Row {
    double e[2], flip[2], shot[2] = {0, 0}, se[2] = {0, 0};
  };
  const auto rows = parallel_map(grid.size(), ctx.workers, [&](std::size_t k) {
    Row r;
    const StateVector starts[2] = {StateVector::all_down(ell), StateVector::all_up(ell)};
    for (int w = 0; w < 2; ++w) {
      const auto psi = g_ramped(c.chain, c.chain.g, grid[k], c.schedule.g_ramp_time, starts[w]);
      const auto sf = spin_flip_error_model(psi, c.noise.flip_p, c.chain, c.chain.g, grid[k]);
      r.e[w] = sf.raw;
      r.flip[w] = sf.corrected;
      if (c.shots.count > 0) {
        const auto z = sample_shots(psi, MeasurementBasis::Z, c.shots.count,
                                    derived_seed(ctx.seed, k, 2 * w));
        const auto x = sample_shots(psi, MeasurementBasis::X, c.shots.count,
                                    derived_seed(ctx.seed, k, 2 * w + 1));
        BootstrapOptions bo;
        bo.resamples = c.shots.bootstrap;
        bo.seed = derived_seed(ctx.seed, k, 4 + w);
        const auto est = estimate_energy(z, x, c.chain, c.chain.g, grid[k], bo);
        r.shot[w] = est.mean;
        r.se[w] = est.standard_error;
      }
    }
    return r;
  });
  Csv csv({"h[J]", "E_down[J]", "E_up[J]", "E_down_flip[J]", "E_up_flip[J]"});
  std::vector<double> diff, diff_flip;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto& r = rows[k];
    csv.row({grid[k], r.e[0], r.e[1], r.flip[0], r.flip[1]});
    diff.push_back(r.e[0] - r.e[1]);
    diff_flip.push_back(r.flip[0] - r.flip[1]);
  }
  ctx.out->write("energy_cross.csv", csv.str());
  if (c.shots.count > 0) {
    Csv shots({"h[J]", "E_down[J]", "stderr_down[J]", "E_up[J]", "stderr_up[J]"});
    for (std::size_t k = 0; k < grid.size(); ++k)
      shots.row({grid[k], rows[k].shot[0], rows[k].se[0], rows[k].shot[1], rows[k].se[1]});
    ctx.out->write("energy_cross_shots.csv", shots.str());
  }
  json j;
  auto crossing = [&](const std::vector<double>& d, const char* key) {
    try {
      j[key] = first_zero_crossing(grid, d);
    } catch (const NoCrossing&) {
      j[key] = nullptr;
      ctx.warn(std::string(key) + ": energies do not cross on the grid");
    }
  };
  crossing(diff, "h_cross[J]");
  crossing(diff_flip, "h_cross_flip[J]");
  j["flip_p"] = c.noise.flip_p;
  ctx.out->write("energy_cross.json", j.dump(2) + "\n");
}

void dispatch(const Context& ctx) {
  const auto& s = ctx.config.scenario;
  if (s == "gap-scan") return run_gap_scan(ctx);
  if (s == "quench-scan") return run_quench_scan(ctx);
  if (s == "lz-probe") return run_lz_probe(ctx);
  if (s == "ramp-dynamics") return run_ramp_dynamics(ctx);
  if (s == "kz-collapse") return run_kz_collapse(ctx);
  if (s == "spectrum") return run_spectrum(ctx);
  if (s == "ion-calibrate") return run_ion_calibrate(ctx);
  if (s == "correlations") return run_correlations(ctx);
  if (s == "energy-cross") return run_energy_cross(ctx);
  throw InvalidArgument("unknown scenario '" + s + "'");
}

std::string status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::ConfigError: return "config-error";
    case RunStatus::NumericalError: return "numerical-error";
    case RunStatus::Failed: return "failed";
  }
  return "failed";
}

}  // namespace

std::string ConfigIssue::str() const {
  std::string s = field;
  if (line > 0) s += " (line " + std::to_string(line) + ")";
  return s + ": " + message;
}

namespace {
std::string join_issues(const std::vector<ConfigIssue>& issues) {
  std::string s = "invalid config";
  for (const auto& i : issues) s += "\n  " + i.str();
  return s;
}
}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : InvalidArgument(join_issues(issues)), issues_(std::move(issues)) {}

std::vector<ConfigIssue> check_config(const ScenarioConfig& c) {
  std::vector<ConfigIssue> out;
  auto bad = [&](const std::string& f, const std::string& m) { out.push_back({f, 0, m}); };
  if (!known_scenario(c.scenario))
    bad("scenario", "unknown scenario '" + c.scenario + "'");
  const auto& ch = c.chain;
  if (ch.ell < 1 || ch.ell > 24) bad("chain.ell", "must lie in [1, 24]");
  if (!(ch.beta > 0.0) || !std::isfinite(ch.beta)) bad("chain.beta", "must be positive");
  if (!(ch.J > 0.0) || !std::isfinite(ch.J)) bad("chain.J", "must be positive");
  if (!std::isfinite(ch.g)) bad("chain.g", "must be finite");
  if (!std::isfinite(ch.h)) bad("chain.h", "must be finite");

  const auto& s = c.scenario;
  const bool scans = s == "gap-scan" || s == "quench-scan" || s == "spectrum" ||
                     s == "energy-cross" || s == "kz-collapse";
  if (scans) {
    if (!(c.scan.h_end > c.scan.h_start)) bad("scan.h_end", "must exceed scan.h_start");
    const int min_points = s == "gap-scan" ? 7 : 2;
    if (s != "kz-collapse" && c.scan.points < min_points)
      bad("scan.points", "must be >= " + std::to_string(min_points));
  }
  if (s == "spectrum" && c.scan.levels < 1) bad("scan.levels", "must be >= 1");

  const auto& sc = c.schedule;
  for (double t : sc.taus)
    if (!(t > 0.0) || !std::isfinite(t)) bad("schedule.taus", "durations must be positive");
  if ((s == "lz-probe" || s == "ramp-dynamics") && sc.taus.empty())
    bad("schedule.taus", "at least one ramp duration is required");
  if (s == "kz-collapse" && sc.taus.size() < 2)
    bad("schedule.taus", "at least two ramp durations are required");
  if (!(sc.g_ramp_time >= 0.0)) bad("schedule.g_ramp_time", "must be >= 0");
  if (sc.shape != "optimized" && sc.shape != "linear")
    bad("schedule.shape", "must be optimized or linear");
  if (!(sc.t_max > 0.0)) bad("schedule.t_max", "must be positive");
  if (sc.samples < 2) bad("schedule.samples", "must be >= 2");
  if (sc.initial != "down" && sc.initial != "up") bad("schedule.initial", "must be down or up");
  if (!std::isfinite(sc.h_start) || !std::isfinite(sc.h_end))
    bad("schedule.h_end", "fields must be finite");
  if (s == "ramp-dynamics" && sc.h_end == sc.h_start)
    bad("schedule.h_end", "must differ from schedule.h_start");
  if (s == "kz-collapse" && !(sc.h_end > 0.0)) bad("schedule.h_end", "must be positive");

  const auto& n = c.noise;
  if (!(n.gamma_i >= 0.0)) bad("noise.gamma_i", "must be >= 0");
  if (!(n.gamma_c >= 0.0)) bad("noise.gamma_c", "must be >= 0");
  if (!(n.flip_p >= 0.0 && n.flip_p <= 0.5)) bad("noise.flip_p", "must lie in [0, 0.5]");
  if (n.active()) {
    if (s != "lz-probe" && s != "ramp-dynamics")
      bad("noise.gamma_i", "dephasing is only supported by lz-probe and ramp-dynamics");
    else if (ch.ell > kMaxLindbladEll)
      bad("chain.ell", "dephasing runs are limited to ell <= " + std::to_string(kMaxLindbladEll));
  }

  if (c.shots.count < 0) bad("shots.count", "must be >= 0");
  if (c.shots.bootstrap < 2) bad("shots.bootstrap", "must be >= 2");

  if (s == "ion-calibrate") {
    if (c.ion.N < 3) bad("ion.N", "must be >= 3");
    if (ch.ell < 5 || ch.ell > c.ion.N) bad("chain.ell", "must lie in [5, ion.N]");
    if (!(c.ion.eta > 0.0)) bad("ion.eta", "must be positive");
    if (!(c.ion.amplitude_khz > 0.0)) bad("ion.amplitude_khz", "must be positive");
    if (!(c.ion.mu_khz != 0.0) || !std::isfinite(c.ion.mu_khz))
      bad("ion.mu_khz", "must be finite and non-zero");
  }
  if (c.output.empty()) bad("output", "must not be empty");
  return out;
}

namespace {
// Parse problems first, then range checks on every field that did parse.
std::vector<ConfigIssue> collect_issues(const std::string& text, ScenarioConfig& c) {
  Reader r;
  c = read_config(text, r);
  auto issues = r.issues;
  const bool document_error =
      std::any_of(issues.begin(), issues.end(),
                  [](const ConfigIssue& i) { return i.field == "(document)"; });
  if (document_error) return issues;
  for (auto& i : check_config(c)) {
    const bool seen = std::any_of(issues.begin(), issues.end(),
                                  [&](const ConfigIssue& p) { return p.field == i.field; });
    if (seen) continue;
    auto it = r.lines.find(i.field);
    if (it != r.lines.end()) i.line = it->second;
    issues.push_back(i);
  }
  return issues;
}
}  // namespace

std::vector<ConfigIssue> validate_config(const std::string& text) {
  ScenarioConfig c;
  return collect_issues(text, c);
}

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig c;
  auto issues = collect_issues(text, c);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

ScenarioConfig load_config(const fs::path& path) { return parse_config(read_file(path)); }

std::string serialize_config(const ScenarioConfig& c) {
  std::ostringstream o;
  o << kHeader;
  o << "scenario: " << c.scenario << "\n";
  o << "chain:\n"
    << "  ell: " << c.chain.ell << "\n"
    << "  beta: " << num(c.chain.beta) << "\n"
    << "  J: " << num(c.chain.J) << "\n"
    << "  boundary: " << to_string(c.chain.boundary) << "\n"
    << "  g: " << num(c.chain.g) << "\n"
    << "  h: " << num(c.chain.h) << "\n";
  o << "scan:\n"
    << "  h_start: " << num(c.scan.h_start) << "\n"
    << "  h_end: " << num(c.scan.h_end) << "\n"
    << "  points: " << c.scan.points << "\n"
    << "  levels: " << c.scan.levels << "\n";
  o << "schedule:\n  taus: [";
  for (std::size_t i = 0; i < c.schedule.taus.size(); ++i)
    o << (i ? ", " : "") << num(c.schedule.taus[i]);
  o << "]\n"
    << "  g_ramp_time: " << num(c.schedule.g_ramp_time) << "\n"
    << "  h_start: " << num(c.schedule.h_start) << "\n"
    << "  h_end: " << num(c.schedule.h_end) << "\n"
    << "  shape: " << c.schedule.shape << "\n"
    << "  t_max: " << num(c.schedule.t_max) << "\n"
    << "  samples: " << c.schedule.samples << "\n"
    << "  initial: " << c.schedule.initial << "\n";
  o << "noise:\n"
    << "  gamma_i: " << num(c.noise.gamma_i) << "\n"
    << "  gamma_c: " << num(c.noise.gamma_c) << "\n"
    << "  flip_p: " << num(c.noise.flip_p) << "\n";
  o << "shots:\n"
    << "  count: " << c.shots.count << "\n"
    << "  seed: " << c.shots.seed << "\n"
    << "  bootstrap: " << c.shots.bootstrap << "\n";
  o << "ion:\n"
    << "  N: " << c.ion.N << "\n"
    << "  mu_khz: " << num(c.ion.mu_khz) << "\n"
    << "  eta: " << num(c.ion.eta) << "\n"
    << "  amplitude_khz: " << num(c.ion.amplitude_khz) << "\n";
  o << "output: " << quoted(c.output) << "\n";
  return o.str();
}

const std::vector<ScenarioInfo>& list_scenarios() { return registry(); }

int RunManifest::exit_code() const {
  switch (status) {
    case RunStatus::Ok: return 0;
    case RunStatus::ConfigError: return 2;
    case RunStatus::NumericalError: return 3;
    case RunStatus::Failed: return 1;
  }
  return 1;
}

std::string RunManifest::to_json() const {
  json j;
  j["tool"] = "bubble";
  j["tool_version"] = tool_version;
  j["scenario"] = scenario;
  j["config_sha256"] = config_sha256;
  j["seed"] = seed;
  j["workers"] = workers;
  j["wall_time_s"] = wall_time_s;
  json tol = json::object();
  for (const auto& [k, v] : tolerances) tol[k] = v;
  j["tolerances"] = tol;
  json outs = json::array();
  for (const auto& f : outputs)
    outs.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["outputs"] = outs;
  j["warnings"] = warnings;
  j["status"] = status_name(status);
  j["exit_code"] = exit_code();
  j["error"] = error.empty() ? json(nullptr) : json(error);
  return j.dump(2) + "\n";
}

RunManifest run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioConfig cfg = config;
  if (options.seed) cfg.shots.seed = *options.seed;
  const fs::path dir = options.output ? *options.output : fs::path(cfg.output);

  RunManifest m;
  m.scenario = cfg.scenario;
  m.seed = cfg.shots.seed;
  m.workers = std::max(1, options.workers);
  m.tolerances = {{"eigen_residual_rel", 1e-10},  {"krylov_expm", 1e-12},
                  {"pure_step_local", 1e-9},      {"lindblad_step_local", 1e-10},
                  {"min_step[1/J]", 1e-9},        {"gap_fit_xtol", 1e-15}};
  Outputs out(dir, m.outputs);
  try {
    const std::string canonical = serialize_config(cfg);
    m.config_sha256 = sha256_hex(canonical);
    auto issues = check_config(cfg);
    if (!issues.empty()) throw ConfigError(std::move(issues));
    fs::create_directories(dir);
    out.write("config.yaml", canonical);
    Context ctx{cfg, m.workers, cfg.shots.seed, &out, &m.warnings};
    dispatch(ctx);
  } catch (const InvalidArgument& e) {
    m.status = RunStatus::ConfigError;
    m.error = e.what();
  } catch (const NumericalError& e) {
    m.status = RunStatus::NumericalError;
    m.error = e.what();
  } catch (const std::exception& e) {
    m.status = RunStatus::Failed;
    m.error = e.what();
  }
  m.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    write_file(dir / "run_manifest.json", m.to_json());
  } catch (const std::exception& e) {
    if (m.status == RunStatus::Ok) {
      m.status = RunStatus::Failed;
      m.error = std::string("could not write the manifest: ") + e.what();
    }
  }
  return m;
}

RunManifest run_config_file(const fs::path& path, const RunOptions& options) {
  std::string text;
  try {
    text = read_file(path);
    return run_scenario(parse_config(text), options);
  } catch (const std::exception& e) {
    RunManifest m;
    m.status = RunStatus::ConfigError;
    m.error = e.what();
    m.workers = std::max(1, options.workers);
    fs::path dir = "out";
    if (options.output) {
      dir = *options.output;
    } else {
      try {
        const auto root = YAML::Load(text);
        if (root.IsMap() && root["output"]) dir = root["output"].as<std::string>();
        if (root.IsMap() && root["scenario"]) m.scenario = root["scenario"].as<std::string>();
      } catch (const YAML::Exception&) {
      }
    }
    m.config_sha256 = sha256_hex(text);
    try {
      write_file(dir / "run_manifest.json", m.to_json());
    } catch (const std::exception&) {
    }
    return m;
  }
}

}  // namespace bubble
