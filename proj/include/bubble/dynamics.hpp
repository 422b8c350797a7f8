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


#ifndef BUBBLE_DYNAMICS_HPP
#define BUBBLE_DYNAMICS_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bubble/schedule.hpp"
#include "bubble/spectral.hpp"
#include "bubble/spinchain.hpp"

namespace bubble {

struct NoiseModel {
  std::vector<double> gamma_i;  // per-site z dephasing, units of J
  double gamma_c = 0.0;         // common x dephasing, units of J

  static NoiseModel uniform(int ell, double gamma_i, double gamma_c);
  void validate(int ell) const;
};

struct IntegratorOptions {
  double local_tol = 1e-9;     // per-step error of the pure-state stepper
  double min_step = 1e-9;      // StepUnderflow below this (units 1/J)
  double max_step = 1.0;
  double krylov_tol = 1e-12;
  int krylov_max_dim = 60;
  double lindblad_tol = 1e-10;  // per-step error of the density-matrix stepper
  bool keep_probabilities = false;
};

struct TrajectoryRecord {
  int ell = 0;
  std::vector<double> times;
  std::vector<double> g;
  std::vector<double> h;
  std::vector<std::vector<double>> site_mz;  // [sample][site]
  std::vector<double> order_parameter;
  std::vector<double> energy;
  std::vector<double> norm;  // norm (pure) or trace (density) at each sample
  std::vector<Eigen::VectorXd> probabilities;  // filled when requested
  std::optional<StateVector> final_state;
  std::optional<Eigen::MatrixXcd> final_density;
  double norm_drift = 0.0;  // accumulated renormalization (pure) or trace error
  double min_eigenvalue = 0.0;  // lowest density-matrix eigenvalue seen at samples
  long steps = 0;
  long rejected = 0;
  Diagnostics diagnostics;

  /// Long format: t, site, value.
  std::string site_csv() const;
  /// One row per sample: t, g, h, order parameter, energy.
  std::string summary_csv() const;
};

/// Schrodinger evolution: fourth-order Magnus steps (two Gauss nodes plus one
/// commutator) exponentiated by Lanczos, step size adapted by step doubling.
TrajectoryRecord evolve_pure(const ChainSpec& spec, const Schedule& schedule,
                             const StateVector& initial, const std::vector<double>& sample_times,
                             const IntegratorOptions& options = {});

/// Master equation with z dephasing per site and x dephasing at a common
/// rate, adaptive RK4 on the dense density matrix (l <= 8).
TrajectoryRecord evolve_lindblad(const ChainSpec& spec, const Schedule& schedule,
                                 const NoiseModel& noise, const Eigen::MatrixXcd& rho0,
                                 const std::vector<double>& sample_times,
                                 const IntegratorOptions& options = {});
TrajectoryRecord evolve_lindblad(const ChainSpec& spec, const Schedule& schedule,
                                 const NoiseModel& noise, const StateVector& initial,
                                 const std::vector<double>& sample_times,
                                 const IntegratorOptions& options = {});

inline constexpr int kMaxLindbladEll = 8;

/// h-ramp with dh/dt proportional to Delta(h)^2.
struct OptimizedRamp {
  std::vector<double> h_knots;
  std::vector<double> gap_knots;
  std::vector<double> t_unit;  // cumulative time for unit total duration
  double g = 0.0;
  double Delta_min = 0.0;      // gap used for the slope comparison
  double integral = 0.0;       // int dh / Delta^2 over the ramp

  /// Stage of total duration tau (an HRamp at constant g).
  Stage stage(double tau) const;
  /// Duration of a linear ramp whose slope equals this ramp's slowest slope,
  /// divided by the ramp duration.
  double linear_equivalent_ratio() const;
};

/// Builds the ramp from a gap function sampled on the given knots (ascending
/// or descending).
OptimizedRamp optimized_h_ramp(const std::function<double(double)>& gap,
                               const std::vector<double>& h_knots, double g);

/// Gap from the chain's two lowest levels: a uniform grid of `n_uniform`
/// knots plus a dense cluster around the fitted crossing when it lies inside
/// the interval.
OptimizedRamp optimized_h_ramp(const ChainSpec& spec, double g, double h_start, double h_end,
                               int n_uniform = 201, int workers = 1);

struct LZOptions {
  bool three_stage = true;
  double g_ramp_time = 2.4;
  bool optimized = true;  // otherwise linear h-ramps
  std::optional<NoiseModel> noise;
  IntegratorOptions integrator{};
  int workers = 1;
};

struct LZPoint {
  double tau = 0.0;
  double p_down = 0.0;
  double p_up = 0.0;
};

/// Final probabilities of the two polarized states after ramping from
/// |down...down>. When `ramp` is given it is used for the h stage.
std::vector<LZPoint> landau_zener_probe(const ChainSpec& spec, double g, double h_end,
                                        const std::vector<double>& tau_list,
                                        const LZOptions& options = {},
                                        const OptimizedRamp* ramp = nullptr);

/// Schedule of the three-stage protocol (or the bare h-ramp).
Schedule lz_schedule(double g, double h_end, double tau, const LZOptions& options,
                     const OptimizedRamp* ramp);

struct TwoLevelModel {
  double M = 1.0;
  double h_c = 0.0;
  double Delta_c = 1.0;

  void validate() const;
  double omega(double h) const;
};

/// P(psi_up, t) = (Delta_c / omega)^2 sin^2(omega t / 2).
std::vector<double> two_level_quench(const TwoLevelModel& model, double h,
                                     const std::vector<double>& t_grid);

struct QuenchPoint {
  double h = 0.0;
  double max_order_parameter = 0.0;
  double t_at_max = 0.0;
};

struct QuenchScan {
  std::vector<QuenchPoint> points;
  double h_peak = 0.0;
  Diagnostics diagnostics;
};

/// Quench from |down...down> to (g, h) for each h; max over a uniform time
/// grid of <sigma^z>.
QuenchScan quench_scan(const ChainSpec& spec, double g, const std::vector<double>& h_grid,
                       double t_max, int n_times = 401, int workers = 1,
                       const IntegratorOptions& options = {});

}  // namespace bubble

#endif  // BUBBLE_DYNAMICS_HPP
