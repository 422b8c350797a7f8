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


#ifndef BUBBLE_SPECTRAL_HPP
#define BUBBLE_SPECTRAL_HPP

#include <cstdint>
#include <vector>

#include "bubble/spinchain.hpp"

namespace bubble {

enum class Subspace { Full, ReflectionSymmetric };
enum class SolverMethod { Auto, Krylov, Dense };

struct EigenOptions {
  int k = 2;
  Subspace subspace = Subspace::Full;
  // Auto: Krylov, dense fallback on non-convergence for l <= 10, and the exact
  // sorted diagonal when g = 0.
  SolverMethod method = SolverMethod::Auto;
  bool want_vectors = true;
  int max_applications_per_pair = 5000;
  std::uint64_t seed = 0x5eedULL;
};

struct EigenResult {
  Eigen::VectorXd eigenvalues;  // ascending, units of J
  std::vector<StateVector> eigenvectors;  // full-space kets (empty if not requested)
  std::vector<double> order_parameters;   // <sigma^z> per returned vector
  Eigen::VectorXd residuals;
  Subspace subspace = Subspace::Full;
};

EigenResult lowest_eigenpairs(const Hamiltonian& H, const EigenOptions& options = {});
EigenResult lowest_eigenpairs(const ChainSpec& spec, double g, double h,
                              const EigenOptions& options = {});

struct ScanPoint {
  double h = 0.0;
  Eigen::VectorXd energies;             // k lowest levels
  std::vector<double> order_parameters;  // one per level
  double gap() const { return energies[1] - energies[0]; }
};

struct ScanOptions {
  EigenOptions eigen{};
  int workers = 1;
};

/// E_0..E_{k-1} on every grid point. Points whose gap jumps by more than ten
/// times the neighbouring differences are re-solved with a larger budget; a
/// warning is recorded if the jump survives.
std::vector<ScanPoint> gap_scan(const ChainSpec& spec, double g, const std::vector<double>& h_grid,
                                const ScanOptions& options = {}, Diagnostics* diagnostics = nullptr);

/// Gap model Delta(h) = Delta_c sqrt(1 + (h - h_c)^2 / delta^2).
struct GapFit {
  double h_c = 0.0;
  double Delta_c = 0.0;
  double delta = 0.0;
  double M = 0.0;  // Delta_c / (2 delta)
  double rms_residual = 0.0;
  int window_points = 0;
  std::vector<double> residuals;

  double gap_at(double h) const;
};

/// Least-squares fit on the points with Delta <= 5 min(Delta); if fewer than
/// five qualify, the five points nearest the minimum are used. Throws
/// FitDegenerate when the minimum is on the first or last grid point.
GapFit fit_gap(const std::vector<double>& h, const std::vector<double>& gap);
GapFit fit_gap(const std::vector<ScanPoint>& scan);

struct TransitionResult {
  GapFit fit;
  std::vector<ScanPoint> scan;  // the refined grid the fit used
};

/// Minimizes the gap over [h_lo, h_hi] and fits the model on a grid zoomed
/// around the minimum.
TransitionResult locate_transition(const ChainSpec& spec, double g, double h_lo, double h_hi,
                                   const ScanOptions& options = {});

struct ScalingPoint {
  int ell = 0;
  GapFit fit;
  double classical_h_c = 0.0;
};

struct ScalingFit {
  double g_star = 0.0;
  double prefactor = 0.0;  // exp(intercept) of ln Delta_c = l ln(g/g*) + c
  double slope = 0.0;
  std::vector<double> residuals;  // per l, in ln Delta_c
};

struct ScalingResult {
  std::vector<ScalingPoint> points;
  ScalingFit fit;
};

/// Locates the transition for each chain length (static domain walls) and
/// regresses ln Delta_c on l.
ScalingResult scaling_sweep(double beta, double g, const std::vector<int>& ells,
                            const ScanOptions& options = {}, double J = 1.0);

ScalingFit fit_scaling(double g, const std::vector<int>& ells, const std::vector<double>& Delta_c);

struct SymmetricLevels {
  double h = 0.0;
  Eigen::VectorXd energies;
  std::vector<double> order_parameters;
  std::vector<StateVector> states;  // only when requested
};

/// k lowest levels inside the reflection-symmetric sector for each h.
std::vector<SymmetricLevels> symmetric_spectrum_vs_h(const ChainSpec& spec, double g,
                                                     const std::vector<double>& h_grid, int k,
                                                     bool keep_states = false, int workers = 1);

}  // namespace bubble

#endif  // BUBBLE_SPECTRAL_HPP
