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


#ifndef BUBBLE_IONMODEL_HPP
#define BUBBLE_IONMODEL_HPP

#include <numbers>
#include <string>
#include <vector>

#include "bubble/spinchain.hpp"

namespace bubble::ion {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kOmega0 = kTwoPi * 3.03e6;  // highest transverse mode, rad/s
inline constexpr double kOmegaN = kTwoPi * 2.74e6;  // zig-zag mode, rad/s

/// Dimensionless axial potential per ion: quadratic u^2/2 + quartic u^4/4,
/// plus the Coulomb repulsion sum 1/|u_i - u_j|.
struct AxialPotential {
  double quadratic = 1.0;
  double quartic = 0.0;

  static AxialPotential harmonic() { return {1.0, 0.0}; }
};

/// Quartic-plus-quadratic potential (quartic fixed to 1) whose quadratic term
/// minimizes the largest relative spacing deviation of the `center_count`
/// central ions.
AxialPotential even_spacing_potential(int N, int center_count);

/// Equilibrium positions (ascending), Newton iteration to |grad| < 1e-12.
Eigen::VectorXd equilibrium_positions(int N, const AxialPotential& potential);

/// Largest relative deviation of the central spacings from their mean.
double spacing_deviation(const Eigen::VectorXd& positions, int center_count);

struct ModeStructure {
  int N = 0;
  Eigen::VectorXd positions;  // dimensionless
  Eigen::VectorXd omega;      // rad/s, descending (COM first, zig-zag last)
  Eigen::MatrixXd b;          // b(i, k), orthonormal columns
  double omega_radial = 0.0;  // calibrated single-ion radial frequency
  double omega_coulomb_sq = 0.0;  // calibrated Coulomb scale

  /// mode, frequency[MHz], then participation per ion.
  std::string to_csv() const;
};

/// Transverse modes of the chain, with the radial trap frequency and the
/// Coulomb scale calibrated so the band edges equal omega_top and
/// omega_bottom. Throws NonPlanar if a mode frequency squared is negative.
ModeStructure chain_modes(int N, const AxialPotential& potential, double omega_top = kOmega0,
                          double omega_bottom = kOmegaN);

struct DriveConfig {
  double eta = 0.08;
  double mu = -kTwoPi * 100e3;  // detuning from the zig-zag mode, rad/s
  Eigen::VectorXd Omega;        // per-ion drive amplitude, rad/s

  static constexpr double kDefaultAmplitude = kTwoPi * 50e3;
  static DriveConfig uniform(int N, double mu, double amplitude = kDefaultAmplitude);
  /// |mu| >= 5 eta max(Omega).
  void validate() const;
};

/// Mode sum without any sign correction (hardware convention), rad/s.
/// Throws ResonanceError when a denominator is within 2 pi x 1 kHz of zero.
Eigen::MatrixXd raw_couplings(const ModeStructure& modes, const DriveConfig& drive);

/// Mode sum with the pi-phase correction on every other ion, expressed in the
/// ferromagnetic convention of the spin model (positive couplings).
CouplingMatrix jij_from_modes(const ModeStructure& modes, const DriveConfig& drive);

/// True when sgn J_{i,i+1} = -sgn J_{i,i+2} for every central ion.
bool is_sign_staggered(const Eigen::MatrixXd& raw, int center_count);

/// Amplitudes on the `ell` central ions that make the nearest-neighbour
/// couplings uniform (direct solve in log space); outer ions get zero. Scaled
/// so the largest amplitude equals the drive's largest amplitude. Throws
/// OptimizerStall if a relative deviation above 5% remains.
Eigen::VectorXd flatten_amplitudes(const ModeStructure& modes, const DriveConfig& drive, int ell);

/// Relative spread (max - min) / mean of the nearest-neighbour couplings.
double nn_spread(const CouplingMatrix& couplings);

/// l x l block of the central ions.
CouplingMatrix central_block(const CouplingMatrix& couplings, int ell);

struct BetaFit {
  double J = 0.0;     // mean nearest-neighbour coupling
  double beta = 0.0;
  std::vector<double> mean_by_distance;  // d = 1..4
  std::vector<double> residuals;         // of ln(mean) about the fitted line
  double rms_residual = 0.0;
  bool exponential = false;  // rms residual below 0.05 in log space
};

/// Log-linear regression of the mean coupling at distances 1..4.
/// Throws InvalidArgument on non-positive couplings at those distances.
BetaFit fit_beta(const CouplingMatrix& couplings);

/// Rescaled so the mean nearest-neighbour coupling equals target_J.
CouplingMatrix normalize_couplings(const CouplingMatrix& couplings, double target_J = 1.0);

}  // namespace bubble::ion

#endif  // BUBBLE_IONMODEL_HPP
