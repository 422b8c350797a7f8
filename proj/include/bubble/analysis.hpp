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


// Measurement emulation and the statistics built on it.

#ifndef BUBBLE_ANALYSIS_HPP
#define BUBBLE_ANALYSIS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bubble/parallel.hpp"
#include "bubble/spinchain.hpp"

namespace bubble {

enum class MeasurementBasis { Z, X };

std::string to_string(MeasurementBasis b);
MeasurementBasis basis_from_string(const std::string& s);

/// Projective measurement record. Bit i-1 of each entry is site i; a set bit
/// is the +1 outcome (up for Z, +x for X).
struct ShotSet {
  int ell = 0;
  MeasurementBasis basis = MeasurementBasis::Z;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> bitstrings;

  std::size_t repetitions() const { return bitstrings.size(); }
  void validate() const;
};

/// Draws shots from |amplitude|^2 by inverse CDF; for the X basis a Hadamard
/// is applied to every site first. Deterministic for a fixed seed.
ShotSet sample_shots(const StateVector& state, MeasurementBasis basis, std::size_t repetitions,
                     std::uint64_t seed);

/// Draws shots from an outcome distribution already expressed in `basis`
/// (e.g. the diagonal of a density matrix for Z).
ShotSet sample_outcomes(int ell, const Eigen::VectorXd& probabilities, MeasurementBasis basis,
                        std::size_t repetitions, std::uint64_t seed);

/// Outcome distribution in the given basis (exact counterpart of sampling).
Eigen::VectorXd measurement_probabilities(const StateVector& state, MeasurementBasis basis);

/// One JSON header line (ell, basis, seed, count), then the bits of all shots
/// packed shot-major, LSB first.
void write_shots(const std::filesystem::path& path, const ShotSet& shots);
ShotSet read_shots(const std::filesystem::path& path);
std::string encode_shots(const ShotSet& shots);
ShotSet decode_shots(const std::string& bytes);

/// Length of the longest run of set bits among the ell sites.
int largest_domain(std::uint64_t bits, int ell);

struct DomainHistogram {
  int ell = 0;
  std::vector<double> probability;  // index n = 0..ell

  int peak() const;
  std::string to_csv() const;
};

/// Requires Z-basis shots.
DomainHistogram largest_domain_histogram(const ShotSet& shots);
/// Same from an exact Z-basis distribution.
DomainHistogram largest_domain_histogram(int ell, const Eigen::VectorXd& probabilities);

/// C_ij = <z_i z_j> - <z_i><z_j> from the amplitudes.
Eigen::MatrixXd connected_correlations(const StateVector& state);
Eigen::MatrixXd connected_correlations(int ell, const Eigen::VectorXd& probabilities);

struct EnergyEstimate {
  double mean = 0.0;
  double standard_error = 0.0;  // bootstrap spread of the mean
  int resamples = 0;
};

struct BootstrapOptions {
  int resamples = 1000;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// <H> from Z-basis shots (zz and longitudinal terms) and X-basis shots
/// (transverse term). Throws BasisMismatch when the bases or sizes disagree.
EnergyEstimate estimate_energy(const ShotSet& z_shots, const ShotSet& x_shots,
                               const ChainSpec& spec, double g, double h,
                               const BootstrapOptions& options = {});

/// Same estimator evaluated on the exact outcome distributions.
double estimate_energy_exact(const StateVector& state, const ChainSpec& spec, double g,
                             double h);

struct SpinFlipEnergy {
  double raw = 0.0;
  double corrected = 0.0;
};

/// Mean over sites of (1-2p) E(psi) + p [E(X_i psi) + E(Z_i psi)].
SpinFlipEnergy spin_flip_error_model(const StateVector& state, double p, const ChainSpec& spec,
                                     double g, double h);

/// Order-parameter trace of one linear ramp h(t) = 2 J t / tau.
struct KZTrajectory {
  double tau = 0.0;
  std::vector<double> times;
  std::vector<double> sigma_z;
};

struct KZOptions {
  double J = 1.0;
  int grid_points = 200;
  int bootstrap = 1000;
  std::uint64_t seed = 0;
  // Recorded in the output: "exact" or a shot count description.
  std::string source = "exact";
};

struct KZCrossing {
  double tau = 0.0;
  double t0 = 0.0;
  double h0 = 0.0;
  double tc = 0.0;
};

struct KZFit {
  std::vector<KZCrossing> crossings;        // used in the fit
  std::vector<double> excluded_taus;        // no sign change
  std::vector<std::string> excluded_reasons;
  double h_c = 0.0;
  double mu = 0.0;
  double log_prefactor = 0.0;
  std::vector<double> residuals;  // of log(|t0 - tc| / tau)
  double mu_ci_low = 0.0;
  double mu_ci_high = 0.0;
  double collapse_before = 0.0;  // against |t - tc| / tau
  double collapse_after = 0.0;   // against |t - tc| / tau * tau^mu
  std::string source;

  std::string crossings_csv() const;
  std::string to_json() const;
};

/// Crossing times, power-law exponent, and collapse quality. Trajectories
/// without a sign change are listed as excluded; NoCrossing is thrown only
/// when fewer than two remain.
KZFit kz_collapse(const std::vector<KZTrajectory>& trajectories, double h_c,
                  const KZOptions& options = {});

/// Rescaled curves for t >= tc: tau, x = |t - tc| / tau * tau^mu, sigma_z.
std::string kz_rescaled_csv(const std::vector<KZTrajectory>& trajectories, const KZFit& fit,
                            double J = 1.0);

/// First sign change by linear interpolation; throws NoCrossing.
double first_zero_crossing(const std::vector<double>& times, const std::vector<double>& values);

}  // namespace bubble

#endif  // BUBBLE_ANALYSIS_HPP
