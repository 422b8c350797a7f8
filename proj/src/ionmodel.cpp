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


#include "bubble/ionmodel.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>

#include "bubble/io.hpp"

namespace bubble::ion {

namespace {

double potential_energy(const Eigen::VectorXd& u, const AxialPotential& p) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double x2 = u[i] * u[i];
    e += 0.5 * p.quadratic * x2 + 0.25 * p.quartic * x2 * x2;
    for (Eigen::Index j = i + 1; j < u.size(); ++j) e += 1.0 / std::abs(u[i] - u[j]);
  }
  return e;
}

// Transverse Coulomb matrix: A_ii = sum_j 1/|u_ij|^3, A_ij = -1/|u_ij|^3.
Eigen::MatrixXd coulomb_matrix(const Eigen::VectorXd& u) {
  const Eigen::Index n = u.size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) {
        const double c = 1.0 / std::pow(std::abs(u[i] - u[j]), 3);
        A(i, j) = -c;
        A(i, i) += c;
      }
  return A;
}

}  // namespace

Eigen::VectorXd equilibrium_positions(int N, const AxialPotential& p) {
  if (N < 2) throw InvalidArgument("an ion chain needs N >= 2");
  if (p.quartic < 0.0 || (p.quartic == 0.0 && !(p.quadratic > 0.0)))
    throw InvalidArgument("axial potential must be confining");
  Eigen::VectorXd u(N);
  for (int i = 0; i < N; ++i) u[i] = (2.0 * i / (N - 1) - 1.0) * std::pow(N, 0.6);
  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd grad(N);
    Eigen::MatrixXd H = 2.0 * coulomb_matrix(u);
    for (int i = 0; i < N; ++i) {
      double f = p.quadratic * u[i] + p.quartic * u[i] * u[i] * u[i];
      for (int j = 0; j < N; ++j)
        if (j != i) {
          const double d = u[i] - u[j];
          f -= (d > 0 ? 1.0 : -1.0) / (d * d);
        }
      grad[i] = f;
      H(i, i) += p.quadratic + 3.0 * p.quartic * u[i] * u[i];
    }
    if (grad.cwiseAbs().maxCoeff() < 1e-12) return u;
    Eigen::VectorXd step = H.ldlt().solve(grad);
    // backtrack on the energy while keeping the ordering
    const double e0 = potential_energy(u, p);
    double a = 1.0;
    for (int k = 0; k < 60; ++k, a *= 0.5) {
      Eigen::VectorXd trial = u - a * step;
      bool ordered = true;
      for (int i = 0; i + 1 < N; ++i) ordered = ordered && trial[i + 1] > trial[i];
      if (ordered && potential_energy(trial, p) <= e0 + 1e-14 * std::abs(e0)) {
        u = trial;
        break;
      }
    }
  }
  throw NonConvergence("equilibrium positions did not converge");
}

double spacing_deviation(const Eigen::VectorXd& u, int center_count) {
  const int N = static_cast<int>(u.size());
  if (center_count < 2 || center_count > N) throw InvalidArgument("bad center count");
  const int first = (N - center_count) / 2;
  std::vector<double> s;
  for (int i = first; i + 1 < first + center_count; ++i) s.push_back(u[i + 1] - u[i]);
  double mean = 0.0;
  for (double x : s) mean += x / s.size();
  double worst = 0.0;
  for (double x : s) worst = std::max(worst, std::abs(x - mean) / mean);
  return worst;
}

AxialPotential even_spacing_potential(int N, int center_count) {
  if (center_count < 3 || center_count > N) throw InvalidArgument("bad center count");
  auto spread = [&](double a2) {
    return spacing_deviation(equilibrium_positions(N, {a2, 1.0}), center_count);
  };
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::brent_find_minima(spread, -0.3, 1.0, 40, iters);
  return {r.first, 1.0};
}

std::string ModeStructure::to_csv() const {
  std::vector<std::string> header{"mode", "frequency[MHz]"};
  for (int i = 0; i < N; ++i) header.push_back("b_" + std::to_string(i + 1) + "[1]");
  Csv csv(header);
  for (int k = 0; k < N; ++k) {
    std::vector<double> row{double(k + 1), omega[k] / kTwoPi / 1e6};
    for (int i = 0; i < N; ++i) row.push_back(b(i, k));
    csv.row(row);
  }
  return csv.str();
}

ModeStructure chain_modes(int N, const AxialPotential& potential, double omega_top,
                          double omega_bottom) {
  if (!(omega_top > 0.0) || !(omega_bottom < omega_top))
    throw InvalidArgument("band edges must satisfy 0 < bottom < top");
  ModeStructure m;
  m.N = N;
  m.positions = equilibrium_positions(N, potential);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(coulomb_matrix(m.positions));
  const Eigen::VectorXd lam = es.eigenvalues();  // ascending: COM (0) first
  // omega_k^2 = omega_r^2 - c lam_k; COM sits at omega_r.
  m.omega_radial = omega_top;
  m.omega_coulomb_sq = (omega_top * omega_top - omega_bottom * omega_bottom) / lam[N - 1];
  m.omega.resize(N);
  m.b = es.eigenvectors();
  for (int k = 0; k < N; ++k) {
    const double w2 = m.omega_radial * m.omega_radial - m.omega_coulomb_sq * lam[k];
    if (w2 < 0.0) throw NonPlanar("transverse mode frequency squared is negative");
    m.omega[k] = std::sqrt(w2);
    // sign convention: first significant entry positive
    for (int i = 0; i < N; ++i)
      if (std::abs(m.b(i, k)) > 1e-8) {
        if (m.b(i, k) < 0) m.b.col(k) *= -1.0;
        break;
      }
  }
  return m;
}

DriveConfig DriveConfig::uniform(int N, double mu, double amplitude) {
  return DriveConfig{0.08, mu, Eigen::VectorXd::Constant(N, amplitude)};
}

void DriveConfig::validate() const {
  if (!(eta > 0.0)) throw InvalidArgument("Lamb-Dicke factor must be positive");
  if (Omega.size() == 0) throw InvalidArgument("drive amplitudes missing");
  if (std::abs(mu) < 5.0 * eta * Omega.cwiseAbs().maxCoeff())
    throw InvalidArgument("detuning is not dispersive: |mu| < 5 eta max(Omega)");
}

namespace {

// Mode sum for unit amplitudes: eta^2 sum_k b_ik b_jk / (2 (omega_N + mu - omega_k)).
Eigen::MatrixXd mode_kernel(const ModeStructure& modes, double eta, double mu) {
  const int N = modes.N;
  Eigen::VectorXd inv(N);
  for (int k = 0; k < N; ++k) {
    const double d = modes.omega[N - 1] + mu - modes.omega[k];
    if (std::abs(d) < kTwoPi * 1e3)
      throw ResonanceError("drive is within 1 kHz of mode " + std::to_string(k + 1));
    inv[k] = 1.0 / (2.0 * d);
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double s = 0.0;
      for (int k = 0; k < N; ++k) s += modes.b(i, k) * modes.b(j, k) * inv[k];
      K(i, j) = K(j, i) = eta * eta * s;
    }
  return K;
}

}  // namespace

Eigen::MatrixXd raw_couplings(const ModeStructure& modes, const DriveConfig& drive) {
  drive.validate();
  if (drive.Omega.size() != modes.N) throw InvalidArgument("one drive amplitude per ion required");
  return mode_kernel(modes, drive.eta, drive.mu).cwiseProduct(drive.Omega * drive.Omega.transpose());
}

CouplingMatrix jij_from_modes(const ModeStructure& modes, const DriveConfig& drive) {
  Eigen::MatrixXd J = raw_couplings(modes, drive);
  // pi phase on every other ion flips the sign of odd-distance pairs; the
  // overall minus maps the hardware sign onto the ferromagnetic convention
  for (int i = 0; i < J.rows(); ++i)
    for (int j = 0; j < J.cols(); ++j)
      if ((i + j) % 2 == 0) J(i, j) = -J(i, j);
  return CouplingMatrix(std::move(J));
}

bool is_sign_staggered(const Eigen::MatrixXd& raw, int center_count) {
  const int N = static_cast<int>(raw.rows());
  const int first = (N - center_count) / 2;
  for (int i = first; i + 2 < first + center_count; ++i) {
    const double a = raw(i, i + 1), b = raw(i, i + 2);
    if (!(a * b < 0.0)) return false;
  }
  return true;
}

Eigen::VectorXd flatten_amplitudes(const ModeStructure& modes, const DriveConfig& drive, int ell) {
  const int N = modes.N;
  if (ell < 2 || ell > N) throw InvalidArgument("center count must be in [2, N]");
  drive.validate();
  const Eigen::MatrixXd K = mode_kernel(modes, drive.eta, drive.mu);
  const int first = (N - ell) / 2;
  // a_i + a_{i+1} = c - ln|K_{i,i+1}|; minimum-norm solution with c free
  const int m = ell - 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, ell);
  Eigen::VectorXd y(m);
  for (int r = 0; r < m; ++r) {
    const double k = std::abs(K(first + r, first + r + 1));
    if (!(k > 0.0)) throw OptimizerStall("vanishing nearest-neighbour kernel");
    A(r, r) = 1.0;
    A(r, r + 1) = 1.0;
    y[r] = -std::log(k);
  }
  const Eigen::MatrixXd P =
      Eigen::MatrixXd::Identity(m, m) - Eigen::MatrixXd::Constant(m, m, 1.0 / m);
  const Eigen::VectorXd a =
      (P * A).completeOrthogonalDecomposition().solve(P * y);
  Eigen::VectorXd omega = Eigen::VectorXd::Zero(N);
  for (int i = 0; i < ell; ++i) omega[first + i] = std::exp(a[i]);
  omega *= drive.Omega.cwiseAbs().maxCoeff() / omega.maxCoeff();

  double lo = 1e300, hi = 0.0, mean = 0.0;
  for (int r = 0; r < m; ++r) {
    const double v = std::abs(K(first + r, first + r + 1)) * omega[first + r] * omega[first + r + 1];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v / m;
  }
  if ((hi - lo) / mean > 0.05) throw OptimizerStall("nearest-neighbour spread above 5% remains");
  return omega;
}

double nn_spread(const CouplingMatrix& c) {
  const int n = c.size();
  double lo = 1e300, hi = -1e300, mean = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    lo = std::min(lo, c(i, i + 1));
    hi = std::max(hi, c(i, i + 1));
    mean += c(i, i + 1) / (n - 1);
  }
  return (hi - lo) / std::abs(mean);
}

CouplingMatrix central_block(const CouplingMatrix& c, int ell) {
  if (ell < 1 || ell > c.size()) throw InvalidArgument("block size out of range");
  const int first = (c.size() - ell) / 2;
  return CouplingMatrix(c.values().block(first, first, ell, ell));
}

BetaFit fit_beta(const CouplingMatrix& c) {
  const int n = c.size();
  if (n < 4) throw InvalidArgument("fit_beta needs at least 4 sites");
  const int dmax = std::min(4, n - 1);
  BetaFit fit;
  for (int d = 1; d <= dmax; ++d) {
    double s = 0.0;
    for (int i = 0; i + d < n; ++i) {
      if (!(c(i, i + d) > 0.0))
        throw InvalidArgument("non-positive coupling at distance " + std::to_string(d));
      s += c(i, i + d);
    }
    fit.mean_by_distance.push_back(s / (n - d));
  }
  Eigen::MatrixXd A(dmax, 2);
  Eigen::VectorXd y(dmax);
  for (int d = 1; d <= dmax; ++d) {
    A(d - 1, 0) = d - 1;
    A(d - 1, 1) = 1.0;
    y[d - 1] = std::log(fit.mean_by_distance[d - 1]);
  }
  const Eigen::Vector2d p = A.colPivHouseholderQr().solve(y);
  fit.beta = -p[0];
  fit.J = fit.mean_by_distance[0];
  const Eigen::VectorXd r = y - A * p;
  fit.residuals.assign(r.data(), r.data() + r.size());
  fit.rms_residual = std::sqrt(r.squaredNorm() / dmax);
  fit.exponential = fit.rms_residual < 0.05;
  return fit;
}

CouplingMatrix normalize_couplings(const CouplingMatrix& c, double target_J) {
  double mean = 0.0;
  for (int i = 0; i + 1 < c.size(); ++i) mean += c(i, i + 1) / (c.size() - 1);
  if (!(mean > 0.0)) throw InvalidArgument("mean nearest-neighbour coupling must be positive");
  return CouplingMatrix(c.values() * (target_J / mean));
}

}  // namespace bubble::ion
