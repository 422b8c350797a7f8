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


#include <cmath>
#include <random>

#include "bubble/ionmodel.hpp"
#include "doctest.h"

using namespace bubble;
using namespace bubble::ion;

namespace {

struct Calibrated {
  ModeStructure modes;
  AxialPotential potential;
};

const Calibrated& fifteen() {
  static const Calibrated c = [] {
    Calibrated out;
    out.potential = even_spacing_potential(15, 13);
    out.modes = chain_modes(15, out.potential);
    return out;
  }();
  return c;
}

CouplingMatrix flattened(double mu_khz, int ell = 13) {
  const auto& m = fifteen().modes;
  auto drive = DriveConfig::uniform(15, -kTwoPi * mu_khz * 1e3);
  drive.Omega = flatten_amplitudes(m, drive, ell);
  return central_block(jij_from_modes(m, drive), ell);
}

}  // namespace

TEST_CASE("two-ion modes") {
  const auto m = chain_modes(2, AxialPotential::harmonic());
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(m.b(0, 0) - s) < 1e-15);
  CHECK(std::abs(m.b(1, 0) - s) < 1e-15);
  CHECK(std::abs(m.b(0, 1) - s) < 1e-15);
  CHECK(std::abs(m.b(1, 1) + s) < 1e-15);
  CHECK(m.omega[0] > m.omega[1]);
}

TEST_CASE("mode structure invariants") {
  for (int N : {3, 7, 15}) {
    const auto m = chain_modes(N, AxialPotential::harmonic());
    CHECK((m.b.transpose() * m.b - Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff() < 1e-10);
    for (int i = 0; i < N; ++i) CHECK(m.b(i, 0) > 0);  // COM
    for (int i = 0; i + 1 < N; ++i) CHECK(m.b(i, N - 1) * m.b(i + 1, N - 1) < 0);  // zig-zag
    for (int k = 0; k + 1 < N; ++k) CHECK(m.omega[k] >= m.omega[k + 1]);
  }
  const auto& c = fifteen();
  CHECK(std::abs(c.modes.omega[0] / kOmega0 - 1) < 0.005);
  CHECK(std::abs(c.modes.omega[14] / kOmegaN - 1) < 0.005);
  CHECK(spacing_deviation(c.modes.positions, 13) < 0.02);
  CHECK_THROWS_AS(chain_modes(1, AxialPotential::harmonic()), InvalidArgument);
}

TEST_CASE("nearest-neighbour sign flips across a mode") {
  const auto m = chain_modes(2, AxialPotential::harmonic());
  const double zig = m.omega[1] - kOmegaN;  // ~0
  auto below = DriveConfig::uniform(2, zig - kTwoPi * 20e3, kTwoPi * 10e3);
  auto above = DriveConfig::uniform(2, zig + kTwoPi * 20e3, kTwoPi * 10e3);
  // both modes far apart compared to 20 kHz: the nearby mode dominates
  CHECK(raw_couplings(m, below)(0, 1) * raw_couplings(m, above)(0, 1) < 0);
  auto resonant = DriveConfig::uniform(2, zig + kTwoPi * 0.5e3, kTwoPi * 1.0);
  CHECK_THROWS_AS(raw_couplings(m, resonant), ResonanceError);
  CHECK_THROWS_AS(raw_couplings(m, DriveConfig::uniform(2, -kTwoPi * 10e3)), InvalidArgument);
}

TEST_CASE("raw couplings are staggered and the correction makes them positive") {
  const auto& m = fifteen().modes;
  for (double khz : {35.0, 100.0}) {
    const auto drive = DriveConfig::uniform(15, -kTwoPi * khz * 1e3);
    const auto raw = raw_couplings(m, drive);
    CHECK(is_sign_staggered(raw, 13));
    CHECK((raw - raw.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const auto J = central_block(jij_from_modes(m, drive), 13);
    for (int i = 0; i < 13; ++i)
      for (int d = 1; d <= 4 && i + d < 13; ++d) CHECK(J(i, i + d) > 0);
  }
  CHECK_FALSE(is_sign_staggered(Eigen::MatrixXd::Ones(5, 5), 5));
}

TEST_CASE("amplitude flattening") {
  // a single uniform mode: every pair sees the same kernel
  ModeStructure toy;
  toy.N = 6;
  toy.omega = Eigen::VectorXd::Constant(6, kOmega0);
  toy.b = Eigen::MatrixXd::Identity(6, 6);
  toy.b.col(0).setConstant(1.0 / std::sqrt(6.0));
  toy.omega[5] = kOmegaN;
  toy.b.col(5).setZero();
  for (int i = 0; i < 6; ++i) toy.b(i, 5) = (i % 2 ? -1.0 : 1.0) / std::sqrt(6.0);
  // only the two uniform-magnitude modes couple neighbours equally when the
  // remaining columns are unit vectors
  const auto drive = DriveConfig::uniform(6, -kTwoPi * 100e3);
  const auto om = flatten_amplitudes(toy, drive, 6);
  for (int i = 0; i < 6; ++i) CHECK(om[i] == doctest::Approx(om[0]).epsilon(1e-12));

  const auto& m = fifteen().modes;
  auto d100 = DriveConfig::uniform(15, -kTwoPi * 100e3);
  d100.Omega = flatten_amplitudes(m, d100, 13);
  CHECK(d100.Omega[0] == 0.0);
  CHECK(d100.Omega[14] == 0.0);
  const auto J = central_block(jij_from_modes(m, d100), 13);
  CHECK(nn_spread(J) < 0.01);
  // larger amplitudes where the zig-zag participation is weaker
  CHECK(d100.Omega[1] > d100.Omega[7]);
  CHECK(std::abs(m.b(7, 14)) > std::abs(m.b(1, 14)));
}

TEST_CASE("beta extraction") {
  ChainSpec s;
  s.ell = 9;
  s.beta = 0.78;
  s.J = 2.5;
  const auto fit = fit_beta(coupling_matrix(s));
  CHECK(std::abs(fit.beta - 0.78) < 1e-9);
  CHECK(std::abs(fit.J - 2.5) < 1e-9);
  CHECK(fit.exponential);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(9, 9);
  for (int i = 0; i < 9; ++i)
    for (int j = i + 1; j < 9; ++j) r(i, j) = r(j, i) = u(rng);
  // an unstructured matrix must not pass as exponential
  const auto bad = fit_beta(CouplingMatrix(r));
  CHECK_FALSE(bad.exponential);

  Eigen::MatrixXd neg = coupling_matrix(s).values();
  neg(2, 3) = neg(3, 2) = -0.1;
  CHECK_THROWS_AS(fit_beta(CouplingMatrix(neg)), InvalidArgument);
}

TEST_CASE("fitted decay constants of the calibrated chain") {
  const auto b35 = fit_beta(flattened(35.0));
  const auto b100 = fit_beta(flattened(100.0));
  MESSAGE("beta(35 kHz) = " << b35.beta << ", beta(100 kHz) = " << b100.beta);
  CHECK(b35.beta < b100.beta);
  CHECK(std::abs(b100.beta / 1.21 - 1) < 0.25);
  CHECK(std::abs(b35.beta / 0.78 - 1) < 0.25);
  const auto norm = normalize_couplings(flattened(100.0));
  double mean = 0.0;
  for (int i = 0; i < 12; ++i) mean += norm(i, i + 1) / 12;
  CHECK(mean == doctest::Approx(1.0));
}

TEST_CASE("couplings far below the band fall off as the inverse square detuning") {
  // the 1/mu term cancels off the diagonal by orthonormality of the modes
  const auto& m = fifteen().modes;
  const auto J1 = raw_couplings(m, DriveConfig::uniform(15, -kTwoPi * 5e6));
  const auto J2 = raw_couplings(m, DriveConfig::uniform(15, -kTwoPi * 10e6));
  for (int i = 2; i < 12; ++i) {
    const double ratio = J1(i, i + 1) / J2(i, i + 1);
    CHECK(std::abs(ratio / 4.0 - 1.0) < 0.1);
    CHECK(std::abs(J2(i, i + 1)) < std::abs(J1(i, i + 1)));
  }
}
