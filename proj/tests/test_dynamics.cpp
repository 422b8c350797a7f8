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


#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>

#include "bubble/dynamics.hpp"
#include "doctest.h"

using namespace bubble;

namespace {

ChainSpec sdw(int ell, double beta) {
  ChainSpec s;
  s.ell = ell;
  s.beta = beta;
  s.boundary = Boundary::StaticDomainWalls;
  return s;
}

StateVector random_state(int ell, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Eigen::VectorXcd v(1 << ell);
  for (auto& x : v) x = cplx(d(rng), d(rng));
  StateVector psi(ell, v);
  psi.normalize();
  return psi;
}

Schedule one_stage(Stage s) {
  Schedule out;
  out.append(std::move(s));
  return out;
}

}  // namespace

TEST_CASE("schedule continuity and evaluation") {
  Schedule s;
  s.append(linear_stage(StageKind::GRampUp, 2.4, 0, 1.2, 0, 0));
  CHECK_THROWS_AS(s.append(linear_stage(StageKind::HRamp, 1.0, 1.0, 1.0, 0, 1)), InvalidArgument);
  s.append(linear_stage(StageKind::HRamp, 4.0, 1.2, 1.2, 0, 2));
  s.append(quench_stage(1.0, 0.3, -1.0));
  CHECK(s.duration() == doctest::Approx(7.4));
  CHECK(s.tau_h() == doctest::Approx(4.0));
  CHECK(s.g(1.2) == doctest::Approx(0.6));
  // linear h-ramp obeys h = 2 t / tau inside its stage
  for (double t : {0.0, 1.0, 2.5, 3.999}) CHECK(s.h(2.4 + t) == doctest::Approx(2.0 * t / 4.0));
  CHECK(s.h(6.4) == -1.0);  // boundary belongs to the quench
  CHECK(s.breakpoints().size() == 4);
  const auto cut = s.truncated(4.4);
  CHECK(cut.duration() == doctest::Approx(4.4));
  CHECK(cut.h(4.4) == doctest::Approx(1.0));
}

TEST_CASE("energy is conserved under a constant Hamiltonian") {
  auto spec = sdw(6, 1.21);
  const auto psi = random_state(6, 11);
  const auto rec = evolve_pure(spec, one_stage(hold_stage(10.0, 1.2, 0.3)), psi,
                               uniform_times(10.0, 21));
  for (double e : rec.energy) CHECK(std::abs(e - rec.energy.front()) < 1e-8);
  CHECK(rec.norm_drift < 1e-8);
  for (double n : rec.norm) CHECK(std::abs(n - 1.0) < 1e-10);
}

TEST_CASE("single-spin Rabi oscillation") {
  ChainSpec one;
  one.ell = 1;
  const auto times = uniform_times(10.0, 101);
  const auto rec =
      evolve_pure(one, one_stage(hold_stage(10.0, 1.0, 0.0)), StateVector::all_down(1), times);
  for (std::size_t k = 0; k < times.size(); ++k)
    CHECK(std::abs(rec.order_parameter[k] + std::cos(2.0 * times[k])) < 1e-6);
}

TEST_CASE("zero-time evolution returns the initial state exactly") {
  auto spec = sdw(4, 1.21);
  const auto psi = random_state(4, 5);
  const auto rec = evolve_pure(spec, one_stage(quench_stage(0.0, 1.0, 0.2)), psi, {0.0});
  CHECK(rec.final_state->amplitudes() == psi.amplitudes());
}

TEST_CASE("step underflow is reported") {
  IntegratorOptions o;
  o.local_tol = 1e-30;
  o.min_step = 1e-2;
  CHECK_THROWS_AS(evolve_pure(sdw(4, 1.21), one_stage(hold_stage(1.0, 1.2, 0.1)),
                              StateVector::all_down(4), {1.0}, o),
                  StepUnderflow);
}

TEST_CASE("reflection symmetry is conserved by the dynamics") {
  auto spec = sdw(6, 1.21);
  Schedule s;
  s.append(linear_stage(StageKind::GRampUp, 2.4, 0, 1.2, 0, 0));
  s.append(linear_stage(StageKind::HRamp, 3.0, 1.2, 1.2, 0, 2));
  const auto rec = evolve_pure(spec, s, StateVector::all_down(6), uniform_times(s.duration(), 41));
  for (const auto& m : rec.site_mz)
    for (int i = 0; i < 3; ++i) CHECK(std::abs(m[i] - m[5 - i]) < 1e-7);
}

TEST_CASE("single-spin dephasing matches the analytic decay") {
  ChainSpec one;
  one.ell = 1;
  const double gamma = 0.3;
  const auto rec = evolve_lindblad(one, one_stage(hold_stage(3.0, 0.0, 0.0)),
                                   NoiseModel::uniform(1, gamma, 0.0),
                                   StateVector::all_plus_x(1), {3.0});
  CHECK(std::abs((*rec.final_density)(0, 1).real() - 0.5 * std::exp(-2 * gamma * 3.0)) < 1e-6);
  CHECK(std::abs(rec.norm.back() - 1.0) < 1e-8);
}

TEST_CASE("closed-system master equation reproduces Schrodinger evolution") {
  auto spec = sdw(4, 1.21);
  Schedule s;
  s.append(linear_stage(StageKind::GRampUp, 1.5, 0, 1.2, 0, 0));
  s.append(linear_stage(StageKind::HRamp, 2.0, 1.2, 1.2, 0, 1));
  s.append(quench_stage(1.5, 0.8, 0.4));
  const auto times = uniform_times(s.duration(), 26);
  const auto psi = StateVector::all_down(4);
  const auto pure = evolve_pure(spec, s, psi, times);
  const auto mixed = evolve_lindblad(spec, s, NoiseModel::uniform(4, 0, 0), psi, times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK(std::abs(pure.order_parameter[k] - mixed.order_parameter[k]) < 1e-7);
    CHECK(std::abs(pure.energy[k] - mixed.energy[k]) < 1e-7);
    CHECK(std::abs(mixed.norm[k] - 1.0) < 1e-8);
  }
  const Eigen::MatrixXcd proj =
      pure.final_state->amplitudes() * pure.final_state->amplitudes().adjoint();
  CHECK((proj - *mixed.final_density).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("negative density matrices are rejected") {
  ChainSpec one;
  one.ell = 1;
  Eigen::MatrixXcd rho(2, 2);
  rho << 1.02, 0, 0, -0.02;
  CHECK_THROWS_AS(evolve_lindblad(one, one_stage(hold_stage(1.0, 0.5, 0.0)),
                                  NoiseModel::uniform(1, 0.01, 0.0), rho, {0.0}),
                  PositivityViolation);
  CHECK_THROWS_AS(NoiseModel::uniform(2, -0.1, 0).validate(2), InvalidArgument);
}

TEST_CASE("dephasing reduces the quench contrast") {
  auto spec = sdw(5, 1.21);
  const auto s = one_stage(quench_stage(20.0, 1.2, 0.31));
  const auto times = uniform_times(20.0, 201);
  const auto down = StateVector::all_down(5);
  const auto pure = evolve_pure(spec, s, down, times);
  const auto noisy = evolve_lindblad(spec, s, NoiseModel::uniform(5, 0.009, 0.010), down, times);
  const double pmax = *std::max_element(pure.order_parameter.begin(), pure.order_parameter.end());
  const double nmax =
      *std::max_element(noisy.order_parameter.begin(), noisy.order_parameter.end());
  CHECK(nmax < pmax);
  CHECK(noisy.min_eigenvalue > -1e-7);
}

TEST_CASE("quench near the transition oscillates with large amplitude") {
  auto spec = sdw(5, 1.21);
  const auto times = uniform_times(30.0, 301);
  const auto near = evolve_pure(spec, one_stage(quench_stage(30.0, 1.2, 0.26)),
                                StateVector::all_down(5), times);
  const auto far = evolve_pure(spec, one_stage(quench_stage(30.0, 1.2, 0.0)),
                               StateVector::all_down(5), times);
  const double a = *std::max_element(near.order_parameter.begin(), near.order_parameter.end());
  const double b = *std::max_element(far.order_parameter.begin(), far.order_parameter.end());
  // swing from -1 to well above zero, against a small wobble far from h_c
  CHECK(a > 0.3);
  CHECK(a > b + 0.5);
}

TEST_CASE("two-level quench formula") {
  TwoLevelModel m{1.0, 0.3, 0.05};
  std::vector<double> t;
  for (int i = 0; i <= 400; ++i) t.push_back(i * 0.5);
  const auto on = two_level_quench(m, 0.3, t);
  CHECK(*std::max_element(on.begin(), on.end()) == doctest::Approx(1.0).epsilon(1e-6));
  const double period = 2 * std::numbers::pi / 0.05;
  CHECK(two_level_quench(m, 0.3, {period / 2})[0] == doctest::Approx(1.0));
  const auto off = two_level_quench(m, 0.3 + 0.05, t);  // M |h - h_c| = Delta_c
  CHECK(*std::max_element(off.begin(), off.end()) == doctest::Approx(0.2).epsilon(1e-4));
  CHECK_THROWS_AS(two_level_quench(TwoLevelModel{1, 0, 0}, 0, t), InvalidArgument);
}

TEST_CASE("optimized ramp construction") {
  std::vector<double> knots;
  for (int i = 0; i <= 20; ++i) knots.push_back(i / 20.0);
  const auto flat = optimized_h_ramp([](double) { return 0.7; }, knots, 1.0);
  const auto st = flat.stage(5.0);
  for (double t : {0.3, 1.7, 4.2}) CHECK(st.h(t) == doctest::Approx(t / 5.0).epsilon(1e-12));
  CHECK(flat.linear_equivalent_ratio() == doctest::Approx(1.0));

  auto spec = sdw(4, 1.21);
  const auto fwd = optimized_h_ramp(spec, 1.2, 0.0, 1.0, 41);
  const auto bwd = optimized_h_ramp(spec, 1.2, 1.0, 0.0, 41);
  const auto sf = fwd.stage(10.0), sb = bwd.stage(10.0);
  for (int i = 0; i <= 100; ++i) {
    const double t = 0.1 * i;
    CHECK(std::abs(sf.h(t) - sb.h(10.0 - t)) < 1e-9);
  }
  // slowest where the gap is smallest
  const auto imin = std::min_element(fwd.gap_knots.begin(), fwd.gap_knots.end()) -
                    fwd.gap_knots.begin();
  CHECK(fwd.gap_knots[imin] == fwd.Delta_min);
  CHECK(fwd.linear_equivalent_ratio() > 1.0);
}

TEST_CASE("slow optimized ramp stays adiabatic on a small chain") {
  auto spec = sdw(3, 1.21);
  const double g = 1.2, tau = 200.0;
  const auto ramp = optimized_h_ramp(spec, g, 0.0, 1.0, 101);
  Schedule s;
  s.append(ramp.stage(tau));
  const auto gs0 = lowest_eigenpairs(spec, g, 0.0, {.k = 1});
  const auto times = uniform_times(tau, 41);
  const auto rec = evolve_pure(spec, s, gs0.eigenvectors[0], times, {.keep_probabilities = false});
  double worst = 1.0;
  // re-run piecewise to compare the state with instantaneous ground states
  StateVector psi = gs0.eigenvectors[0];
  for (std::size_t k = 1; k < times.size(); ++k) {
    const auto part = evolve_pure(spec, s.truncated(times[k]), gs0.eigenvectors[0], {times[k]});
    const auto gs = lowest_eigenpairs(spec, g, s.h(times[k]), {.k = 1});
    worst = std::min(worst, std::norm(gs.eigenvectors[0].amplitudes().dot(
                                part.final_state->amplitudes())));
  }
  CHECK(worst > 0.99);
  CHECK(rec.norm_drift < 1e-8);
}

TEST_CASE("sudden and slow limits of the Landau-Zener probe") {
  auto spec = sdw(5, 1.21);
  LZOptions bare;
  bare.three_stage = false;
  const auto sudden = landau_zener_probe(spec, 1.2, 1.0, {0.0}, bare);
  CHECK(sudden[0].p_down == doctest::Approx(1.0));
  CHECK(sudden[0].p_up < 1e-12);

  LZOptions full;
  const auto pts = landau_zener_probe(spec, 1.2, 1.0, {0.5, 8.0}, full);
  CHECK(pts[0].p_up < 0.1);
  CHECK(pts[1].p_up > pts[1].p_down);
}

TEST_CASE("quench scan") {
  auto spec = sdw(5, 1.21);
  std::vector<double> hs;
  for (int i = 0; i <= 10; ++i) hs.push_back(0.05 * i);
  const auto flat = quench_scan(spec, 0.0, hs, 5.0, 51);
  for (const auto& p : flat.points) CHECK(p.max_order_parameter == doctest::Approx(-1.0));

  ChainSpec three = sdw(3, 1.21);
  std::vector<double> grid;
  for (int i = 0; i <= 24; ++i) grid.push_back(0.05 * i);
  const auto scan = quench_scan(three, 1.2, grid, 60.0, 601);
  const auto fit = locate_transition(three, 1.2, 0.0, 1.2).fit;
  CHECK(std::abs(scan.h_peak - fit.h_c) <= 0.05 + 1e-12);
}

TEST_CASE("quench at the fitted crossing oscillates at the fitted gap") {
  auto spec = sdw(5, 1.21);
  const auto fit = locate_transition(spec, 1.2, 0.0, 0.6).fit;
  const double T = 8 * 2 * std::numbers::pi / fit.Delta_c;
  const auto times = uniform_times(T, 1601);
  const auto rec = evolve_pure(spec, one_stage(quench_stage(T, 1.2, fit.h_c)),
                               StateVector::all_down(5), times);
  double mean = 0.0;
  for (double m : rec.order_parameter) mean += m / times.size();
  double best_w = 0.0, best_p = -1.0;
  for (int i = 0; i <= 2000; ++i) {
    const double w = fit.Delta_c * (0.5 + i / 2000.0);
    cplx acc = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k)
      acc += (rec.order_parameter[k] - mean) * std::exp(cplx(0, w * times[k]));
    if (std::abs(acc) > best_p) {
      best_p = std::abs(acc);
      best_w = w;
    }
  }
  MESSAGE("dominant frequency " << best_w << " vs fitted gap " << fit.Delta_c);
  CHECK(std::abs(best_w - fit.Delta_c) < 0.05 * fit.Delta_c);
}
