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
#include <unsupported/Eigen/KroneckerProduct>

#include "bubble/analysis.hpp"
#include "bubble/dynamics.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bubble;

namespace {

StateVector random_state(int ell, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  StateVector psi(ell);
  for (Eigen::Index s = 0; s < psi.amplitudes().size(); ++s)
    psi.amplitudes()[s] = cplx(n(rng), n(rng));
  psi.normalize();
  return psi;
}

ChainSpec chain(int ell, double beta = 1.21) {
  ChainSpec s;
  s.ell = ell;
  s.beta = beta;
  s.boundary = Boundary::StaticDomainWalls;
  return s;
}

StateVector ground_state(const ChainSpec& spec, double g, double h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hamiltonian(spec, g, h).dense());
  return StateVector(spec.ell, es.eigenvectors().col(0).cast<cplx>());
}

// Pauli operator on one site of an ell-site register, built by Kronecker products
// with site 1 as the least significant factor.
Eigen::MatrixXcd site_op(int ell, int site0, const Eigen::Matrix2cd& op) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
  for (int k = ell - 1; k >= 0; --k) {
    const Eigen::MatrixXcd f = k == site0 ? Eigen::MatrixXcd(op) : Eigen::MatrixXcd::Identity(2, 2);
    m = Eigen::kroneckerProduct(m, f).eval();
  }
  return m;
}

std::vector<KZTrajectory> synthetic_kz(double mu, double h_c, double a, double w,
                                       double time_unit = 1.0) {
  std::vector<KZTrajectory> out;
  for (int k = 0; k < 8; ++k) {
    const double tau = 0.3 * std::pow(20.0, k / 7.0);
    const double tc = tau * h_c / 2.0;
    const double t0 = tc + a * std::pow(tau, 1.0 - mu);
    KZTrajectory tr;
    tr.tau = tau * time_unit;
    for (int i = 0; i <= 4000; ++i) {
      const double t = tau * i / 4000.0;
      tr.times.push_back(t * time_unit);
      tr.sigma_z.push_back(std::tanh((t - t0) / w));
    }
    out.push_back(std::move(tr));
  }
  return out;
}

}  // namespace

TEST_CASE("sampling basics") {
  const auto up = sample_shots(StateVector::all_up(4), MeasurementBasis::Z, 100, 1);
  for (auto b : up.bitstrings) CHECK(b == 0b1111u);
  CHECK(up.repetitions() == 100);

  const auto px = sample_shots(StateVector::all_plus_x(4), MeasurementBasis::X, 50, 2);
  for (auto b : px.bitstrings) CHECK(b == 0b1111u);

  const auto a = sample_shots(random_state(5, 1), MeasurementBasis::Z, 500, 9);
  const auto b = sample_shots(random_state(5, 1), MeasurementBasis::Z, 500, 9);
  CHECK(a.bitstrings == b.bitstrings);

  StateVector bad = StateVector::all_up(3);
  bad.amplitudes() *= 1.1;
  CHECK_THROWS_AS(sample_shots(bad, MeasurementBasis::Z, 10, 0), InvalidArgument);
  CHECK_THROWS_AS(sample_shots(StateVector::all_up(3), MeasurementBasis::Z, 0, 0), InvalidArgument);
}

TEST_CASE("per-site means of the x-polarized state in the Z basis") {
  const int ell = 6;
  const auto shots = sample_shots(StateVector::all_plus_x(ell), MeasurementBasis::Z, 100000, 11);
  for (int i = 0; i < ell; ++i) {
    double ones = 0.0;
    for (auto b : shots.bitstrings) ones += (b >> i) & 1u;
    CHECK(std::abs(ones / 1e5 - 0.5) < 0.005);
  }
  const auto zx = sample_shots(StateVector::all_up(ell), MeasurementBasis::X, 100000, 12);
  double ones = 0.0;
  for (auto b : zx.bitstrings) ones += b & 1u;
  CHECK(std::abs(ones / 1e5 - 0.5) < 0.005);
}

TEST_CASE("empirical distribution converges to the Born probabilities") {
  const auto psi = random_state(5, 42);
  for (auto basis : {MeasurementBasis::Z, MeasurementBasis::X}) {
    const Eigen::VectorXd p = measurement_probabilities(psi, basis);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
    const auto shots = sample_shots(psi, basis, 100000, 7);
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(32);
    for (auto b : shots.bitstrings) freq[static_cast<Eigen::Index>(b)] += 1e-5;
    CHECK(0.5 * (freq - p).cwiseAbs().sum() < 0.02);
    // every outcome within 4 sigma of its binomial expectation (64 outcomes
    // checked, so 3 sigma would trip by chance)
    for (Eigen::Index s = 0; s < 32; ++s)
      CHECK(std::abs(freq[s] - p[s]) < 4.0 * std::sqrt(p[s] * (1 - p[s]) / 1e5) + 1e-4);
  }
}

TEST_CASE("shot file round trip") {
  const auto shots = sample_shots(random_state(13, 3), MeasurementBasis::X, 777, 123456789012345ULL);
  const std::string bytes = encode_shots(shots);
  const auto nl = bytes.find('\n');
  const auto header = nlohmann::json::parse(bytes.substr(0, nl));
  CHECK(header["ell"] == 13);
  CHECK(header["basis"] == "X");
  CHECK(header["count"] == 777);
  CHECK(header["seed"].get<std::uint64_t>() == 123456789012345ULL);
  CHECK(bytes.size() - nl - 1 == (777 * 13 + 7) / 8);

  const auto path = std::filesystem::temp_directory_path() / "bubble_test_shots.bin";
  write_shots(path, shots);
  const auto back = read_shots(path);
  CHECK(back.ell == 13);
  CHECK(back.basis == MeasurementBasis::X);
  CHECK(back.seed == shots.seed);
  CHECK(back.bitstrings == shots.bitstrings);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(decode_shots(bytes.substr(0, bytes.size() - 1)), InvalidArgument);
  CHECK_THROWS_AS(decode_shots("{\"ell\": 3}\n"), InvalidArgument);
  CHECK_THROWS_AS(decode_shots("no header"), InvalidArgument);
}

TEST_CASE("largest domain") {
  // sites 1..5 = down down up up down
  CHECK(largest_domain(0b01100, 5) == 2);
  CHECK(largest_domain(0, 5) == 0);
  CHECK(largest_domain(0b11111, 5) == 5);
  CHECK(largest_domain(0b11011, 5) == 2);

  ShotSet down{5, MeasurementBasis::Z, 0, std::vector<std::uint64_t>(20, 0)};
  const auto hd = largest_domain_histogram(down);
  CHECK(hd.probability[0] == 1.0);
  CHECK(hd.peak() == 0);

  ShotSet xs{5, MeasurementBasis::X, 0, {1}};
  CHECK_THROWS_AS(largest_domain_histogram(xs), BasisMismatch);

  const auto psi = random_state(7, 5);
  const auto exact = largest_domain_histogram(7, psi.probabilities());
  const auto sampled = largest_domain_histogram(sample_shots(psi, MeasurementBasis::Z, 100000, 5));
  double se = 0.0, ss = 0.0;
  for (int n = 0; n <= 7; ++n) {
    se += exact.probability[n];
    ss += sampled.probability[n];
    CHECK(std::abs(exact.probability[n] - sampled.probability[n]) < 0.01);
  }
  CHECK(std::abs(se - 1.0) < 1e-9);
  CHECK(std::abs(ss - 1.0) < 1e-9);
  CHECK(exact.to_csv().rfind("n[sites],probability[1]\n", 0) == 0);
}

TEST_CASE("connected correlations") {
  const auto c0 = connected_correlations(StateVector::all_down(6));
  CHECK(c0.cwiseAbs().maxCoeff() == 0.0);

  const auto psi = random_state(5, 8);
  const auto c = connected_correlations(psi);
  const auto m = site_magnetizations(psi);
  CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-15);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(c(i, i) - (1 - m[i] * m[i])) < 1e-12);

  // two sites with open ends: the paramagnet decorrelates as g grows
  ChainSpec two;
  two.ell = 2;
  double prev = 2.0;
  for (double g : {0.5, 2.0, 10.0, 100.0}) {
    const double c12 = connected_correlations(ground_state(two, g, 0.0))(0, 1);
    CHECK(c12 < prev);
    prev = c12;
  }
  CHECK(std::abs(prev) < 0.01);  // ~ J / 2g
}

TEST_CASE("nearest-neighbour correlations of the ramped metastable state peak at the edges") {
  auto spec = chain(13, 0.78);
  Schedule ramp;
  ramp.append(linear_stage(StageKind::GRampUp, 2.4 * 1.7 / 1.2, 0.0, 1.7, 0.3, 0.3));
  const auto rec = evolve_pure(spec, ramp, StateVector::all_down(13), {ramp.duration()});
  CHECK(rec.order_parameter.back() < -0.5);
  const auto C = connected_correlations(*rec.final_state);
  CHECK(C(0, 1) > C(5, 6));
  CHECK(C(11, 12) > C(6, 7));
  CHECK(C(0, 1) == doctest::Approx(C(11, 12)).epsilon(1e-6));
}

TEST_CASE("energy estimator") {
  const auto spec = chain(5);
  // all down, g = 0, h = 0: -sum J_ij + sum dh_i
  const auto Jm = coupling_matrix(spec).values();
  const auto dh = boundary_field(spec);
  double expected = 0.0;
  for (int i = 0; i < 5; ++i) {
    expected += dh[i];
    for (int j = i + 1; j < 5; ++j) expected -= Jm(i, j);
  }
  const auto down = StateVector::all_down(5);
  CHECK(std::abs(estimate_energy_exact(down, spec, 0.0, 0.0) - expected) < 1e-9);
  CHECK(std::abs(hamiltonian(spec, 0.0, 0.0).expectation(down) - expected) < 1e-9);

  const auto psi = random_state(5, 17);
  for (double g : {0.0, 0.7, 1.2}) {
    const double exact = hamiltonian(spec, g, 0.3).expectation(psi);
    CHECK(std::abs(estimate_energy_exact(psi, spec, g, 0.3) - exact) < 1e-9);
  }

  const auto gs = ground_state(spec, 1.2, 0.2);
  const double exact = hamiltonian(spec, 1.2, 0.2).expectation(gs);
  const auto z = sample_shots(gs, MeasurementBasis::Z, 100000, 1);
  const auto x = sample_shots(gs, MeasurementBasis::X, 100000, 2);
  BootstrapOptions opts;
  opts.workers = 4;
  const auto est = estimate_energy(z, x, spec, 1.2, 0.2, opts);
  CHECK(est.resamples == 1000);
  CHECK(est.standard_error > 0.0);
  CHECK(std::abs(est.mean - exact) < 3.0 * est.standard_error);

  opts.workers = 1;
  const auto serial = estimate_energy(z, x, spec, 1.2, 0.2, opts);
  CHECK(serial.standard_error == est.standard_error);

  CHECK_THROWS_AS(estimate_energy(x, z, spec, 1.2, 0.2), BasisMismatch);
  CHECK_THROWS_AS(estimate_energy(z, x, chain(6), 1.2, 0.2), BasisMismatch);
}

TEST_CASE("bootstrap error falls as one over root repetitions") {
  const auto spec = chain(5);
  const auto gs = ground_state(spec, 1.2, 0.2);
  std::vector<double> se;
  for (std::size_t n : {250u, 1000u, 4000u}) {
    const auto z = sample_shots(gs, MeasurementBasis::Z, n, 100 + n);
    const auto x = sample_shots(gs, MeasurementBasis::X, n, 200 + n);
    BootstrapOptions opts;
    opts.seed = n;
    opts.workers = 4;
    se.push_back(estimate_energy(z, x, spec, 1.2, 0.2, opts).standard_error);
  }
  CHECK(std::abs(se[0] / se[1] / 2.0 - 1.0) < 0.2);
  CHECK(std::abs(se[1] / se[2] / 2.0 - 1.0) < 0.2);
}

TEST_CASE("spin-flip error model") {
  const auto spec = chain(3);
  const double g = 0.8, h = 0.1;
  const auto psi = random_state(3, 4);
  const auto r0 = spin_flip_error_model(psi, 0.0, spec, g, h);
  CHECK(r0.corrected == doctest::Approx(r0.raw).epsilon(1e-14));

  // enumerate the six single-site flips with explicit Pauli matrices
  Eigen::Matrix2cd X, Z;
  X << 0, 1, 1, 0;
  Z << -1, 0, 0, 1;  // index 0 is down
  const Eigen::MatrixXcd H = hamiltonian(spec, g, h).dense().cast<cplx>();
  auto energy = [&](const Eigen::VectorXcd& v) { return v.dot(H * v).real(); };
  const double E = energy(psi.amplitudes());
  const double p = 0.02;
  double flipped = 0.0;
  for (int i = 0; i < 3; ++i)
    for (const auto* op : {&X, &Z}) flipped += energy(site_op(3, i, *op) * psi.amplitudes());
  const double oracle = (1 - 2 * p) * E + p * flipped / 3.0;
  const auto r = spin_flip_error_model(psi, p, spec, g, h);
  CHECK(std::abs(r.raw - E) < 1e-12);
  CHECK(std::abs(r.corrected - oracle) < 1e-12);

  const auto gs = ground_state(chain(5), 1.2, 0.2);
  double prev = -1e300;
  for (double q : {0.0, 0.02, 0.05, 0.1}) {
    const auto v = spin_flip_error_model(gs, q, chain(5), 1.2, 0.2);
    CHECK(v.corrected >= v.raw - 1e-12);
    CHECK(v.corrected >= prev - 1e-12);
    prev = v.corrected;
  }
  CHECK_THROWS_AS(spin_flip_error_model(gs, 0.6, chain(5), 1.2, 0.2), InvalidArgument);
}

TEST_CASE("zero crossing") {
  CHECK(first_zero_crossing({0, 1, 2, 3}, {-1, -0.5, 0.5, 1}) == doctest::Approx(1.5));
  CHECK(first_zero_crossing({0, 1, 2}, {-1, 0, 1}) == 1.0);
  CHECK(first_zero_crossing({0, 1, 2, 3}, {-1, 3, -1, 1}) == doctest::Approx(0.25));
  CHECK_THROWS_AS(first_zero_crossing({0, 1}, {-1, -0.1}), NoCrossing);
}

TEST_CASE("scaling collapse on synthetic trajectories") {
  const double h_c = 0.1;
  const auto trs = synthetic_kz(0.5, h_c, 0.3, 0.05);
  const auto fit = kz_collapse(trs, h_c);
  CHECK(std::abs(fit.mu - 0.5) < 1e-3);
  CHECK(fit.crossings.size() == 8);
  CHECK(fit.excluded_taus.empty());
  CHECK(fit.mu_ci_low <= fit.mu);
  CHECK(fit.mu_ci_high >= fit.mu);
  CHECK(fit.collapse_after < fit.collapse_before);
  for (const auto& c : fit.crossings) {
    CHECK(c.t0 > 0.0);
    CHECK(c.t0 < c.tau);
    CHECK(c.h0 == doctest::Approx(2.0 * c.t0 / c.tau));
  }

  // changing the time unit leaves the exponent alone
  const auto scaled = kz_collapse(synthetic_kz(0.5, h_c, 0.3, 0.05, 3.7), h_c);
  CHECK(std::abs(scaled.mu - fit.mu) < 1e-9);

  const auto j = nlohmann::json::parse(fit.to_json());
  CHECK(j["mu"].get<double>() == doctest::Approx(fit.mu));
  CHECK(j["source"] == "exact");
  CHECK(j["crossings"].size() == 8);
  CHECK(fit.crossings_csv().rfind("tau[1/J],t0[1/J],h0[J],tc[1/J]", 0) == 0);
  CHECK(kz_rescaled_csv(trs, fit).rfind("tau[1/J],x_rescaled[1],sigma_z[1]\n", 0) == 0);
}

TEST_CASE("trajectories without a sign change are excluded") {
  auto trs = synthetic_kz(0.5, 0.1, 0.3, 0.05);
  KZTrajectory flat{10.0, {0, 1, 2}, {-1, -1, -0.9}};
  trs.push_back(flat);
  const auto fit = kz_collapse(trs, 0.1);
  REQUIRE(fit.excluded_taus.size() == 1);
  CHECK(fit.excluded_taus[0] == 10.0);
  CHECK(std::abs(fit.mu - 0.5) < 1e-3);
  CHECK_THROWS_AS(kz_collapse({trs[0], flat}, 0.1), NoCrossing);
}
