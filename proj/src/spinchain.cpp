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

#include "bubble/spinchain.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace bubble {

std::string to_string(Boundary b) {
  return b == Boundary::Open ? "open" : "static-domain-walls";
}

Boundary boundary_from_string(const std::string& s) {
  if (s == "open") return Boundary::Open;
  if (s == "static-domain-walls") return Boundary::StaticDomainWalls;
  throw InvalidArgument("unknown boundary '" + s +
                        "' (expected open or static-domain-walls)");
}

CouplingMatrix::CouplingMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols())
    throw InvalidArgument("coupling matrix must be square");
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    if (values_(i, i) != 0.0)
      throw InvalidArgument("coupling matrix must have a zero diagonal");
    for (Eigen::Index j = 0; j < i; ++j)
      if (values_(i, j) != values_(j, i))
        throw InvalidArgument("coupling matrix must be symmetric");
  }
}

std::string CouplingMatrix::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "row,col,value[J]\n";
  for (Eigen::Index i = 0; i < values_.rows(); ++i)
    for (Eigen::Index j = 0; j < values_.cols(); ++j)
      out << i + 1 << ',' << j + 1 << ',' << values_(i, j) << '\n';
  return out.str();
}

void ChainSpec::validate() const {
  if (ell < 1) throw InvalidArgument("ell must be >= 1");
  if (ell > 24) throw InvalidArgument("ell must be <= 24");
  if (!(J > 0.0) || !std::isfinite(J)) throw InvalidArgument("J must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw InvalidArgument("beta must be positive");
  if (!std::isfinite(g) || !std::isfinite(h))
    throw InvalidArgument("fields must be finite");
  if (couplings && couplings->size() != ell)
    throw InvalidArgument("injected coupling matrix size does not match ell");
}

CouplingMatrix coupling_matrix(const ChainSpec& spec) {
  spec.validate();
  if (spec.couplings) return *spec.couplings;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(spec.ell, spec.ell);
  for (int i = 0; i < spec.ell; ++i)
    for (int j = i + 1; j < spec.ell; ++j) {
      const double v = spec.J * std::exp(-spec.beta * (j - i - 1));
      m(i, j) = v;
      m(j, i) = v;
    }
  return CouplingMatrix(std::move(m));
}

std::vector<double> boundary_field(const ChainSpec& spec, Diagnostics* diagnostics) {
  spec.validate();
  std::vector<double> dh(spec.ell, 0.0);
  if (spec.boundary == Boundary::Open) return dh;
  if (diagnostics && spec.beta <= std::numbers::ln2)
    diagnostics->warn("beta <= ln 2: boundary field is not guaranteed negative");
  const double e = std::exp(-spec.beta);
  const double prefactor = (1.0 - 2.0 * e) / (1.0 - e);
  for (int i = 1; i <= spec.ell; ++i)
    dh[i - 1] = -spec.J * prefactor *
                (std::exp(-spec.beta * (i - 1)) + std::exp(-spec.beta * (spec.ell - i)));
  return dh;
}

std::vector<double> boundary_field_truncated(const ChainSpec& spec, int cutoff) {
  spec.validate();
  std::vector<double> dh(spec.ell, 0.0);
  if (spec.boundary == Boundary::Open) return dh;
  // Left static spins sit at j = 0, -1, ..., the adjacent one pointing down and
  // the rest up; the right side mirrors it.
  auto coupling = [&](int i, int j) {
    return spec.J * std::exp(-spec.beta * (std::abs(j - i) - 1));
  };
  for (int i = 1; i <= spec.ell; ++i) {
    double acc = 0.0;
    for (int k = 0; k < cutoff; ++k) {
      const double sz = k == 0 ? -1.0 : 1.0;
      acc += coupling(i, -k) * sz;
      acc += coupling(i, spec.ell + 1 + k) * sz;
    }
    dh[i - 1] = acc;
  }
  return dh;
}

double classical_transition_field(const ChainSpec& spec) {
  const auto dh = boundary_field(spec);
  double sum = 0.0;
  for (double v : dh) sum += v;
  return -sum / spec.ell;
}

StateVector::StateVector(int ell)
    : ell_(ell), amp_(Eigen::VectorXcd::Zero(Eigen::Index{1} << ell)) {
  if (ell < 1) throw InvalidArgument("ell must be >= 1");
}

StateVector::StateVector(int ell, Eigen::VectorXcd amplitudes)
    : ell_(ell), amp_(std::move(amplitudes)) {
  if (ell < 1) throw InvalidArgument("ell must be >= 1");
  if (amp_.size() != (Eigen::Index{1} << ell))
    throw InvalidArgument("amplitude vector length must be 2^ell");
}

StateVector StateVector::basis_state(int ell, std::uint64_t index) {
  StateVector psi(ell);
  if (index >= psi.dim()) throw InvalidArgument("basis index out of range");
  psi.amp_[static_cast<Eigen::Index>(index)] = 1.0;
  return psi;
}

StateVector StateVector::all_plus_x(int ell) {
  StateVector psi(ell);
  psi.amp_.setConstant(cplx(std::pow(2.0, -0.5 * ell), 0.0));
  return psi;
}

void StateVector::normalize() {
  const double n = amp_.norm();
  if (n == 0.0) throw InvalidArgument("cannot normalize a zero state");
  amp_ /= n;
}

void StateVector::require_normalized(double tol) const {
  if (std::abs(norm() - 1.0) > tol)
    throw InvalidArgument("state is not normalized (norm deviation " +
                          std::to_string(std::abs(norm() - 1.0)) + ")");
}

IsingChain::IsingChain(ChainSpec spec)
    : spec_(std::move(spec)),
      couplings_(coupling_matrix(spec_)),
      boundary_(boundary_field(spec_)) {
  const auto n = static_cast<Eigen::Index>(dim());
  const int ell = spec_.ell;
  zz_.resize(n);
  mz_.resize(n);
  bz_.resize(n);
  const Eigen::MatrixXd& J = couplings_.values();
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto u = static_cast<std::uint64_t>(s);
    double zz = 0.0, m = 0.0, b = 0.0;
    for (int i = 0; i < ell; ++i) {
      const int zi = spin_z(u, i);
      m += zi;
      b -= boundary_[i] * zi;
      for (int j = i + 1; j < ell; ++j) zz -= J(i, j) * zi * spin_z(u, j);
    }
    zz_[s] = zz;
    mz_[s] = m;
    bz_[s] = b;
  }
}

Hamiltonian::Hamiltonian(std::shared_ptr<const IsingChain> chain, double g, double h)
    : chain_(std::move(chain)), g_(g), h_(h) {
  if (!std::isfinite(g) || !std::isfinite(h))
    throw InvalidArgument("fields must be finite");
  diag_ = chain_->interaction_energy() - h * chain_->total_z() + chain_->boundary_energy();
}

Eigen::MatrixXd Hamiltonian::dense() const {
  if (ell() > kMaxDenseEll)
    throw InvalidArgument("dense materialization is limited to ell <= 10");
  const auto n = static_cast<Eigen::Index>(dim());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index s = 0; s < n; ++s) {
    m(s, s) = diag_[s];
    for (int k = 0; k < ell(); ++k) m(s ^ (Eigen::Index{1} << k), s) -= g_;
  }
  return m;
}

double Hamiltonian::norm_bound() const {
  return diag_.cwiseAbs().maxCoeff() + std::abs(g_) * ell();
}

double Hamiltonian::expectation(const StateVector& psi) const {
  Eigen::VectorXcd hv;
  apply(psi.amplitudes(), hv);
  return psi.amplitudes().dot(hv).real();
}

Hamiltonian hamiltonian(const ChainSpec& spec, double g, double h) {
  return Hamiltonian(std::make_shared<const IsingChain>(spec), g, h);
}

Hamiltonian hamiltonian(const ChainSpec& spec) { return hamiltonian(spec, spec.g, spec.h); }

ReflectionSymmetry::ReflectionSymmetry(int ell) : ell_(ell) {
  if (ell < 1) throw InvalidArgument("ell must be >= 1");
  const std::uint64_t n = std::uint64_t{1} << ell;
  for (std::uint64_t s = 0; s < n; ++s) {
    const std::uint64_t r = reflect(s);
    if (s <= r)
      orbits_.emplace_back(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(r));
  }
}

std::uint64_t ReflectionSymmetry::reflect(std::uint64_t s) const {
  std::uint64_t r = 0;
  for (int i = 0; i < ell_; ++i)
    if ((s >> i) & 1u) r |= std::uint64_t{1} << (ell_ - 1 - i);
  return r;
}

Eigen::MatrixXd ReflectionSymmetry::basis() const {
  const auto n = static_cast<Eigen::Index>(full_dim());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(dim()));
  for (std::size_t c = 0; c < orbits_.size(); ++c) {
    const auto [a, r] = orbits_[c];
    if (a == r) {
      b(a, c) = 1.0;
    } else {
      b(a, c) = kInvSqrt2;
      b(r, c) = kInvSqrt2;
    }
  }
  return b;
}

std::vector<double> site_magnetizations(int ell, const Eigen::VectorXd& probabilities) {
  std::vector<double> m(ell, 0.0);
  for (Eigen::Index s = 0; s < probabilities.size(); ++s) {
    const double p = probabilities[s];
    if (p == 0.0) continue;
    for (int i = 0; i < ell; ++i) m[i] += p * spin_z(static_cast<std::uint64_t>(s), i);
  }
  return m;
}

std::vector<double> site_magnetizations(const StateVector& psi) {
  return site_magnetizations(psi.ell(), psi.probabilities());
}

double order_parameter(int ell, const Eigen::VectorXd& probabilities) {
  double total = 0.0;
  for (double m : site_magnetizations(ell, probabilities)) total += m;
  return total / ell;
}

double order_parameter(const StateVector& psi) {
  psi.require_normalized(1e-8);
  return order_parameter(psi.ell(), psi.probabilities());
}

}  // namespace bubble
