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

#ifndef BUBBLE_SPINCHAIN_HPP
#define BUBBLE_SPINCHAIN_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bubble/errors.hpp"

namespace bubble {

using cplx = std::complex<double>;

// Basis convention used everywhere: site i (1-based) is bit (i-1) of the
// basis index, and a set bit is |up> with sigma^z |up> = +|up>.
inline int spin_z(std::uint64_t state, int site0) {
  return ((state >> site0) & 1u) ? 1 : -1;
}

enum class Boundary { Open, StaticDomainWalls };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

/// Symmetric l x l coupling table with zero diagonal (energy units).
class CouplingMatrix {
 public:
  CouplingMatrix() = default;
  explicit CouplingMatrix(Eigen::MatrixXd values);

  int size() const { return static_cast<int>(values_.rows()); }
  double operator()(int i, int j) const { return values_(i, j); }
  const Eigen::MatrixXd& values() const { return values_; }

  /// Long format "row,col,value" with 1-based site indices.
  std::string to_csv() const;

 private:
  Eigen::MatrixXd values_;
};

struct ChainSpec {
  int ell = 1;
  double beta = 1.0;
  double J = 1.0;
  Boundary boundary = Boundary::Open;
  double g = 0.0;
  double h = 0.0;
  // Overrides the ideal exponential couplings (e.g. an ion-derived matrix).
  std::optional<CouplingMatrix> couplings;

  void validate() const;
};

/// J_{i,j} = J exp(-beta (|j-i| - 1)), or the injected matrix when present.
CouplingMatrix coupling_matrix(const ChainSpec& spec);

/// Longitudinal field induced by the pinned boundary spins; zero for an open
/// chain. A warning is emitted when beta <= ln 2, where the field is no longer
/// guaranteed negative.
std::vector<double> boundary_field(const ChainSpec& spec,
                                   Diagnostics* diagnostics = nullptr);

/// Direct summation over `cutoff` static spins on each side. Debug path used
/// to cross-check the closed form.
std::vector<double> boundary_field_truncated(const ChainSpec& spec,
                                             int cutoff = 60);

/// Transition field of the classical (g = 0) chain: -(sum_i dh_i) / l.
double classical_transition_field(const ChainSpec& spec);

class StateVector {
 public:
  explicit StateVector(int ell);
  StateVector(int ell, Eigen::VectorXcd amplitudes);

  static StateVector basis_state(int ell, std::uint64_t index);
  static StateVector all_down(int ell) { return basis_state(ell, 0); }
  static StateVector all_up(int ell) {
    return basis_state(ell, (std::uint64_t{1} << ell) - 1);
  }
  /// Product state with every spin along +x.
  static StateVector all_plus_x(int ell);

  int ell() const { return ell_; }
  std::size_t dim() const { return static_cast<std::size_t>(amp_.size()); }
  const Eigen::VectorXcd& amplitudes() const { return amp_; }
  Eigen::VectorXcd& amplitudes() { return amp_; }

  double norm() const { return amp_.norm(); }
  void normalize();
  Eigen::VectorXd probabilities() const { return amp_.cwiseAbs2(); }

  /// Throws InvalidArgument when |norm - 1| > tol.
  void require_normalized(double tol = 1e-8) const;

 private:
  int ell_;
  Eigen::VectorXcd amp_;
};

/// Per-basis-state tables shared by every Hamiltonian built on one chain.
class IsingChain {
 public:
  explicit IsingChain(ChainSpec spec);

  const ChainSpec& spec() const { return spec_; }
  int ell() const { return spec_.ell; }
  std::size_t dim() const { return std::size_t{1} << spec_.ell; }
  const CouplingMatrix& couplings() const { return couplings_; }
  const std::vector<double>& boundary() const { return boundary_; }

  // -sum_{i<j} J_ij z_i z_j
  const Eigen::VectorXd& interaction_energy() const { return zz_; }
  // sum_i z_i
  const Eigen::VectorXd& total_z() const { return mz_; }
  // -sum_i dh_i z_i
  const Eigen::VectorXd& boundary_energy() const { return bz_; }

 private:
  ChainSpec spec_;
  CouplingMatrix couplings_;
  std::vector<double> boundary_;
  Eigen::VectorXd zz_;
  Eigen::VectorXd mz_;
  Eigen::VectorXd bz_;
};

/// H = -sum J_ij z_i z_j - sum (h + dh_i) z_i - g sum x_i, applied matrix-free:
/// the diagonal is tabulated and the transverse part flips single bits.
/// Application is const and reentrant.
class Hamiltonian {
 public:
  Hamiltonian(std::shared_ptr<const IsingChain> chain, double g, double h);

  int ell() const { return chain_->ell(); }
  std::size_t dim() const { return chain_->dim(); }
  double g() const { return g_; }
  double h() const { return h_; }
  const IsingChain& chain() const { return *chain_; }
  const Eigen::VectorXd& diagonal() const { return diag_; }

  template <typename Vec>
  void apply(const Vec& in, Vec& out) const {
    const auto n = static_cast<Eigen::Index>(dim());
    const int ell = this->ell();
    out.resize(n);
    for (Eigen::Index s = 0; s < n; ++s) {
      typename Vec::Scalar acc = diag_[s] * in[s];
      typename Vec::Scalar flip(0);
      for (int k = 0; k < ell; ++k) flip += in[s ^ (Eigen::Index{1} << k)];
      out[s] = acc - g_ * flip;
    }
  }

  Eigen::VectorXcd operator*(const Eigen::VectorXcd& v) const {
    Eigen::VectorXcd out;
    apply(v, out);
    return out;
  }

  /// Dense matrix; only for l <= 10.
  Eigen::MatrixXd dense() const;

  /// Gershgorin bound on the spectral radius.
  double norm_bound() const;

  double expectation(const StateVector& psi) const;

 private:
  std::shared_ptr<const IsingChain> chain_;
  double g_;
  double h_;
  Eigen::VectorXd diag_;
};

/// Convenience: builds the chain tables and the operator in one go.
Hamiltonian hamiltonian(const ChainSpec& spec, double g, double h);
Hamiltonian hamiltonian(const ChainSpec& spec);

inline constexpr int kMaxDenseEll = 10;

/// Site reversal i <-> l+1-i and the projector (1+R)/2 onto its +1 sector.
class ReflectionSymmetry {
 public:
  explicit ReflectionSymmetry(int ell);

  int ell() const { return ell_; }
  std::size_t full_dim() const { return std::size_t{1} << ell_; }
  /// Dimension of the symmetric sector, (2^l + 2^ceil(l/2)) / 2.
  std::size_t dim() const { return orbits_.size(); }

  std::uint64_t reflect(std::uint64_t s) const;

  template <typename Vec>
  Vec apply_reflection(const Vec& v) const {
    Vec out(v.size());
    for (Eigen::Index s = 0; s < v.size(); ++s)
      out[static_cast<Eigen::Index>(reflect(static_cast<std::uint64_t>(s)))] = v[s];
    return out;
  }

  template <typename Vec>
  Vec project(const Vec& v) const {
    return (v + apply_reflection(v)) * 0.5;
  }

  /// Coordinates of a full-space vector in the orthonormal symmetric basis.
  template <typename Vec>
  Vec restrict(const Vec& full) const {
    Vec out(static_cast<Eigen::Index>(dim()));
    for (std::size_t c = 0; c < orbits_.size(); ++c) {
      const auto [a, b] = orbits_[c];
      out[c] = a == b ? full[a] : (full[a] + full[b]) * kInvSqrt2;
    }
    return out;
  }

  template <typename Vec>
  Vec embed(const Vec& reduced) const {
    Vec out = Vec::Zero(static_cast<Eigen::Index>(full_dim()));
    for (std::size_t c = 0; c < orbits_.size(); ++c) {
      const auto [a, b] = orbits_[c];
      if (a == b) {
        out[a] = reduced[c];
      } else {
        out[a] = reduced[c] * kInvSqrt2;
        out[b] = reduced[c] * kInvSqrt2;
      }
    }
    return out;
  }

  /// Orthonormal basis of the symmetric sector as columns (small l only).
  Eigen::MatrixXd basis() const;

 private:
  static constexpr double kInvSqrt2 = 0.70710678118654752440;
  int ell_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> orbits_;
};

/// Per-site <sigma^z_i>, i = 1..l.
std::vector<double> site_magnetizations(const StateVector& psi);
std::vector<double> site_magnetizations(int ell, const Eigen::VectorXd& probabilities);

/// (1/l) sum_i <sigma^z_i>; rejects states whose norm is off by more than 1e-8.
double order_parameter(const StateVector& psi);
double order_parameter(int ell, const Eigen::VectorXd& probabilities);

}  // namespace bubble

#endif  // BUBBLE_SPINCHAIN_HPP
