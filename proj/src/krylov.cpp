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

#include "bubble/krylov.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "bubble/errors.hpp"

namespace bubble::krylov {

namespace {

double uniform_pm1(std::mt19937_64& rng) {
  return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
}

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform_pm1(rng);
  return v;
}

// Two passes of classical Gram-Schmidt against the first `cols` columns.
void orthogonalize(const Eigen::MatrixXd& basis, Eigen::Index cols, Eigen::VectorXd& q) {
  if (cols == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd c = basis.leftCols(cols).transpose() * q;
    q.noalias() -= basis.leftCols(cols) * c;
  }
}

}  // namespace

EigenSolution lowest_eigenpairs(const SymmetricOperator& op, const EigenOptions& options) {
  const Eigen::Index n = op.dim;
  const int k = options.k;
  if (k < 1 || k > n) throw InvalidArgument("requested eigenpair count out of range");

  const Eigen::Index cap =
      std::min<Eigen::Index>(n, options.max_basis > 0 ? options.max_basis
                                                      : std::max(3 * k + 60, 120));
  const Eigen::Index keep = std::min<Eigen::Index>(cap - 1, 2 * k + 10);
  const long budget = static_cast<long>(options.max_applications_per_pair) * k;
  const double target = options.tol * std::max(op.norm_bound, 1e-300);

  std::mt19937_64 rng(options.seed);
  Eigen::MatrixXd V(n, cap), W(n, cap);
  Eigen::Index cols = 0;
  Eigen::VectorXd candidate = random_vector(n, rng);
  Eigen::VectorXd w(n);
  EigenSolution result;
  bool exhausted = false;

  while (true) {
    // Expand until the cap, the space is exhausted, or a periodic check passes.
    Eigen::Index since_check = 0;
    while (cols < cap) {
      Eigen::VectorXd q = candidate;
      const double before = q.norm();
      orthogonalize(V, cols, q);
      double qn = q.norm();
      if (!(qn > 1e-10 * std::max(before, 1e-300))) {
        // Invariant subspace reached; continue with a fresh direction so that
        // degenerate partners are not missed.
        if (cols == n) {
          exhausted = true;
          break;
        }
        q = random_vector(n, rng);
        orthogonalize(V, cols, q);
        qn = q.norm();
        if (!(qn > 1e-12)) {
          exhausted = true;
          break;
        }
      }
      V.col(cols) = q / qn;
      op.apply(V.col(cols), w);
      W.col(cols) = w;
      ++result.applications;
      candidate = w;
      ++cols;
      if (cols >= k && ++since_check >= 12) break;
    }
    if (cols == n) exhausted = true;

    Eigen::MatrixXd T = V.leftCols(cols).transpose() * W.leftCols(cols);
    T = 0.5 * (T + T.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const Eigen::VectorXd& theta = es.eigenvalues();
    const Eigen::MatrixXd& S = es.eigenvectors();

    const int found = static_cast<int>(std::min<Eigen::Index>(k, cols));
    Eigen::VectorXd residuals(found);
    int first_unconverged = -1;
    Eigen::VectorXd first_residual;
    for (int j = 0; j < found; ++j) {
      Eigen::VectorXd r = W.leftCols(cols) * S.col(j) - theta[j] * (V.leftCols(cols) * S.col(j));
      residuals[j] = r.norm();
      if (residuals[j] > target && first_unconverged < 0) {
        first_unconverged = j;
        first_residual = std::move(r);
      }
    }

    if (found == k && (first_unconverged < 0 || exhausted)) {
      result.values = theta.head(k);
      result.vectors = V.leftCols(cols) * S.leftCols(k);
      result.residuals = residuals;
      return result;
    }
    if (result.applications >= budget) {
      std::vector<double> res(residuals.data(), residuals.data() + residuals.size());
      throw NonConvergence("Lanczos eigensolver exceeded its application budget", res);
    }
    if (cols < cap) {
      // Periodic check failed; keep expanding.
      continue;
    }
    // Thick restart: keep the lowest Ritz vectors, continue from a residual.
    const Eigen::Index p = std::min(keep, cols - 1);
    Eigen::MatrixXd Vk = V.leftCols(cols) * S.leftCols(p);
    Eigen::MatrixXd Wk = W.leftCols(cols) * S.leftCols(p);
    V.leftCols(p) = Vk;
    W.leftCols(p) = Wk;
    cols = p;
    candidate = first_unconverged >= 0 ? first_residual : random_vector(n, rng);
  }
}

ExpmResult expm_apply(const HermitianOperator& op, const Eigen::VectorXcd& v, double t,
                      double tol, int max_dim) {
  ExpmResult out;
  const double beta0 = v.norm();
  if (beta0 == 0.0 || t == 0.0) {
    out.vector = v;
    out.converged = true;
    return out;
  }
  const Eigen::Index n = op.dim;
  const int m_max = static_cast<int>(std::min<Eigen::Index>(n, max_dim));
  Eigen::MatrixXcd V(n, m_max);
  std::vector<double> alpha, beta;
  V.col(0) = v / beta0;
  Eigen::VectorXcd w(n);

  auto small_exp = [&](int m) {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    Eigen::VectorXcd phase(m);
    for (int i = 0; i < m; ++i)
      phase[i] = std::exp(std::complex<double>(0.0, -t * es.eigenvalues()[i])) *
                 es.eigenvectors()(0, i);
    return Eigen::VectorXcd(es.eigenvectors().cast<std::complex<double>>() * phase);
  };

  for (int j = 0; j < m_max; ++j) {
    op.apply(V.col(j), w);
    const double a = V.col(j).dot(w).real();
    alpha.push_back(a);
    w -= a * V.col(j);
    if (j > 0) w -= beta[j - 1] * V.col(j - 1);
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXcd c = V.leftCols(j + 1).adjoint() * w;
      w.noalias() -= V.leftCols(j + 1) * c;
    }
    const double b = w.norm();
    const int m = j + 1;
    const bool invariant = b < 1e-13 * std::max(op.norm_bound, 1.0);
    if (invariant || m >= 3 || m == m_max) {
      const Eigen::VectorXcd y = small_exp(m);
      const double err = invariant ? 0.0 : beta0 * b * std::abs(y[m - 1]);
      if (err < tol || invariant || m == m_max) {
        out.vector = beta0 * (V.leftCols(m) * y);
        out.error_estimate = err;
        out.krylov_dim = m;
        out.converged = err < tol || invariant;
        return out;
      }
    }
    beta.push_back(b);
    if (j + 1 < m_max) V.col(j + 1) = w / b;
  }
  out.vector = v;
  out.converged = false;
  out.error_estimate = std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace bubble::krylov
