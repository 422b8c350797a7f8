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

// Krylov-space machinery shared by the eigensolver and the propagators.

#ifndef BUBBLE_KRYLOV_HPP
#define BUBBLE_KRYLOV_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace bubble::krylov {

/// Real symmetric operator given only through its action.
struct SymmetricOperator {
  Eigen::Index dim = 0;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> apply;
  double norm_bound = 1.0;
};

/// Hermitian operator acting on complex vectors.
struct HermitianOperator {
  Eigen::Index dim = 0;
  std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)> apply;
  double norm_bound = 1.0;
};

struct EigenOptions {
  int k = 1;
  // Residual target relative to the operator norm bound.
  double tol = 1e-10;
  int max_applications_per_pair = 5000;
  std::uint64_t seed = 0x5eedULL;
  // Largest basis kept between restarts; 0 picks a size from k.
  int max_basis = 0;
};

struct EigenSolution {
  Eigen::VectorXd values;     // ascending
  Eigen::MatrixXd vectors;    // columns match values
  Eigen::VectorXd residuals;  // ||A x - lambda x||
  int applications = 0;
};

/// k lowest eigenpairs by thick-restart Lanczos with full reorthogonalization
/// (Rayleigh-Ritz on the explicitly orthogonalized basis). Deterministic for a
/// fixed seed. Throws NonConvergence with the residuals when the application
/// budget runs out.
EigenSolution lowest_eigenpairs(const SymmetricOperator& op, const EigenOptions& options);

struct ExpmResult {
  Eigen::VectorXcd vector;
  double error_estimate = 0.0;
  int krylov_dim = 0;
  bool converged = false;
};

/// exp(-i t A) v by Lanczos projection. `converged` is false when the a
/// posteriori error estimate is still above `tol` at `max_dim`.
ExpmResult expm_apply(const HermitianOperator& op, const Eigen::VectorXcd& v, double t,
                      double tol = 1e-12, int max_dim = 64);

}  // namespace bubble::krylov

#endif  // BUBBLE_KRYLOV_HPP
