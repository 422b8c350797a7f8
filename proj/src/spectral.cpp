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


#include "bubble/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <numeric>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "bubble/krylov.hpp"
#include "bubble/parallel.hpp"

namespace bubble {

namespace {

struct Sector {
  const Hamiltonian& H;
  std::optional<ReflectionSymmetry> sym;

  Eigen::Index dim() const {
    return static_cast<Eigen::Index>(sym ? sym->dim() : H.dim());
  }
  void apply(const Eigen::VectorXd& in, Eigen::VectorXd& out) const {
    if (!sym) {
      H.apply(in, out);
      return;
    }
    Eigen::VectorXd full = sym->embed(in), hf;
    H.apply(full, hf);
    out = sym->restrict(hf);
  }
  Eigen::VectorXd to_full(const Eigen::VectorXd& v) const { return sym ? sym->embed(v) : v; }
};

struct RawEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // sector coordinates
};

RawEigen solve_diagonal(const Sector& s, int k) {
  const Eigen::VectorXd& d = s.H.diagonal();
  const Eigen::Index n = s.dim();
  Eigen::VectorXd dd(n);
  if (s.sym) {
    for (Eigen::Index c = 0; c < n; ++c) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[c] = 1.0;
      const Eigen::VectorXd f = s.sym->embed(e);
      dd[c] = f.cwiseAbs2().dot(d);
    }
  } else {
    dd = d;
  }
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return dd[a] < dd[b]; });
  RawEigen r{Eigen::VectorXd(k), Eigen::MatrixXd::Zero(n, k)};
  for (int j = 0; j < k; ++j) {
    r.values[j] = dd[idx[j]];
    r.vectors(idx[j], j) = 1.0;
  }
  return r;
}

RawEigen solve_dense(const Sector& s, int k) {
  if (s.H.ell() > kMaxDenseEll)
    throw InvalidArgument("dense diagonalization is limited to ell <= 10");
  Eigen::MatrixXd D = s.H.dense();
  if (s.sym) {
    const Eigen::MatrixXd B = s.sym->basis();
    D = (B.transpose() * D * B).eval();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
  return {es.eigenvalues().head(k), es.eigenvectors().leftCols(k)};
}

RawEigen solve_krylov(const Sector& s, const EigenOptions& o) {
  krylov::SymmetricOperator op{s.dim(),
                               [&s](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
                                 s.apply(in, out);
                               },
                               s.H.norm_bound()};
  krylov::EigenOptions ko;
  ko.k = o.k;
  ko.max_applications_per_pair = o.max_applications_per_pair;
  ko.seed = o.seed;
  auto sol = krylov::lowest_eigenpairs(op, ko);
  return {sol.values, sol.vectors};
}

}  // namespace

EigenResult lowest_eigenpairs(const Hamiltonian& H, const EigenOptions& o) {
  if (o.k < 1 || o.k > 32) throw InvalidArgument("k must be in [1, 32]");
  Sector s{H, std::nullopt};
  if (o.subspace == Subspace::ReflectionSymmetric) s.sym.emplace(H.ell());
  if (s.dim() < o.k) throw InvalidArgument("subspace dimension is smaller than k");

  RawEigen raw;
  switch (o.method) {
    case SolverMethod::Dense:
      raw = solve_dense(s, o.k);
      break;
    case SolverMethod::Krylov:
      raw = solve_krylov(s, o);
      break;
    case SolverMethod::Auto:
      if (H.g() == 0.0) {
        raw = solve_diagonal(s, o.k);
      } else if (s.dim() <= 64) {
        raw = solve_dense(s, o.k);
      } else {
        try {
          raw = solve_krylov(s, o);
        } catch (const NonConvergence&) {
          if (H.ell() > kMaxDenseEll) throw;
          raw = solve_dense(s, o.k);
        }
      }
      break;
  }

  EigenResult out;
  out.subspace = o.subspace;
  out.eigenvalues = raw.values;
  out.residuals.resize(o.k);
  for (int j = 0; j < o.k; ++j) {
    Eigen::VectorXd v = raw.vectors.col(j), hv;
    s.apply(v, hv);
    out.residuals[j] = (hv - raw.values[j] * v).norm();
    const Eigen::VectorXd full = s.to_full(v);
    out.order_parameters.push_back(order_parameter(H.ell(), full.cwiseAbs2()));
    if (o.want_vectors) out.eigenvectors.emplace_back(H.ell(), full.cast<cplx>());
  }
  return out;
}

EigenResult lowest_eigenpairs(const ChainSpec& spec, double g, double h, const EigenOptions& o) {
  return lowest_eigenpairs(hamiltonian(spec, g, h), o);
}

std::vector<ScanPoint> gap_scan(const ChainSpec& spec, double g, const std::vector<double>& h_grid,
                                const ScanOptions& options, Diagnostics* diagnostics) {
  if (h_grid.size() < 7) throw InvalidArgument("gap_scan needs at least 7 grid points");
  if (!std::is_sorted(h_grid.begin(), h_grid.end()))
    throw InvalidArgument("gap_scan grid must be sorted");
  if (options.eigen.k < 2) throw InvalidArgument("gap_scan needs k >= 2");
  const auto chain = std::make_shared<const IsingChain>(spec);

  auto solve = [&](double h, const EigenOptions& eo) {
    EigenOptions e = eo;
    e.want_vectors = false;
    const auto r = lowest_eigenpairs(Hamiltonian(chain, g, h), e);
    return ScanPoint{h, r.eigenvalues, r.order_parameters};
  };
  auto points = parallel_map(h_grid.size(), options.workers,
                             [&](std::size_t i) { return solve(h_grid[i], options.eigen); });

  auto suspicious = [&](std::size_t i) {
    // jump between points i and i+1 compared to the adjacent differences
    const double d = std::abs(points[i + 1].gap() - points[i].gap());
    double ref = 0.0;
    if (i > 0) ref = std::max(ref, std::abs(points[i].gap() - points[i - 1].gap()));
    if (i + 2 < points.size())
      ref = std::max(ref, std::abs(points[i + 2].gap() - points[i + 1].gap()));
    return d > 10.0 * ref + 1e-9;
  };
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (!suspicious(i)) continue;
    EigenOptions retry = options.eigen;
    retry.max_applications_per_pair *= 4;
    retry.seed += 1;
    points[i] = solve(points[i].h, retry);
    points[i + 1] = solve(points[i + 1].h, retry);
    if (suspicious(i) && diagnostics)
      diagnostics->warn("gap discontinuity between h=" + std::to_string(points[i].h) +
                        " and h=" + std::to_string(points[i + 1].h));
  }
  return points;
}

double GapFit::gap_at(double h) const {
  return Delta_c * std::sqrt(1.0 + (h - h_c) * (h - h_c) / (delta * delta));
}

namespace {

// Parameters (h_c, Delta_c, s) with s = Delta_c / delta, which stays regular
// when the gap closes.
struct GapFunctor : Eigen::DenseFunctor<double> {
  const Eigen::VectorXd& x;
  const Eigen::VectorXd& y;
  GapFunctor(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys)
      : DenseFunctor<double>(3, static_cast<int>(xs.size())), x(xs), y(ys) {}

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double u = x[i] - p[0];
      f[i] = std::sqrt(p[1] * p[1] + p[2] * p[2] * u * u) - y[i];
    }
    return 0;
  }
  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& J) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double u = x[i] - p[0];
      const double m = std::max(std::sqrt(p[1] * p[1] + p[2] * p[2] * u * u), 1e-300);
      J(i, 0) = -p[2] * p[2] * u / m;
      J(i, 1) = p[1] / m;
      J(i, 2) = p[2] * u * u / m;
    }
    return 0;
  }
};

}  // namespace

GapFit fit_gap(const std::vector<double>& h, const std::vector<double>& gap) {
  const std::size_t n = h.size();
  if (n != gap.size()) throw InvalidArgument("fit_gap: h and gap lengths differ");
  if (n < 5) throw InvalidArgument("fit_gap needs at least 5 points");
  const std::size_t imin =
      static_cast<std::size_t>(std::min_element(gap.begin(), gap.end()) - gap.begin());
  if (imin == 0 || imin + 1 == n)
    throw FitDegenerate("gap minimum lies on the boundary of the grid");
  const double gmin = gap[imin];

  std::vector<std::size_t> window;
  for (std::size_t i = 0; i < n; ++i)
    if (gap[i] <= 5.0 * gmin) window.push_back(i);
  if (window.size() < 5) {
    std::size_t lo = imin >= 2 ? imin - 2 : 0;
    lo = std::min(lo, n - 5);
    window.clear();
    for (std::size_t i = lo; i < lo + 5; ++i) window.push_back(i);
  }
  Eigen::VectorXd x(window.size()), y(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    x[i] = h[window[i]];
    y[i] = gap[window[i]];
  }

  // delta from the two flanking points
  double dsum = 0.0;
  int dcount = 0;
  for (std::size_t j : {imin - 1, imin + 1}) {
    const double r = gap[j] / gmin;
    if (r > 1.0) {
      dsum += std::abs(h[j] - h[imin]) / std::sqrt(r * r - 1.0);
      ++dcount;
    }
  }
  const double delta0 = dcount ? dsum / dcount : std::abs(h[imin + 1] - h[imin]);
  Eigen::VectorXd p(3);
  p << h[imin], gmin, gmin / delta0;
  if (!(p[2] > 0.0)) p[2] = 1.0;

  GapFunctor functor(x, y);
  Eigen::LevenbergMarquardt<GapFunctor> lm(functor);
  lm.setXtol(1e-15);
  lm.setFtol(1e-15);
  lm.setGtol(0.0);
  lm.setMaxfev(5000);
  lm.minimize(p);

  GapFit fit;
  fit.h_c = p[0];
  fit.Delta_c = std::abs(p[1]);
  const double s = std::abs(p[2]);
  if (!std::isfinite(fit.h_c) || !(fit.Delta_c > 0.0) || !(s > 0.0) || !std::isfinite(s))
    throw FitDegenerate("gap fit collapsed to a degenerate parameter set");
  fit.delta = fit.Delta_c / s;
  fit.M = s / 2.0;
  fit.window_points = static_cast<int>(window.size());
  Eigen::VectorXd f(window.size());
  functor(p, f);
  fit.residuals.assign(f.data(), f.data() + f.size());
  fit.rms_residual = std::sqrt(f.squaredNorm() / static_cast<double>(f.size()));
  return fit;
}

GapFit fit_gap(const std::vector<ScanPoint>& scan) {
  std::vector<double> h, d;
  for (const auto& p : scan) {
    h.push_back(p.h);
    d.push_back(p.gap());
  }
  return fit_gap(h, d);
}

TransitionResult locate_transition(const ChainSpec& spec, double g, double h_lo, double h_hi,
                                   const ScanOptions& options) {
  if (!(h_hi > h_lo)) throw InvalidArgument("locate_transition needs h_lo < h_hi");
  const auto chain = std::make_shared<const IsingChain>(spec);
  EigenOptions eo = options.eigen;
  eo.k = std::max(eo.k, 2);
  eo.want_vectors = false;
  auto gap_once = [&](double h) {
    const auto e = lowest_eigenpairs(Hamiltonian(chain, g, h), eo).eigenvalues;
    return e[1] - e[0];
  };
  std::uintmax_t iters = 100;
  const auto [h_star, g_min] =
      boost::math::tools::brent_find_minima(gap_once, h_lo, h_hi, 40, iters);

  // Half-width where the gap has grown to a few times its minimum.
  const double span = h_hi - h_lo;
  double w = 0.05 * span;
  for (int it = 0; it < 60; ++it) {
    const double r = std::max(gap_once(h_star + w), gap_once(h_star - w)) / g_min;
    if (r > 4.5 && w > 1e-6 * span) {
      w *= 0.5;
    } else if (r < 2.5 && w < 0.5 * span) {
      w *= 1.6;
    } else {
      break;
    }
  }
  std::vector<double> grid(17);
  for (int i = 0; i < 17; ++i) grid[i] = h_star - w + 2.0 * w * i / 16.0;
  TransitionResult out;
  ScanOptions so = options;
  so.eigen = eo;
  out.scan = gap_scan(spec, g, grid, so);
  out.fit = fit_gap(out.scan);
  return out;
}

ScalingFit fit_scaling(double g, const std::vector<int>& ells, const std::vector<double>& Delta_c) {
  const std::size_t n = ells.size();
  if (n < 2 || Delta_c.size() != n) throw InvalidArgument("fit_scaling needs >= 2 matching points");
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(Delta_c[i] > 0.0)) throw FitDegenerate("non-positive gap in scaling fit");
    A(i, 0) = ells[i];
    A(i, 1) = 1.0;
    y[i] = std::log(Delta_c[i]);
  }
  const Eigen::Vector2d c = A.colPivHouseholderQr().solve(y);
  ScalingFit fit;
  fit.slope = c[0];
  fit.prefactor = std::exp(c[1]);
  fit.g_star = g * std::exp(-c[0]);
  const Eigen::VectorXd r = y - A * c;
  fit.residuals.assign(r.data(), r.data() + r.size());
  return fit;
}

ScalingResult scaling_sweep(double beta, double g, const std::vector<int>& ells,
                            const ScanOptions& options, double J) {
  if (ells.empty() || !std::is_sorted(ells.begin(), ells.end()))
    throw InvalidArgument("scaling_sweep needs an ascending ell list");
  if (ells.back() > 14) throw InvalidArgument("scaling_sweep is capped at ell = 14");
  ScanOptions inner = options;
  inner.workers = 1;
  ScalingResult out;
  out.points = parallel_map(ells.size(), options.workers, [&](std::size_t i) {
    ChainSpec spec;
    spec.ell = ells[i];
    spec.beta = beta;
    spec.J = J;
    spec.boundary = Boundary::StaticDomainWalls;
    const double hc0 = classical_transition_field(spec);
    ScalingPoint p;
    p.ell = ells[i];
    p.classical_h_c = hc0;
    p.fit = locate_transition(spec, g, hc0 - 0.3 * J, hc0 + 0.3 * J, inner).fit;
    return p;
  });
  std::vector<double> dc;
  for (const auto& p : out.points) dc.push_back(p.fit.Delta_c);
  out.fit = fit_scaling(g, ells, dc);
  return out;
}

std::vector<SymmetricLevels> symmetric_spectrum_vs_h(const ChainSpec& spec, double g,
                                                     const std::vector<double>& h_grid, int k,
                                                     bool keep_states, int workers) {
  const auto chain = std::make_shared<const IsingChain>(spec);
  return parallel_map(h_grid.size(), workers, [&](std::size_t i) {
    EigenOptions eo;
    eo.k = k;
    eo.subspace = Subspace::ReflectionSymmetric;
    eo.want_vectors = keep_states;
    auto r = lowest_eigenpairs(Hamiltonian(chain, g, h_grid[i]), eo);
    return SymmetricLevels{h_grid[i], r.eigenvalues, r.order_parameters,
                           std::move(r.eigenvectors)};
  });
}

}  // namespace bubble
