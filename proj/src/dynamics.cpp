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


#include "bubble/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "bubble/io.hpp"
#include "bubble/krylov.hpp"
#include "bubble/parallel.hpp"

namespace bubble {

NoiseModel NoiseModel::uniform(int ell, double gamma_i, double gamma_c) {
  return NoiseModel{std::vector<double>(ell, gamma_i), gamma_c};
}

void NoiseModel::validate(int ell) const {
  if (static_cast<int>(gamma_i.size()) != ell)
    throw InvalidArgument("noise model needs one gamma_i per site");
  for (double g : gamma_i)
    if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidArgument("dephasing rates must be >= 0");
  if (!(gamma_c >= 0.0) || !std::isfinite(gamma_c))
    throw InvalidArgument("dephasing rates must be >= 0");
}

std::string TrajectoryRecord::site_csv() const {
  Csv csv({"t[1/J]", "site", "sigma_z[1]"});
  for (std::size_t k = 0; k < times.size(); ++k)
    for (int i = 0; i < ell; ++i) csv.row({times[k], double(i + 1), site_mz[k][i]});
  return csv.str();
}

std::string TrajectoryRecord::summary_csv() const {
  Csv csv({"t[1/J]", "g[J]", "h[J]", "order_parameter[1]", "energy[J]"});
  for (std::size_t k = 0; k < times.size(); ++k)
    csv.row({times[k], g[k], h[k], order_parameter[k], energy[k]});
  return csv.str();
}

namespace {

constexpr cplx kI{0.0, 1.0};

void check_samples(const std::vector<double>& samples, double duration) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i] >= 0.0) || samples[i] > duration * (1 + 1e-12) + 1e-15)
      throw InvalidArgument("sample time outside the schedule");
    if (i > 0 && samples[i] < samples[i - 1])
      throw InvalidArgument("sample times must be ascending");
  }
}

// sum_k v[s ^ 2^k]
template <typename Vec>
void apply_flips(int ell, const Vec& v, Vec& out) {
  const Eigen::Index n = v.size();
  out.resize(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    typename Vec::Scalar acc(0);
    for (int k = 0; k < ell; ++k) acc += v[s ^ (Eigen::Index{1} << k)];
    out[s] = acc;
  }
}

// Merged, ascending event times: schedule knots and samples.
std::vector<double> event_times(const Schedule& schedule, const std::vector<double>& samples) {
  std::vector<double> ev = schedule.breakpoints();
  ev.insert(ev.end(), samples.begin(), samples.end());
  std::sort(ev.begin(), ev.end());
  ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
  while (!ev.empty() && ev.back() > schedule.duration()) ev.pop_back();
  return ev;
}

void record_sample(TrajectoryRecord& rec, double t, const Schedule& schedule,
                   const Eigen::VectorXd& probs, double energy, double norm, bool keep) {
  rec.times.push_back(t);
  rec.g.push_back(schedule.g(t));
  rec.h.push_back(schedule.h(t));
  auto m = site_magnetizations(rec.ell, probs);
  double avg = 0.0;
  for (double x : m) avg += x;
  rec.order_parameter.push_back(avg / rec.ell);
  rec.site_mz.push_back(std::move(m));
  rec.energy.push_back(energy);
  rec.norm.push_back(norm);
  if (keep) rec.probabilities.push_back(probs);
}

// Generic adaptive driver: `step(state, t, dt, ok)` advances by dt with an
// order-4 method; errors are estimated by step doubling.
template <typename State, typename Step, typename Sample, typename Finish>
void integrate(const Schedule& schedule, const std::vector<double>& samples, State& state,
               double tol, const IntegratorOptions& opt, TrajectoryRecord& rec, Step&& step,
               Sample&& sample, Finish&& finish) {
  const auto events = event_times(schedule, samples);
  std::size_t next_sample = 0;
  auto flush_samples = [&](double t) {
    while (next_sample < samples.size() && samples[next_sample] <= t + 1e-14 * std::max(1.0, t)) {
      sample(samples[next_sample]);
      ++next_sample;
    }
  };
  double t = 0.0;
  double dt = std::min(0.05, opt.max_step);
  flush_samples(t);
  for (double te : events) {
    while (te - t > 1e-14 * std::max(1.0, te)) {
      const double remaining = te - t;
      const bool last = dt >= remaining;
      const double hstep = last ? remaining : dt;
      bool ok = true;
      State full = step(state, t, hstep, ok);
      State half = ok ? step(state, t, 0.5 * hstep, ok) : state;
      if (ok) half = step(half, t + 0.5 * hstep, 0.5 * hstep, ok);
      const double err = ok ? (full - half).norm() / 15.0 : std::numeric_limits<double>::infinity();
      const double factor =
          err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 2.0;
      if (err <= tol) {
        state = std::move(half);
        finish(state);
        t = last ? te : t + hstep;
        ++rec.steps;
        const double grown = std::min(hstep * std::min(2.0, factor), opt.max_step);
        dt = last ? std::max(dt, grown) : grown;
      } else {
        ++rec.rejected;
        dt = hstep * std::max(0.2, std::min(factor, 0.9));
        if (dt < opt.min_step)
          throw StepUnderflow("required step " + std::to_string(dt) + " is below the minimum");
      }
    }
    t = te;
    flush_samples(t);
  }
  flush_samples(schedule.duration());
}

}  // namespace

TrajectoryRecord evolve_pure(const ChainSpec& spec, const Schedule& schedule,
                             const StateVector& initial, const std::vector<double>& sample_times,
                             const IntegratorOptions& opt) {
  if (spec.ell > 16) throw InvalidArgument("evolve_pure supports ell <= 16");
  if (initial.ell() != spec.ell) throw InvalidArgument("initial state size does not match ell");
  initial.require_normalized(1e-8);
  check_samples(sample_times, schedule.duration());
  const IsingChain chain(spec);
  const int ell = spec.ell;
  const Eigen::VectorXd D0 = chain.interaction_energy() + chain.boundary_energy();
  const Eigen::VectorXd& Mz = chain.total_z();
  const double c = std::sqrt(3.0) / 12.0;

  TrajectoryRecord rec;
  rec.ell = ell;
  Eigen::VectorXcd psi = initial.amplitudes();

  auto step = [&](const Eigen::VectorXcd& v, double t, double dt, bool& ok) -> Eigen::VectorXcd {
    const double t1 = t + (0.5 - std::sqrt(3.0) / 6.0) * dt;
    const double t2 = t + (0.5 + std::sqrt(3.0) / 6.0) * dt;
    const double g1 = schedule.g(t1), g2 = schedule.g(t2);
    const double h1 = schedule.h(t1), h2 = schedule.h(t2);
    // H_eff = (H1 + H2)/2 + i c dt [H1, H2], with [H1, H2] = [E, X] and
    // E = (g1 - g2) D0 + (g2 h1 - g1 h2) Mz.
    const Eigen::VectorXd d = D0 - 0.5 * (h1 + h2) * Mz;
    const double gbar = 0.5 * (g1 + g2);
    const double a = g1 - g2, b = g2 * h1 - g1 * h2;
    const bool comm = a != 0.0 || b != 0.0;
    const Eigen::VectorXd E = comm ? Eigen::VectorXd(a * D0 + b * Mz) : Eigen::VectorXd();
    const cplx coef = kI * c * dt;
    double bound = d.cwiseAbs().maxCoeff() + std::abs(gbar) * ell;
    if (comm) bound += 2.0 * c * dt * E.cwiseAbs().maxCoeff() * ell;
    krylov::HermitianOperator op{
        v.size(),
        [&](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
          Eigen::VectorXcd xv;
          apply_flips(ell, in, xv);
          out = d.cwiseProduct(in) - gbar * xv;
          if (comm) {
            Eigen::VectorXcd ev = E.cwiseProduct(in), xe;
            apply_flips(ell, ev, xe);
            out += coef * (E.cwiseProduct(xv) - xe);
          }
        },
        bound};
    auto r = krylov::expm_apply(op, v, dt, opt.krylov_tol, opt.krylov_max_dim);
    if (!r.converged) ok = false;
    return std::move(r.vector);
  };

  auto sample = [&](double t) {
    const double g = schedule.g(t), h = schedule.h(t);
    Eigen::VectorXcd xv;
    apply_flips(ell, psi, xv);
    const Eigen::VectorXd d = D0 - h * Mz;
    const double energy = (psi.dot(d.cwiseProduct(psi) - g * xv)).real();
    record_sample(rec, t, schedule, psi.cwiseAbs2(), energy, psi.norm(), opt.keep_probabilities);
  };
  auto finish = [&](Eigen::VectorXcd& v) {
    const double n = v.norm();
    rec.norm_drift += std::abs(n - 1.0);
    v /= n;
  };
  integrate(schedule, sample_times, psi, opt.local_tol, opt, rec, step, sample, finish);
  rec.final_state = StateVector(ell, psi);
  return rec;
}

TrajectoryRecord evolve_lindblad(const ChainSpec& spec, const Schedule& schedule,
                                 const NoiseModel& noise, const Eigen::MatrixXcd& rho0,
                                 const std::vector<double>& sample_times,
                                 const IntegratorOptions& opt) {
  if (spec.ell > kMaxLindbladEll) throw InvalidArgument("evolve_lindblad supports ell <= 8");
  noise.validate(spec.ell);
  const IsingChain chain(spec);
  const int ell = spec.ell;
  const Eigen::Index n = static_cast<Eigen::Index>(chain.dim());
  if (rho0.rows() != n || rho0.cols() != n) throw InvalidArgument("density matrix size mismatch");
  if (std::abs(rho0.trace() - cplx(1.0)) > 1e-8) throw InvalidArgument("density matrix trace != 1");
  check_samples(sample_times, schedule.duration());

  const Eigen::VectorXd D0 = chain.interaction_energy() + chain.boundary_energy();
  const Eigen::VectorXd& Mz = chain.total_z();
  Eigen::MatrixXd Gamma(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      double s = 0.0;
      for (int i = 0; i < ell; ++i)
        if (((a ^ b) >> i) & 1) s += 2.0 * noise.gamma_i[i];
      Gamma(a, b) = s;
    }
  const double gc = noise.gamma_c;

  // H rho for fields (g, h), column by column.
  auto h_times = [&](const Eigen::MatrixXcd& rho, double g, double h) {
    const Eigen::VectorXd d = D0 - h * Mz;
    Eigen::MatrixXcd out = d.asDiagonal() * rho;
    for (Eigen::Index s = 0; s < n; ++s)
      for (int k = 0; k < ell; ++k) out.row(s) -= g * rho.row(s ^ (Eigen::Index{1} << k));
    return out;
  };
  auto generator = [&](const Eigen::MatrixXcd& rho, double t) {
    const double g = schedule.g(t), h = schedule.h(t);
    const Eigen::MatrixXcd hr = h_times(rho, g, h);
    Eigen::MatrixXcd out = -kI * (hr - hr.adjoint());
    out -= Gamma.cwiseProduct(rho);
    if (gc > 0.0) {
      Eigen::MatrixXcd flipped = Eigen::MatrixXcd::Zero(n, n);
      for (int k = 0; k < ell; ++k) {
        const Eigen::Index m = Eigen::Index{1} << k;
        for (Eigen::Index b = 0; b < n; ++b)
          for (Eigen::Index a = 0; a < n; ++a) flipped(a, b) += rho(a ^ m, b ^ m);
      }
      out -= gc * (ell * rho - flipped);
    }
    return out;
  };

  TrajectoryRecord rec;
  rec.ell = ell;
  rec.min_eigenvalue = std::numeric_limits<double>::infinity();
  Eigen::MatrixXcd rho = 0.5 * (rho0 + rho0.adjoint());

  auto step = [&](const Eigen::MatrixXcd& r, double t, double dt, bool&) -> Eigen::MatrixXcd {
    const Eigen::MatrixXcd k1 = generator(r, t);
    const Eigen::MatrixXcd k2 = generator(r + 0.5 * dt * k1, t + 0.5 * dt);
    const Eigen::MatrixXcd k3 = generator(r + 0.5 * dt * k2, t + 0.5 * dt);
    const Eigen::MatrixXcd k4 = generator(r + dt * k3, t + dt);
    return r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };
  auto sample = [&](double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()[0];
    rec.min_eigenvalue = std::min(rec.min_eigenvalue, lo);
    if (lo < -1e-6)
      throw PositivityViolation("density matrix eigenvalue " + std::to_string(lo) + " at t=" +
                                std::to_string(t));
    if (lo < -1e-7) rec.diagnostics.warn("density matrix eigenvalue below -1e-7");
    const Eigen::VectorXd probs = rho.diagonal().real();
    const double tr = rho.trace().real();
    rec.norm_drift = std::max(rec.norm_drift, std::abs(tr - 1.0));
    const double energy = h_times(rho, schedule.g(t), schedule.h(t)).trace().real();
    record_sample(rec, t, schedule, probs, energy, tr, opt.keep_probabilities);
  };
  auto finish = [&](Eigen::MatrixXcd& r) { r = (0.5 * (r + r.adjoint())).eval(); };
  integrate(schedule, sample_times, rho, opt.lindblad_tol, opt, rec, step, sample, finish);
  rec.final_density = rho;
  return rec;
}

TrajectoryRecord evolve_lindblad(const ChainSpec& spec, const Schedule& schedule,
                                 const NoiseModel& noise, const StateVector& initial,
                                 const std::vector<double>& sample_times,
                                 const IntegratorOptions& options) {
  initial.require_normalized(1e-8);
  const Eigen::MatrixXcd rho = initial.amplitudes() * initial.amplitudes().adjoint();
  return evolve_lindblad(spec, schedule, noise, rho, sample_times, options);
}

Stage OptimizedRamp::stage(double tau) const {
  if (!(tau >= 0.0)) throw InvalidArgument("ramp duration must be >= 0");
  std::vector<double> t(t_unit);
  for (auto& x : t) x *= tau;
  t.back() = tau;
  Stage s{StageKind::HRamp, Profile::constant(tau, g), Profile(std::move(t), h_knots),
          "optimized"};
  return s;
}

double OptimizedRamp::linear_equivalent_ratio() const {
  return std::abs(h_knots.back() - h_knots.front()) / (Delta_min * Delta_min * integral);
}

namespace {

OptimizedRamp build_ramp(const std::vector<double>& h_knots, const std::vector<double>& gaps,
                         double g) {
  const std::size_t n = h_knots.size();
  if (n < 2) throw InvalidArgument("optimized ramp needs at least two knots");
  const bool up = h_knots.back() > h_knots.front();
  for (std::size_t i = 1; i < n; ++i)
    if (up ? !(h_knots[i] > h_knots[i - 1]) : !(h_knots[i] < h_knots[i - 1]))
      throw InvalidArgument("ramp knots must be strictly monotone");
  OptimizedRamp r;
  r.g = g;
  r.h_knots = h_knots;
  r.gap_knots = gaps;
  r.Delta_min = std::numeric_limits<double>::infinity();
  for (double d : gaps) {
    if (!(d > 0.0) || !std::isfinite(d)) throw InvalidArgument("gap must be positive on the ramp");
    r.Delta_min = std::min(r.Delta_min, d);
  }
  // t(h) = C int dh / Delta^2, trapezoid rule on the knots
  r.t_unit.assign(n, 0.0);
  double acc = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double w0 = 1.0 / (gaps[i - 1] * gaps[i - 1]);
    const double w1 = 1.0 / (gaps[i] * gaps[i]);
    acc += 0.5 * (w0 + w1) * std::abs(h_knots[i] - h_knots[i - 1]);
    r.t_unit[i] = acc;
  }
  r.integral = acc;
  for (auto& t : r.t_unit) t /= acc;
  r.t_unit.back() = 1.0;
  return r;
}

}  // namespace

OptimizedRamp optimized_h_ramp(const std::function<double(double)>& gap,
                               const std::vector<double>& h_knots, double g) {
  std::vector<double> gaps;
  for (double h : h_knots) gaps.push_back(gap(h));
  return build_ramp(h_knots, gaps, g);
}

OptimizedRamp optimized_h_ramp(const ChainSpec& spec, double g, double h_start, double h_end,
                               int n_uniform, int workers) {
  if (h_start == h_end) throw InvalidArgument("ramp endpoints must differ");
  if (n_uniform < 7) throw InvalidArgument("optimized ramp needs >= 7 uniform knots");
  const double lo = std::min(h_start, h_end), hi = std::max(h_start, h_end);
  std::vector<double> knots(n_uniform);
  for (int i = 0; i < n_uniform; ++i) knots[i] = lo + (hi - lo) * i / (n_uniform - 1);
  knots.back() = hi;
  ScanOptions so;
  so.workers = workers;
  auto scan = gap_scan(spec, g, knots, so);
  std::vector<double> gaps;
  for (const auto& p : scan) gaps.push_back(p.gap());

  // resolve the avoided crossing with a cluster of knots
  const std::size_t imin =
      static_cast<std::size_t>(std::min_element(gaps.begin(), gaps.end()) - gaps.begin());
  if (imin > 0 && imin + 1 < knots.size()) {
    try {
      const auto fit = locate_transition(spec, g, knots[imin - 1], knots[imin + 1], so).fit;
      const double w = std::min(6.0 * fit.delta, 0.5 * (knots[imin + 1] - knots[imin - 1]));
      std::vector<double> extra;
      for (int i = 0; i <= 80; ++i) {
        const double h = fit.h_c - w + 2.0 * w * i / 80.0;
        if (h > lo && h < hi) extra.push_back(h);
      }
      if (extra.size() >= 7) {
        const auto s2 = gap_scan(spec, g, extra, so);
        for (const auto& p : s2) {
          knots.push_back(p.h);
          gaps.push_back(p.gap());
        }
      }
    } catch (const FitDegenerate&) {
    }
  }
  std::vector<std::size_t> order(knots.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return knots[a] < knots[b]; });
  std::vector<double> hk, gk;
  for (std::size_t i : order) {
    if (!hk.empty() && knots[i] == hk.back()) continue;
    hk.push_back(knots[i]);
    gk.push_back(gaps[i]);
  }
  if (h_start > h_end) {
    std::reverse(hk.begin(), hk.end());
    std::reverse(gk.begin(), gk.end());
  }
  return build_ramp(hk, gk, g);
}

Schedule lz_schedule(double g, double h_end, double tau, const LZOptions& o,
                     const OptimizedRamp* ramp) {
  Schedule s;
  if (o.three_stage)
    s.append(linear_stage(StageKind::GRampUp, o.g_ramp_time, 0.0, g, 0.0, 0.0));
  if (o.optimized) {
    if (!ramp) throw InvalidArgument("optimized h-ramp requested without a ramp");
    s.append(ramp->stage(tau));
  } else {
    s.append(linear_stage(StageKind::HRamp, tau, g, g, 0.0, h_end));
  }
  if (o.three_stage)
    s.append(linear_stage(StageKind::GRampDown, o.g_ramp_time, g, 0.0, h_end, h_end));
  return s;
}

std::vector<LZPoint> landau_zener_probe(const ChainSpec& spec, double g, double h_end,
                                        const std::vector<double>& tau_list, const LZOptions& o,
                                        const OptimizedRamp* ramp) {
  std::optional<OptimizedRamp> own;
  if (o.optimized && !ramp) {
    own = optimized_h_ramp(spec, g, 0.0, h_end, 201, o.workers);
    ramp = &*own;
  }
  if (o.noise) o.noise->validate(spec.ell);
  const auto down = StateVector::all_down(spec.ell);
  const std::size_t up_index = (std::size_t{1} << spec.ell) - 1;
  return parallel_map(tau_list.size(), o.workers, [&](std::size_t i) {
    const Schedule s = lz_schedule(g, h_end, tau_list[i], o, ramp);
    const std::vector<double> samples{s.duration()};
    LZPoint p;
    p.tau = tau_list[i];
    if (o.noise) {
      const auto rec = evolve_lindblad(spec, s, *o.noise, down, samples, o.integrator);
      p.p_down = rec.final_density->operator()(0, 0).real();
      p.p_up = rec.final_density->operator()(up_index, up_index).real();
    } else {
      const auto rec = evolve_pure(spec, s, down, samples, o.integrator);
      p.p_down = std::norm(rec.final_state->amplitudes()[0]);
      p.p_up = std::norm(rec.final_state->amplitudes()[up_index]);
    }
    return p;
  });
}

void TwoLevelModel::validate() const {
  if (!(Delta_c > 0.0)) throw InvalidArgument("two-level gap must be positive");
  if (!std::isfinite(M) || !std::isfinite(h_c)) throw InvalidArgument("non-finite model");
}

double TwoLevelModel::omega(double h) const {
  return std::sqrt(Delta_c * Delta_c + 4.0 * M * M * (h - h_c) * (h - h_c));
}

std::vector<double> two_level_quench(const TwoLevelModel& model, double h,
                                     const std::vector<double>& t_grid) {
  model.validate();
  const double w = model.omega(h);
  const double amp = (model.Delta_c / w) * (model.Delta_c / w);
  std::vector<double> p;
  for (double t : t_grid) {
    const double s = std::sin(0.5 * w * t);
    p.push_back(amp * s * s);
  }
  return p;
}

QuenchScan quench_scan(const ChainSpec& spec, double g, const std::vector<double>& h_grid,
                       double t_max, int n_times, int workers, const IntegratorOptions& options) {
  if (!(t_max > 0.0)) throw InvalidArgument("t_max must be positive");
  const auto times = uniform_times(t_max, n_times);
  const auto down = StateVector::all_down(spec.ell);
  QuenchScan out;
  out.points = parallel_map(h_grid.size(), workers, [&](std::size_t i) {
    Schedule s;
    s.append(quench_stage(t_max, g, h_grid[i]));
    const auto rec = evolve_pure(spec, s, down, times, options);
    const auto it = std::max_element(rec.order_parameter.begin(), rec.order_parameter.end());
    const auto k = static_cast<std::size_t>(it - rec.order_parameter.begin());
    return QuenchPoint{h_grid[i], *it, rec.times[k]};
  });
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : out.points) {
    if (p.t_at_max >= t_max && p.max_order_parameter > -1.0 + 1e-12)
      out.diagnostics.warn("maximum at t_max for h=" + format_double(p.h) +
                           " (oscillation may be undersampled)");
    if (p.max_order_parameter > best) {
      best = p.max_order_parameter;
      out.h_peak = p.h;
    }
  }
  return out;
}

}  // namespace bubble
