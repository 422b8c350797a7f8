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


#include "bubble/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bubble/io.hpp"
#include "json.hpp"

namespace bubble {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

// Per-site Hadamard with the convention that a set bit is the +x outcome.
Eigen::VectorXcd to_x_basis(const Eigen::VectorXcd& amp, int ell) {
  Eigen::VectorXcd v = amp;
  const double r = 1.0 / std::sqrt(2.0);
  for (int k = 0; k < ell; ++k) {
    const Eigen::Index bit = Eigen::Index{1} << k;
    for (Eigen::Index s = 0; s < v.size(); ++s) {
      if (s & bit) continue;
      const cplx down = v[s], up = v[s | bit];
      v[s | bit] = (up + down) * r;
      v[s] = (up - down) * r;
    }
  }
  return v;
}

// Diagonal part of H for one Z-basis outcome.
double z_energy(std::uint64_t bits, const Eigen::MatrixXd& Jm, const std::vector<double>& field) {
  const int ell = static_cast<int>(field.size());
  double e = 0.0;
  for (int i = 0; i < ell; ++i) {
    const int zi = spin_z(bits, i);
    e -= field[i] * zi;
    for (int j = i + 1; j < ell; ++j) e -= Jm(i, j) * zi * spin_z(bits, j);
  }
  return e;
}

double x_energy(std::uint64_t bits, int ell, double g) {
  int sum = 0;
  for (int i = 0; i < ell; ++i) sum += spin_z(bits, i);
  return -g * sum;
}

std::vector<double> total_field(const ChainSpec& spec, double h) {
  auto f = boundary_field(spec);
  for (double& v : f) v += h;
  return f;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw NumericalError("least-squares fit needs distinct abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at) {
  auto it = std::upper_bound(x.begin(), x.end(), at);
  if (it == x.begin()) return y.front();
  if (it == x.end()) return y.back();
  const std::size_t i = static_cast<std::size_t>(it - x.begin());
  const double w = (at - x[i - 1]) / (x[i] - x[i - 1]);
  return (1.0 - w) * y[i - 1] + w * y[i];
}

// Mean pairwise RMS distance of curves (x ascending) on their common range.
double collapse_metric(const std::vector<std::vector<double>>& xs,
                       const std::vector<std::vector<double>>& ys, int grid_points) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& x : xs) {
    if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    lo = std::max(lo, x.front());
    hi = std::min(hi, x.back());
  }
  if (!(hi > lo)) return std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> sampled(xs.size());
  for (std::size_t c = 0; c < xs.size(); ++c)
    for (int k = 0; k < grid_points; ++k)
      sampled[c].push_back(interpolate(xs[c], ys[c], lo + (hi - lo) * k / (grid_points - 1)));
  double total = 0.0;
  int pairs = 0;
  for (std::size_t a = 0; a < xs.size(); ++a)
    for (std::size_t b = a + 1; b < xs.size(); ++b) {
      double s = 0.0;
      for (int k = 0; k < grid_points; ++k) s += std::pow(sampled[a][k] - sampled[b][k], 2);
      total += std::sqrt(s / grid_points);
      ++pairs;
    }
  return pairs ? total / pairs : 0.0;
}

}  // namespace

std::string to_string(MeasurementBasis b) { return b == MeasurementBasis::Z ? "Z" : "X"; }

MeasurementBasis basis_from_string(const std::string& s) {
  if (s == "Z" || s == "z") return MeasurementBasis::Z;
  if (s == "X" || s == "x") return MeasurementBasis::X;
  throw InvalidArgument("unknown measurement basis '" + s + "' (expected Z or X)");
}

void ShotSet::validate() const {
  if (ell < 1 || ell > 63) throw InvalidArgument("shot set ell out of range");
  const std::uint64_t mask = ~((std::uint64_t{1} << ell) - 1);
  for (auto b : bitstrings)
    if (b & mask) throw InvalidArgument("bitstring has more than ell bits");
}

Eigen::VectorXd measurement_probabilities(const StateVector& state, MeasurementBasis basis) {
  if (basis == MeasurementBasis::Z) return state.probabilities();
  return to_x_basis(state.amplitudes(), state.ell()).cwiseAbs2();
}

ShotSet sample_outcomes(int ell, const Eigen::VectorXd& p, MeasurementBasis basis,
                        std::size_t repetitions, std::uint64_t seed) {
  if (p.size() != (Eigen::Index{1} << ell))
    throw InvalidArgument("probability vector length must be 2^ell");
  if (repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
  if ((p.array() < -1e-12).any() || std::abs(p.sum() - 1.0) > 1e-8)
    throw InvalidArgument("outcome probabilities must be non-negative and sum to 1");
  std::vector<double> cdf(static_cast<std::size_t>(p.size()));
  std::partial_sum(p.data(), p.data() + p.size(), cdf.begin());
  const double total = cdf.back();
  ShotSet out{ell, basis, seed, {}};
  out.bitstrings.reserve(repetitions);
  std::mt19937_64 rng(seed);
  for (std::size_t r = 0; r < repetitions; ++r) {
    const double u = uniform01(rng) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    // rounding can clamp onto a trailing zero-probability state
    auto idx = static_cast<std::size_t>(it - cdf.begin());
    while (p[static_cast<Eigen::Index>(idx)] <= 0.0 && idx > 0) --idx;
    out.bitstrings.push_back(idx);
  }
  return out;
}

ShotSet sample_shots(const StateVector& state, MeasurementBasis basis, std::size_t repetitions,
                     std::uint64_t seed) {
  state.require_normalized(1e-8);
  return sample_outcomes(state.ell(), measurement_probabilities(state, basis), basis, repetitions,
                         seed);
}

std::string encode_shots(const ShotSet& shots) {
  shots.validate();
  nlohmann::json header{{"ell", shots.ell},
                        {"basis", to_string(shots.basis)},
                        {"seed", shots.seed},
                        {"count", shots.repetitions()}};
  std::string out = header.dump() + "\n";
  const std::size_t nbits = shots.repetitions() * static_cast<std::size_t>(shots.ell);
  std::string payload((nbits + 7) / 8, '\0');
  std::size_t pos = 0;
  for (auto b : shots.bitstrings)
    for (int i = 0; i < shots.ell; ++i, ++pos)
      if ((b >> i) & 1u) payload[pos / 8] = static_cast<char>(payload[pos / 8] | (1 << (pos % 8)));
  return out + payload;
}

ShotSet decode_shots(const std::string& bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw InvalidArgument("shot file has no header line");
  ShotSet s;
  std::size_t count = 0;
  try {
    const auto header = nlohmann::json::parse(bytes.substr(0, nl));
    s.ell = header.at("ell").get<int>();
    s.basis = basis_from_string(header.at("basis").get<std::string>());
    s.seed = header.at("seed").get<std::uint64_t>();
    count = header.at("count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed shot file header: ") + e.what());
  }
  if (s.ell < 1 || s.ell > 63) throw InvalidArgument("shot file ell out of range");
  const std::size_t nbits = count * static_cast<std::size_t>(s.ell);
  if (bytes.size() - nl - 1 != (nbits + 7) / 8)
    throw InvalidArgument("shot file payload length does not match its header");
  const char* payload = bytes.data() + nl + 1;
  s.bitstrings.assign(count, 0);
  std::size_t pos = 0;
  for (std::size_t r = 0; r < count; ++r)
    for (int i = 0; i < s.ell; ++i, ++pos)
      if ((static_cast<unsigned char>(payload[pos / 8]) >> (pos % 8)) & 1u)
        s.bitstrings[r] |= std::uint64_t{1} << i;
  return s;
}

void write_shots(const std::filesystem::path& path, const ShotSet& shots) {
  write_file(path, encode_shots(shots));
}

ShotSet read_shots(const std::filesystem::path& path) { return decode_shots(read_file(path)); }

int largest_domain(std::uint64_t bits, int ell) {
  int best = 0, run = 0;
  for (int i = 0; i < ell; ++i) {
    run = ((bits >> i) & 1u) ? run + 1 : 0;
    best = std::max(best, run);
  }
  return best;
}

int DomainHistogram::peak() const {
  return static_cast<int>(std::max_element(probability.begin(), probability.end()) -
                          probability.begin());
}

std::string DomainHistogram::to_csv() const {
  Csv csv({"n[sites]", "probability[1]"});
  for (std::size_t n = 0; n < probability.size(); ++n)
    csv.row({static_cast<double>(n), probability[n]});
  return csv.str();
}

DomainHistogram largest_domain_histogram(const ShotSet& shots) {
  if (shots.basis != MeasurementBasis::Z)
    throw BasisMismatch("domain histograms need Z-basis shots");
  if (shots.bitstrings.empty()) throw InvalidArgument("empty shot set");
  std::vector<std::size_t> counts(shots.ell + 1, 0);
  for (auto b : shots.bitstrings) ++counts[largest_domain(b, shots.ell)];
  DomainHistogram h{shots.ell, {}};
  for (auto c : counts)
    h.probability.push_back(static_cast<double>(c) / static_cast<double>(shots.repetitions()));
  return h;
}

DomainHistogram largest_domain_histogram(int ell, const Eigen::VectorXd& probabilities) {
  if (probabilities.size() != (Eigen::Index{1} << ell))
    throw InvalidArgument("probability vector length must be 2^ell");
  DomainHistogram h{ell, std::vector<double>(ell + 1, 0.0)};
  for (Eigen::Index s = 0; s < probabilities.size(); ++s)
    h.probability[largest_domain(static_cast<std::uint64_t>(s), ell)] += probabilities[s];
  return h;
}

Eigen::MatrixXd connected_correlations(int ell, const Eigen::VectorXd& probabilities) {
  Eigen::MatrixXd zz = Eigen::MatrixXd::Zero(ell, ell);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(ell);
  for (Eigen::Index s = 0; s < probabilities.size(); ++s) {
    const double p = probabilities[s];
    if (p == 0.0) continue;
    Eigen::VectorXd zs(ell);
    for (int i = 0; i < ell; ++i) zs[i] = spin_z(static_cast<std::uint64_t>(s), i);
    z += p * zs;
    zz.noalias() += p * zs * zs.transpose();
  }
  Eigen::MatrixXd c = zz - z * z.transpose();
  return 0.5 * (c + c.transpose());
}

Eigen::MatrixXd connected_correlations(const StateVector& state) {
  state.require_normalized(1e-8);
  return connected_correlations(state.ell(), state.probabilities());
}

EnergyEstimate estimate_energy(const ShotSet& z_shots, const ShotSet& x_shots,
                               const ChainSpec& spec, double g, double h,
                               const BootstrapOptions& options) {
  if (z_shots.basis != MeasurementBasis::Z || x_shots.basis != MeasurementBasis::X)
    throw BasisMismatch("energy estimation needs one Z-basis and one X-basis shot set");
  if (z_shots.ell != spec.ell || x_shots.ell != spec.ell)
    throw BasisMismatch("shot sets do not match the chain length");
  if (z_shots.bitstrings.empty() || x_shots.bitstrings.empty())
    throw InvalidArgument("energy estimation needs non-empty shot sets");
  if (options.resamples < 2) throw InvalidArgument("bootstrap needs at least 2 resamples");
  const Eigen::MatrixXd Jm = coupling_matrix(spec).values();
  const auto field = total_field(spec, h);
  std::vector<double> ez, ex;
  for (auto b : z_shots.bitstrings) ez.push_back(z_energy(b, Jm, field));
  for (auto b : x_shots.bitstrings) ex.push_back(x_energy(b, spec.ell, g));

  EnergyEstimate out;
  out.mean = mean_of(ez) + mean_of(ex);
  out.resamples = options.resamples;
  auto resample_mean = [](const std::vector<double>& v, std::mt19937_64& rng) {
    double s = 0.0;
    const double n = static_cast<double>(v.size());
    for (std::size_t k = 0; k < v.size(); ++k)
      s += v[std::min(v.size() - 1, static_cast<std::size_t>(uniform01(rng) * n))];
    return s / n;
  };
  const auto means =
      parallel_map(static_cast<std::size_t>(options.resamples), options.workers, [&](std::size_t r) {
        auto rng = derived_rng(options.seed, r);
        const double a = resample_mean(ez, rng);
        return a + resample_mean(ex, rng);
      });
  const double m = mean_of(means);
  double var = 0.0;
  for (double v : means) var += (v - m) * (v - m);
  out.standard_error = std::sqrt(var / (means.size() - 1));
  return out;
}

double estimate_energy_exact(const StateVector& state, const ChainSpec& spec, double g,
                             double h) {
  state.require_normalized(1e-8);
  if (state.ell() != spec.ell) throw BasisMismatch("state does not match the chain length");
  const Eigen::MatrixXd Jm = coupling_matrix(spec).values();
  const auto field = total_field(spec, h);
  const Eigen::VectorXd pz = measurement_probabilities(state, MeasurementBasis::Z);
  const Eigen::VectorXd px = measurement_probabilities(state, MeasurementBasis::X);
  double e = 0.0;
  for (Eigen::Index s = 0; s < pz.size(); ++s) {
    const auto b = static_cast<std::uint64_t>(s);
    if (pz[s] != 0.0) e += pz[s] * z_energy(b, Jm, field);
    if (px[s] != 0.0) e += px[s] * x_energy(b, spec.ell, g);
  }
  return e;
}

SpinFlipEnergy spin_flip_error_model(const StateVector& state, double p, const ChainSpec& spec,
                                     double g, double h) {
  if (!(p >= 0.0 && p <= 0.5)) throw InvalidArgument("flip probability must lie in [0, 0.5]");
  state.require_normalized(1e-8);
  const Hamiltonian H = hamiltonian(spec, g, h);
  SpinFlipEnergy out;
  out.raw = H.expectation(state);
  const auto& a = state.amplitudes();
  double acc = 0.0;
  for (int i = 0; i < state.ell(); ++i) {
    const Eigen::Index bit = Eigen::Index{1} << i;
    StateVector fx(state.ell()), fz(state.ell());
    for (Eigen::Index s = 0; s < a.size(); ++s) {
      fx.amplitudes()[s ^ bit] = a[s];
      fz.amplitudes()[s] = (s & bit) ? a[s] : -a[s];
    }
    acc += (1.0 - 2.0 * p) * out.raw + p * (H.expectation(fx) + H.expectation(fz));
  }
  out.corrected = acc / state.ell();
  return out;
}

double first_zero_crossing(const std::vector<double>& times, const std::vector<double>& values) {
  if (times.size() != values.size() || times.empty())
    throw InvalidArgument("times and values must have the same non-zero length");
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    if (values[i] == 0.0) return times[i];
    if (values[i] * values[i + 1] < 0.0)
      return times[i] + (times[i + 1] - times[i]) * values[i] / (values[i] - values[i + 1]);
  }
  if (values.back() == 0.0) return times.back();
  throw NoCrossing("trajectory never changes sign");
}

KZFit kz_collapse(const std::vector<KZTrajectory>& trajectories, double h_c,
                  const KZOptions& options) {
  if (!(options.J > 0.0)) throw InvalidArgument("J must be positive");
  if (options.grid_points < 2) throw InvalidArgument("grid_points must be >= 2");
  KZFit fit;
  fit.h_c = h_c;
  fit.source = options.source;
  std::vector<const KZTrajectory*> used;
  for (const auto& tr : trajectories) {
    if (!(tr.tau > 0.0)) throw InvalidArgument("ramp durations must be positive");
    KZCrossing c;
    c.tau = tr.tau;
    c.tc = tr.tau * h_c / (2.0 * options.J);
    try {
      c.t0 = first_zero_crossing(tr.times, tr.sigma_z);
    } catch (const NoCrossing& e) {
      fit.excluded_taus.push_back(tr.tau);
      fit.excluded_reasons.push_back(e.what());
      continue;
    }
    if (c.t0 == c.tc) {
      fit.excluded_taus.push_back(tr.tau);
      fit.excluded_reasons.push_back("crossing coincides with the critical time");
      continue;
    }
    c.h0 = 2.0 * options.J * c.t0 / tr.tau;
    fit.crossings.push_back(c);
    used.push_back(&tr);
  }
  if (fit.crossings.size() < 2)
    throw NoCrossing("fewer than two trajectories change sign; cannot fit an exponent");

  std::vector<double> x, y;
  for (const auto& c : fit.crossings) {
    x.push_back(std::log(c.tau));
    y.push_back(std::log(std::abs(c.t0 - c.tc) / c.tau));
  }
  const LineFit line = least_squares(x, y);
  fit.mu = -line.slope;
  fit.log_prefactor = line.intercept;
  for (std::size_t i = 0; i < x.size(); ++i)
    fit.residuals.push_back(y[i] - (line.intercept + line.slope * x[i]));

  // percentile interval from resampling the (tau, t0) pairs
  std::vector<double> mus;
  for (int r = 0; r < options.bootstrap; ++r) {
    auto rng = derived_rng(options.seed, static_cast<std::uint64_t>(r));
    std::vector<double> bx, by;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const auto i = std::min(x.size() - 1, static_cast<std::size_t>(uniform01(rng) * x.size()));
      bx.push_back(x[i]);
      by.push_back(y[i]);
    }
    if (std::adjacent_find(bx.begin(), bx.end(), std::not_equal_to<>()) == bx.end()) continue;
    mus.push_back(-least_squares(bx, by).slope);
  }
  if (mus.empty()) {
    fit.mu_ci_low = fit.mu_ci_high = fit.mu;
  } else {
    std::sort(mus.begin(), mus.end());
    auto pct = [&](double q) {
      return mus[std::min(mus.size() - 1, static_cast<std::size_t>(q * (mus.size() - 1) + 0.5))];
    };
    fit.mu_ci_low = pct(0.025);
    fit.mu_ci_high = pct(0.975);
  }

  std::vector<std::vector<double>> xb, xa, ys;
  for (std::size_t k = 0; k < used.size(); ++k) {
    const auto& tr = *used[k];
    const double tc = fit.crossings[k].tc;
    const double scale = std::pow(tr.tau, fit.mu);
    std::vector<double> b, a, v;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      if (tr.times[i] < tc) continue;
      b.push_back((tr.times[i] - tc) / tr.tau);
      a.push_back(b.back() * scale);
      v.push_back(tr.sigma_z[i]);
    }
    xb.push_back(std::move(b));
    xa.push_back(std::move(a));
    ys.push_back(std::move(v));
  }
  fit.collapse_before = collapse_metric(xb, ys, options.grid_points);
  fit.collapse_after = collapse_metric(xa, ys, options.grid_points);
  return fit;
}

std::string KZFit::crossings_csv() const {
  Csv csv({"tau[1/J]", "t0[1/J]", "h0[J]", "tc[1/J]", "log_residual[1]"});
  for (std::size_t i = 0; i < crossings.size(); ++i)
    csv.row({crossings[i].tau, crossings[i].t0, crossings[i].h0, crossings[i].tc, residuals[i]});
  return csv.str();
}

std::string KZFit::to_json() const {
  nlohmann::json j;
  j["h_c[J]"] = h_c;
  j["mu"] = mu;
  j["mu_ci95"] = {mu_ci_low, mu_ci_high};
  j["log_prefactor"] = log_prefactor;
  j["collapse_before"] = collapse_before;
  j["collapse_after"] = collapse_after;
  j["source"] = source;
  j["excluded_taus[1/J]"] = excluded_taus;
  j["excluded_reasons"] = excluded_reasons;
  auto& arr = j["crossings"] = nlohmann::json::array();
  for (std::size_t i = 0; i < crossings.size(); ++i)
    arr.push_back({{"tau[1/J]", crossings[i].tau},
                   {"t0[1/J]", crossings[i].t0},
                   {"h0[J]", crossings[i].h0},
                   {"tc[1/J]", crossings[i].tc},
                   {"residual", residuals[i]}});
  return j.dump(2) + "\n";
}

std::string kz_rescaled_csv(const std::vector<KZTrajectory>& trajectories, const KZFit& fit,
                            double J) {
  Csv csv({"tau[1/J]", "x_rescaled[1]", "sigma_z[1]"});
  for (const auto& tr : trajectories) {
    const double tc = tr.tau * fit.h_c / (2.0 * J);
    const double scale = std::pow(tr.tau, fit.mu);
    for (std::size_t i = 0; i < tr.times.size(); ++i)
      if (tr.times[i] >= tc) csv.row({tr.tau, (tr.times[i] - tc) / tr.tau * scale, tr.sigma_z[i]});
  }
  return csv.str();
}

}  // namespace bubble
