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


#include "bubble/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "bubble/errors.hpp"

namespace bubble {

Profile::Profile(std::vector<double> t, std::vector<double> v) : t_(std::move(t)), v_(std::move(v)) {
  if (t_.empty() || t_.size() != v_.size()) throw InvalidArgument("profile needs matching knots");
  if (t_.front() != 0.0) throw InvalidArgument("profile must start at t = 0");
  for (std::size_t i = 0; i < t_.size(); ++i) {
    if (!std::isfinite(t_[i]) || !std::isfinite(v_[i]))
      throw InvalidArgument("profile knots must be finite");
    if (i > 0 && !(t_[i] >= t_[i - 1])) throw InvalidArgument("profile knots must be ascending");
  }
}

Profile Profile::constant(double duration, double value) {
  if (!(duration >= 0.0)) throw InvalidArgument("duration must be >= 0");
  return Profile({0.0, duration}, {value, value});
}

Profile Profile::linear(double duration, double from, double to) {
  if (!(duration >= 0.0)) throw InvalidArgument("duration must be >= 0");
  return Profile({0.0, duration}, {from, to});
}

double Profile::operator()(double t) const {
  if (t <= t_.front()) return v_.front();
  if (t >= t_.back()) return v_.back();
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - t_.begin());
  const double t0 = t_[j - 1], t1 = t_[j];
  if (t1 == t0) return v_[j];
  const double a = (t - t0) / (t1 - t0);
  return v_[j - 1] + a * (v_[j] - v_[j - 1]);
}

Profile Profile::rescaled(double duration) const {
  if (!(duration >= 0.0)) throw InvalidArgument("duration must be >= 0");
  std::vector<double> t(t_);
  const double old = t_.back();
  for (auto& x : t) x = old > 0.0 ? x * duration / old : 0.0;
  t.back() = duration;
  return Profile(std::move(t), v_);
}

Profile Profile::truncated(double t_end) const {
  if (t_end >= t_.back()) return *this;
  std::vector<double> t, v;
  for (std::size_t i = 0; i < t_.size() && t_[i] < t_end; ++i) {
    t.push_back(t_[i]);
    v.push_back(v_[i]);
  }
  t.push_back(std::max(t_end, 0.0));
  v.push_back((*this)(t_end));
  return Profile(std::move(t), std::move(v));
}

std::string to_string(StageKind k) {
  switch (k) {
    case StageKind::GRampUp: return "g-ramp-up";
    case StageKind::HRamp: return "h-ramp";
    case StageKind::GRampDown: return "g-ramp-down";
    case StageKind::Hold: return "hold";
    case StageKind::Quench: return "quench";
  }
  return "unknown";
}

Stage linear_stage(StageKind kind, double duration, double g0, double g1, double h0, double h1) {
  return Stage{kind, Profile::linear(duration, g0, g1), Profile::linear(duration, h0, h1), "linear"};
}

Stage hold_stage(double duration, double g, double h) {
  return Stage{StageKind::Hold, Profile::constant(duration, g), Profile::constant(duration, h),
               "constant"};
}

Stage quench_stage(double duration, double g, double h) {
  return Stage{StageKind::Quench, Profile::constant(duration, g), Profile::constant(duration, h),
               "constant"};
}

Schedule& Schedule::append(Stage stage) {
  if (stage.g.duration() != stage.h.duration())
    throw InvalidArgument("g and h profiles of a stage must have equal duration");
  if (!stages_.empty() && stage.kind != StageKind::Quench) {
    const Stage& prev = stages_.back();
    const double tol = 1e-12;
    if (std::abs(prev.g.back() - stage.g.front()) > tol ||
        std::abs(prev.h.back() - stage.h.front()) > tol)
      throw InvalidArgument("field discontinuity between " + to_string(prev.kind) + " and " +
                            to_string(stage.kind) + " stages (only a quench may jump)");
  }
  starts_.push_back(duration());
  stages_.push_back(std::move(stage));
  return *this;
}

double Schedule::duration() const {
  return stages_.empty() ? 0.0 : starts_.back() + stages_.back().duration();
}

double Schedule::tau_h() const {
  double tau = 0.0;
  for (const auto& s : stages_)
    if (s.kind == StageKind::HRamp) tau += s.duration();
  return tau;
}

std::pair<std::size_t, double> Schedule::locate(double t) const {
  if (stages_.empty()) throw InvalidArgument("empty schedule");
  std::size_t i = 0;
  while (i + 1 < stages_.size() && t >= starts_[i + 1]) ++i;
  // zero-length stages never own a time point unless they are last
  return {i, t - starts_[i]};
}

double Schedule::g(double t) const {
  const auto [i, local] = locate(t);
  return stages_[i].g(local);
}

double Schedule::h(double t) const {
  const auto [i, local] = locate(t);
  return stages_[i].h(local);
}

std::vector<double> Schedule::breakpoints() const {
  std::vector<double> b{0.0};
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    for (double k : stages_[i].g.knots()) b.push_back(starts_[i] + k);
    for (double k : stages_[i].h.knots()) b.push_back(starts_[i] + k);
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

Schedule Schedule::truncated(double t_end) const {
  Schedule out;
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    if (starts_[i] >= t_end && i > 0) break;
    const double local = t_end - starts_[i];
    Stage s = stages_[i];
    if (local < s.duration()) {
      s.g = s.g.truncated(local);
      s.h = s.h.truncated(local);
    }
    out.append(std::move(s));
  }
  return out;
}

std::vector<double> uniform_times(double t_end, int n) {
  if (n < 2) throw InvalidArgument("need at least 2 sample times");
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = t_end * i / (n - 1);
  t.back() = t_end;
  return t;
}

}  // namespace bubble
