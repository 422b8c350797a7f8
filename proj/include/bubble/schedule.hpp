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


#ifndef BUBBLE_SCHEDULE_HPP
#define BUBBLE_SCHEDULE_HPP

#include <string>
#include <utility>
#include <vector>

namespace bubble {

/// Piecewise-linear function of local stage time on [0, duration].
class Profile {
 public:
  Profile() = default;
  Profile(std::vector<double> t, std::vector<double> v);
  static Profile constant(double duration, double value);
  static Profile linear(double duration, double from, double to);

  double operator()(double t) const;
  double front() const { return v_.front(); }
  double back() const { return v_.back(); }
  double duration() const { return t_.back(); }
  const std::vector<double>& knots() const { return t_; }
  const std::vector<double>& values() const { return v_; }

  /// Same shape stretched to a new duration.
  Profile rescaled(double duration) const;
  /// Profile restricted to [0, t_end].
  Profile truncated(double t_end) const;

 private:
  std::vector<double> t_{0.0};
  std::vector<double> v_{0.0};
};

enum class StageKind { GRampUp, HRamp, GRampDown, Hold, Quench };

std::string to_string(StageKind k);

struct Stage {
  StageKind kind = StageKind::Hold;
  Profile g;
  Profile h;
  std::string shape = "linear";  // linear | optimized | constant

  double duration() const { return g.duration(); }
};

Stage linear_stage(StageKind kind, double duration, double g0, double g1, double h0, double h1);
Stage hold_stage(double duration, double g, double h);
/// Sudden jump to (g, h) followed by evolution at fixed fields for `duration`.
Stage quench_stage(double duration, double g, double h);

/// Ordered stages on a global time axis starting at t = 0. Fields are
/// continuous across stage boundaries except into a Quench stage.
class Schedule {
 public:
  Schedule() = default;

  Schedule& append(Stage stage);
  const std::vector<Stage>& stages() const { return stages_; }

  double duration() const;
  /// Total duration of the h-ramp stages.
  double tau_h() const;
  double g(double t) const;
  double h(double t) const;
  std::pair<double, double> fields(double t) const { return {g(t), h(t)}; }

  /// Stage boundaries and profile knots, ascending, including 0 and the end.
  std::vector<double> breakpoints() const;
  /// Schedule cut at global time t_end.
  Schedule truncated(double t_end) const;

 private:
  // stage index and local time; boundaries belong to the later stage
  std::pair<std::size_t, double> locate(double t) const;
  std::vector<Stage> stages_;
  std::vector<double> starts_;
};

/// Uniform sample grid with n points on [0, t_end] (n >= 2).
std::vector<double> uniform_times(double t_end, int n);

}  // namespace bubble

#endif  // BUBBLE_SCHEDULE_HPP
