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

#ifndef BUBBLE_ERRORS_HPP
#define BUBBLE_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace bubble {

/// Invalid input to an operation (bad spec, out-of-range parameter).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base class of all numerical failures; the CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergence : public NumericalError {
 public:
  NonConvergence(const std::string& what, std::vector<double> residuals = {})
      : NumericalError(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

class FitDegenerate : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StepUnderflow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class PositivityViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ResonanceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class OptimizerStall : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonPlanar : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoCrossing : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BasisMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Non-fatal warning channel shared by operations that can flag suspicious
/// but usable results.
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
  bool empty() const { return warnings.empty(); }
};

}  // namespace bubble

#endif  // BUBBLE_ERRORS_HPP
