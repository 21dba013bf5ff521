/* Copyright 2026 The RWP Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef RWP_ERROR_HPP_
#define RWP_ERROR_HPP_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace rwp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid dimensions, unknown keys, out-of-range hyperparameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed IDX / checkpoint / dataset files.
class IngestionError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced during evaluation or an update. `layer()` is set when
// the offending value was produced by a specific layer of a Model.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what,
                        std::optional<std::size_t> layer = std::nullopt)
      : Error(what), layer_(layer) {}

  std::optional<std::size_t> layer() const { return layer_; }

 private:
  std::optional<std::size_t> layer_;
};

// The gradient used to build a SAM perturbation has (near) zero norm.
class DegenerateGradientError : public Error {
 public:
  using Error::Error;
};

enum class EvalSide { kOriginal, kPerturbed };

// A failure inside one of the two gradient evaluations of a step.
class EvaluationError : public Error {
 public:
  EvaluationError(EvalSide side, const std::string& what)
      : Error(std::string(side == EvalSide::kOriginal ? "original" : "perturbed") +
              " gradient evaluation failed: " + what),
        side_(side) {}

  EvalSide side() const { return side_; }

 private:
  EvalSide side_;
};

}  // namespace rwp

#endif  // RWP_ERROR_HPP_
