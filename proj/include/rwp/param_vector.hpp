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
#ifndef RWP_PARAM_VECTOR_HPP_
#define RWP_PARAM_VECTOR_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace rwp {

// Flat array of all trainable scalars of a Model.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t n, double value = 0.0) : values_(n, value) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  const std::vector<double>& values() const { return values_; }

  // Value equality (+0 == -0). Use bitwise_equal for reproducibility checks.
  bool operator==(const ParamVector&) const = default;

 private:
  std::vector<double> values_;
};

// Exact bit-pattern comparison.
bool bitwise_equal(const ParamVector& a, const ParamVector& b);

double l2_norm(std::span<const double> v);
inline double l2_norm(const ParamVector& v) { return l2_norm(v.span()); }

bool all_finite(std::span<const double> v);

// a + b.
ParamVector add(const ParamVector& a, const ParamVector& b);

// alpha * a + (1 - alpha) * b, element-wise. Entries where a and b are equal
// are copied through unchanged, so mixing a gradient with itself is exact.
ParamVector mix(const ParamVector& a, const ParamVector& b, double alpha);

}  // namespace rwp

#endif  // RWP_PARAM_VECTOR_HPP_
