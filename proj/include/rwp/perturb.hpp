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
#ifndef RWP_PERTURB_HPP_
#define RWP_PERTURB_HPP_

#include <cstddef>
#include <cstdint>

#include "rwp/model.hpp"
#include "rwp/param_vector.hpp"
#include "rwp/rng.hpp"

namespace rwp {

// Filter-wise Gaussian noise magnitude. `seed` initializes the noise stream
// used by training; the sampling functions below take the stream explicitly.
struct RwpNoiseSpec {
  double gamma = 0.01;
  std::uint64_t seed = 0;
};

// Radius of the SAM ascent ball.
struct SamSpec {
  double rho = 0.05;
};

// Gradients with norm at or below this do not define an ascent direction.
inline constexpr double kDegenerateGradientTol = 1e-12;

// For every filter k, each weight entry gets i.i.d. N(0, s^2) noise with
// standard deviation s = gamma * ||w_k||. Non-filter entries are exactly 0.
// Advances `rng` by a fixed number of draws per filter weight.
ParamVector sample_rwp_noise(const ParamVector& params, const FilterPartition& partition,
                             const RwpNoiseSpec& spec, Rng& rng);

// rho * grad / ||grad||. Throws DegenerateGradientError when
// ||grad|| <= kDegenerateGradientTol.
ParamVector sam_perturbation(const ParamVector& grad, const SamSpec& spec);

// Mean of ||noise|| over `n_samples` draws of sample_rwp_noise.
double measured_radius(const ParamVector& params, const FilterPartition& partition,
                       const RwpNoiseSpec& spec, std::size_t n_samples, Rng& rng);

}  // namespace rwp

#endif  // RWP_PERTURB_HPP_
