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
#include "rwp/perturb.hpp"

#include <string>

#include "rwp/error.hpp"

namespace rwp {

ParamVector sample_rwp_noise(const ParamVector& params, const FilterPartition& partition,
                             const RwpNoiseSpec& spec, Rng& rng) {
  if (spec.gamma < 0.0) throw ConfigError("gamma must be nonnegative");
  if (params.size() != partition.param_count) {
    throw ConfigError("partition does not match parameter vector");
  }
  ParamVector noise(params.size(), 0.0);
  const std::vector<double> norms = filter_norms(params, partition);
  for (std::size_t k = 0; k < partition.filter_count(); ++k) {
    const double stddev = spec.gamma * norms[k];
    // Draw even when stddev is 0 so the stream position depends only on the
    // partition layout.
    for (std::size_t i = partition.filters[k].begin; i < partition.filters[k].end; ++i) {
      noise[i] = stddev * rng.normal();
    }
  }
  return noise;
}

ParamVector sam_perturbation(const ParamVector& grad, const SamSpec& spec) {
  if (!(spec.rho > 0.0)) throw ConfigError("rho must be positive");
  const double norm = l2_norm(grad);
  if (!(norm > kDegenerateGradientTol)) {
    throw DegenerateGradientError("gradient norm " + std::to_string(norm) +
                                  " too small for a SAM perturbation");
  }
  const double scale = spec.rho / norm;
  ParamVector eps(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) eps[i] = scale * grad[i];
  return eps;
}

double measured_radius(const ParamVector& params, const FilterPartition& partition,
                       const RwpNoiseSpec& spec, std::size_t n_samples, Rng& rng) {
  if (n_samples == 0) throw ConfigError("n_samples must be positive");
  double sum = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    sum += l2_norm(sample_rwp_noise(params, partition, spec, rng));
  }
  return sum / static_cast<double>(n_samples);
}

}  // namespace rwp
