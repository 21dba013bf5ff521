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
#ifndef RWP_PROBES_HPP_
#define RWP_PROBES_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "rwp/data.hpp"
#include "rwp/model.hpp"
#include "rwp/param_vector.hpp"

namespace rwp {

struct SlicePlan {
  double t_min = -1.0;
  double t_max = 1.0;
  std::size_t n_points = 51;
  std::uint64_t direction_seed = 0;
};

struct SliceResult {
  std::vector<double> ts;
  std::vector<double> losses;
  std::vector<double> accuracies;
};

// Gaussian direction on the filter weights, rescaled per filter so that
// ||d_k|| = ||w_k||. Non-filter entries and zero-norm filters get 0.
ParamVector filter_normalized_direction(const ParamVector& params,
                                        const FilterPartition& partition, std::uint64_t seed);

// Abscissae t_i = t_min + (t_max - t_min) * i / (n - 1).
std::vector<double> slice_abscissae(const SlicePlan& plan);

// Loss and accuracy at params + t * d over the plan's grid, using a direction
// drawn from plan.direction_seed. Overflow shows up as +inf loss.
SliceResult landscape_slice(const Model& model, const ParamVector& params,
                            const Dataset& dataset, const SlicePlan& plan);

// Same, along an explicit direction and with a caller-supplied evaluator.
SliceResult landscape_slice(const ParamVector& params, const ParamVector& direction,
                            const SlicePlan& plan,
                            const std::function<Evaluation(const ParamVector&)>& eval);

// Width of the connected run of t around t = 0 where
// loss(t) <= loss(0) + threshold. Crossings are located by linear
// interpolation between grid points; a run reaching the end of the grid is
// cut there.
double flat_width(const SliceResult& slice, double threshold = 1.0);

struct FilterNormStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  double cv = 0.0;      // stddev / mean, 0 when mean is 0
  double mean_square = 0.0;
  double bin_hi = 0.0;  // bins span [0, bin_hi]
  std::vector<std::size_t> histogram;
};

inline constexpr std::size_t kFilterNormBins = 30;

FilterNormStats filter_norm_stats(const std::vector<double>& norms);
FilterNormStats filter_norm_stats(const ParamVector& params, const FilterPartition& partition);

struct RadiusSweep {
  std::vector<std::pair<double, double>> points;  // (gamma, measured radius)
  double weight_norm = 0.0;
};

// Measured RWP radius per gamma; gamma i samples from its own stream
// derived from (seed, i).
RadiusSweep radius_sweep(const ParamVector& params, const FilterPartition& partition,
                         const std::vector<double>& gammas, std::size_t n_samples,
                         std::uint64_t seed);

}  // namespace rwp

#endif  // RWP_PROBES_HPP_
