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
#include "rwp/probes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rwp/error.hpp"
#include "rwp/perturb.hpp"
#include "rwp/rng.hpp"

namespace rwp {
namespace {

double crossing(double t_out, double loss_out, double t_in, double loss_in, double level) {
  if (!std::isfinite(loss_out)) return t_in;
  const double frac = (level - loss_in) / (loss_out - loss_in);
  return t_in + frac * (t_out - t_in);
}

}  // namespace

ParamVector filter_normalized_direction(const ParamVector& params,
                                        const FilterPartition& partition, std::uint64_t seed) {
  if (params.size() != partition.param_count) {
    throw ConfigError("partition does not match parameter vector");
  }
  ParamVector d(params.size(), 0.0);
  Rng rng(seed);
  for (const IndexRange& r : partition.filters) {
    for (std::size_t i = r.begin; i < r.end; ++i) d[i] = rng.normal();
    const double w_norm = l2_norm(params.span().subspan(r.begin, r.size()));
    const double d_norm = l2_norm(d.span().subspan(r.begin, r.size()));
    const double scale = (w_norm > 0.0 && d_norm > 0.0) ? w_norm / d_norm : 0.0;
    for (std::size_t i = r.begin; i < r.end; ++i) d[i] *= scale;
  }
  return d;
}

std::vector<double> slice_abscissae(const SlicePlan& plan) {
  if (!(plan.t_min < plan.t_max)) throw ConfigError("slice needs t_min < t_max");
  if (plan.n_points < 2) throw ConfigError("slice needs at least 2 points");
  std::vector<double> ts(plan.n_points);
  const double span = plan.t_max - plan.t_min;
  const double last = static_cast<double>(plan.n_points - 1);
  for (std::size_t i = 0; i < plan.n_points; ++i) {
    ts[i] = plan.t_min + span * static_cast<double>(i) / last;
  }
  return ts;
}

SliceResult landscape_slice(const ParamVector& params, const ParamVector& direction,
                            const SlicePlan& plan,
                            const std::function<Evaluation(const ParamVector&)>& eval) {
  if (direction.size() != params.size()) throw ConfigError("direction size differs from params");
  SliceResult out;
  out.ts = slice_abscissae(plan);
  ParamVector point(params.size());
  for (double t : out.ts) {
    for (std::size_t i = 0; i < params.size(); ++i) point[i] = params[i] + t * direction[i];
    Evaluation e;
    try {
      e = eval(point);
    } catch (const NumericError&) {
      e = {std::numeric_limits<double>::infinity(), 0.0};
    }
    out.losses.push_back(std::isnan(e.loss) ? std::numeric_limits<double>::infinity() : e.loss);
    out.accuracies.push_back(e.accuracy);
  }
  return out;
}

SliceResult landscape_slice(const Model& model, const ParamVector& params,
                            const Dataset& dataset, const SlicePlan& plan) {
  const ParamVector d = filter_normalized_direction(params, model.partition(), plan.direction_seed);
  const Batch batch = dataset.as_batch();
  return landscape_slice(params, d, plan, [&](const ParamVector& p) {
    return evaluate(model, p, batch, NonFinite::kSaturate);
  });
}

double flat_width(const SliceResult& slice, double threshold) {
  const auto& ts = slice.ts;
  const auto& ls = slice.losses;
  if (ts.empty()) return 0.0;
  std::size_t center = 0;
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (std::abs(ts[i]) < std::abs(ts[center])) center = i;
  }
  const double level = ls[center] + threshold;
  std::size_t lo = center;
  while (lo > 0 && ls[lo - 1] <= level) --lo;
  std::size_t hi = center;
  while (hi + 1 < ts.size() && ls[hi + 1] <= level) ++hi;
  const double left = lo > 0 ? crossing(ts[lo - 1], ls[lo - 1], ts[lo], ls[lo], level) : ts[lo];
  const double right =
      hi + 1 < ts.size() ? crossing(ts[hi + 1], ls[hi + 1], ts[hi], ls[hi], level) : ts[hi];
  return right - left;
}

FilterNormStats filter_norm_stats(const std::vector<double>& norms) {
  FilterNormStats s;
  s.histogram.assign(kFilterNormBins, 0);
  if (norms.empty()) return s;
  const double n = static_cast<double>(norms.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  double max_norm = 0.0;
  for (double v : norms) {
    sum += v;
    sum_sq += v * v;
    max_norm = std::max(max_norm, v);
  }
  s.mean = sum / n;
  s.mean_square = sum_sq / n;
  double var = 0.0;
  for (double v : norms) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / n);
  s.cv = s.mean > 0.0 ? s.stddev / s.mean : 0.0;
  s.bin_hi = max_norm * 1.01;
  for (double v : norms) {
    std::size_t bin = 0;
    if (s.bin_hi > 0.0) {
      bin = static_cast<std::size_t>(v / s.bin_hi * static_cast<double>(kFilterNormBins));
      bin = std::min(bin, kFilterNormBins - 1);
    }
    ++s.histogram[bin];
  }
  return s;
}

FilterNormStats filter_norm_stats(const ParamVector& params, const FilterPartition& partition) {
  return filter_norm_stats(filter_norms(params, partition));
}

RadiusSweep radius_sweep(const ParamVector& params, const FilterPartition& partition,
                         const std::vector<double>& gammas, std::size_t n_samples,
                         std::uint64_t seed) {
  if (n_samples < 100) throw ConfigError("radius sweep needs at least 100 samples");
  RadiusSweep out;
  out.weight_norm = l2_norm(params);
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    Rng rng(Rng::derive(seed, i));
    const RwpNoiseSpec spec{gammas[i], seed};
    out.points.emplace_back(gammas[i], measured_radius(params, partition, spec, n_samples, rng));
  }
  return out;
}

}  // namespace rwp
