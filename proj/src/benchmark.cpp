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
#include "rwp/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <optional>
#include <variant>

#include "rwp/error.hpp"

namespace rwp {
namespace {

bool is_rwp_family(const UpdateRule& rule) {
  return std::holds_alternative<RwpRule>(rule) || std::holds_alternative<RwpPureRule>(rule);
}

struct BatchPair {
  Batch first;
  Batch second;
};

// One timed configuration: a rule on an executor with its own optimizer state.
struct Lane {
  const UpdateRule* rule;
  Executor* executor;
  ParamVector params;
  OptState state;
  Rng noise_rng;
  std::vector<std::int64_t> samples;
};

}  // namespace

std::int64_t median_ns(std::vector<std::int64_t> samples) {
  if (samples.empty()) return 0;
  const std::size_t mid = samples.size() / 2;
  std::nth_element(samples.begin(), samples.begin() + mid, samples.end());
  if (samples.size() % 2 == 1) return samples[mid];
  const std::int64_t hi = samples[mid];
  const std::int64_t lo = *std::max_element(samples.begin(), samples.begin() + mid);
  return lo + (hi - lo) / 2;
}

std::vector<RuleTiming> benchmark_step_time(const Model& model, const Dataset& dataset,
                                            const std::vector<UpdateRule>& rules,
                                            std::size_t iterations, const ExecPlan& plan,
                                            const BenchOptions& options) {
  if (iterations < 10) throw ConfigError("benchmark needs at least 10 iterations");
  validate(dataset);
  const std::size_t total = iterations + options.warmup;
  const std::size_t batch_size = std::min(options.batch_size, dataset.size());

  // Materialize every batch up front so only the step itself is timed.
  std::vector<BatchPair> batches;
  BatchStream first(dataset.size(), batch_size, options.seed);
  BatchStream second(dataset.size(), batch_size, Rng::derive(options.seed, 1));
  std::vector<std::vector<std::size_t>> order_1, order_2;
  std::size_t cursor = 0;
  while (batches.size() < total) {
    if (cursor == order_1.size()) {
      order_1 = first.next_epoch();
      order_2 = second.next_epoch();
      cursor = 0;
    }
    // Full batches only, so every timed step does the same amount of work.
    if (order_1[cursor].size() == batch_size) {
      batches.push_back({dataset.gather(order_1[cursor]), dataset.gather(order_2[cursor])});
    }
    ++cursor;
  }

  Executor sequential(ExecPlan::sequential());
  std::optional<Executor> parallel;
  if (plan.mode == ExecMode::kParallel) parallel.emplace(plan);

  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = batch_size;
  cfg.lr0 = 0.01;
  cfg.seed_noise = Rng::derive(options.seed, 2);
  const ParamVector init = init_uniform(model, options.seed);

  std::vector<RuleTiming> out;
  std::vector<Lane> lanes;
  std::vector<std::pair<std::size_t, bool>> lane_of;  // (row, parallel)
  for (const UpdateRule& rule : rules) {
    validate(rule);
    RuleTiming row;
    row.rule = rule_name(rule);
    row.parallelizable = is_rwp_family(rule);
    row.report.iterations = iterations;
    out.push_back(row);
    lanes.push_back({&rule, &sequential, init, OptState::fresh(init.size(), total),
                     Rng(cfg.seed_noise), {}});
    lane_of.emplace_back(out.size() - 1, false);
    if (row.parallelizable && parallel) {
      lanes.push_back({&rule, &*parallel, init, OptState::fresh(init.size(), total),
                       Rng(cfg.seed_noise), {}});
      lane_of.emplace_back(out.size() - 1, true);
    }
  }

  // Lanes are interleaved step by step so drift in machine load is shared.
  for (std::size_t i = 0; i < total; ++i) {
    for (Lane& lane : lanes) {
      const auto start = std::chrono::steady_clock::now();
      apply_rule_step(model, *lane.rule, lane.params, batches[i].first, batches[i].second,
                      lane.state, cfg, *lane.executor, lane.noise_rng);
      const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
      if (i >= options.warmup) lane.samples.push_back(ns);
    }
  }

  for (std::size_t l = 0; l < lanes.size(); ++l) {
    TimingReport& report = out[lane_of[l].first].report;
    const std::int64_t median = median_ns(std::move(lanes[l].samples));
    if (lane_of[l].second) {
      report.parallel_ns = median;
    } else {
      report.sequential_ns = median;
      report.parallel_ns = median;
    }
  }
  for (RuleTiming& row : out) {
    row.report.speedup = row.report.parallel_ns > 0
                             ? static_cast<double>(row.report.sequential_ns) /
                                   static_cast<double>(row.report.parallel_ns)
                             : 1.0;
  }
  return out;
}

}  // namespace rwp
