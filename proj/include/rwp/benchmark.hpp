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
#ifndef RWP_BENCHMARK_HPP_
#define RWP_BENCHMARK_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rwp/data.hpp"
#include "rwp/executor.hpp"
#include "rwp/model.hpp"
#include "rwp/optimizers.hpp"

namespace rwp {

// Median step times of one rule. For rules without independent gradients
// (SGD, SAM) both fields hold the sequential time and speedup is 1.
struct TimingReport {
  std::int64_t sequential_ns = 0;
  std::int64_t parallel_ns = 0;
  double speedup = 1.0;  // sequential_ns / parallel_ns
  std::size_t iterations = 0;
};

struct RuleTiming {
  std::string rule;
  bool parallelizable = false;
  TimingReport report;
};

struct BenchOptions {
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  std::size_t warmup = 3;
};

// Times `iterations` steps of each rule (after `warmup` discarded ones) on
// identical batches and reports medians. RWP-family rules are timed once with
// a sequential executor and once with `plan`.
std::vector<RuleTiming> benchmark_step_time(const Model& model, const Dataset& dataset,
                                            const std::vector<UpdateRule>& rules,
                                            std::size_t iterations, const ExecPlan& plan,
                                            const BenchOptions& options = {});

std::int64_t median_ns(std::vector<std::int64_t> samples);

}  // namespace rwp

#endif  // RWP_BENCHMARK_HPP_
