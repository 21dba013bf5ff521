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
#ifndef RWP_COMMANDS_HPP_
#define RWP_COMMANDS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rwp/benchmark.hpp"
#include "rwp/config.hpp"
#include "rwp/data.hpp"
#include "rwp/model.hpp"
#include "rwp/optimizers.hpp"
#include "rwp/probes.hpp"

namespace rwp {

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::filesystem::path> checkpoint;
  std::size_t iterations = 20;
  std::string probe;
  std::optional<std::uint64_t> seed_override;
};

// Each command returns a process exit code: 0 iff every requested artifact
// was written. Errors are reported on `log`.
int cmd_train(const CommandOptions& opts, std::ostream& log);
int cmd_probe(const CommandOptions& opts, std::ostream& log);
int cmd_bench(const CommandOptions& opts, std::ostream& log);
int cmd_corrupt_eval(const CommandOptions& opts, std::ostream& log);

struct CorruptionRow {
  std::string kind;
  int severity = 0;
  double accuracy = 0.0;
  double clean_accuracy = 0.0;
  bool skipped = false;
};

// Accuracy under every corruption kind and severity 1..5, each averaged over
// `repeats` corruption seeds, followed by one summary row holding the
// severity-5 mean across evaluated kinds. Kinds that need images are emitted
// as skipped rows for flat datasets.
std::vector<CorruptionRow> corruption_eval(const Model& model, const ParamVector& params,
                                           const Dataset& test_set, std::uint64_t seed,
                                           std::size_t repeats);

// CSV writers. All files have a header row and use '.' decimals.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& rows);
void write_slice_csv(const std::filesystem::path& path, const SliceResult& slice);
void write_filternorms_csv(const std::filesystem::path& path, const std::vector<double>& norms,
                           const FilterNormStats& stats);
void write_radius_csv(const std::filesystem::path& path, const RadiusSweep& sweep);
void write_bench_csv(const std::filesystem::path& path, const std::vector<RuleTiming>& rows);
void write_corrupt_csv(const std::filesystem::path& path, const std::vector<CorruptionRow>& rows);

}  // namespace rwp

#endif  // RWP_COMMANDS_HPP_
