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
#ifndef RWP_CONFIG_HPP_
#define RWP_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rwp/data.hpp"
#include "rwp/executor.hpp"
#include "rwp/model.hpp"
#include "rwp/optimizers.hpp"

namespace rwp {

struct ModelConfig {
  std::string type;  // "mlp" or "cnn"
  std::vector<std::size_t> hidden;
  std::vector<std::size_t> channels;
  std::size_t kernel = 3;
  bool operator==(const ModelConfig&) const = default;
};

struct DataConfig {
  std::string source;  // blobs, spirals, shapes, idx, rwpd
  std::size_t classes = 2;
  std::size_t dims = 2;
  std::size_t n_per_class = 0;
  std::size_t test_n_per_class = 0;  // 0: same as n_per_class
  double spread = 0.5;
  double noise = 0.2;
  std::size_t image_size = 12;
  std::uint64_t seed = 0;
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::string train_file;
  std::string test_file;
  bool operator==(const DataConfig&) const = default;
};

struct ProbeConfig {
  double slice_t_min = -1.0;
  double slice_t_max = 1.0;
  std::size_t slice_points = 51;
  std::uint64_t direction_seed = 0;
  std::vector<double> radius_gammas = {0.005, 0.01, 0.02, 0.03};
  std::size_t radius_samples = 1000;
  std::uint64_t radius_seed = 0;
  // Probes run on the final parameters by `train`.
  std::vector<std::string> after_train;
  bool operator==(const ProbeConfig&) const = default;
};

struct BenchConfig {
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  bool operator==(const BenchConfig&) const = default;
};

struct ExperimentConfig {
  ModelConfig model;
  DataConfig data;
  UpdateRule rule = SgdRule{};
  TrainConfig train;
  ExecPlan exec = ExecPlan::sequential();
  ProbeConfig probe;
  BenchConfig bench;
  std::uint64_t corrupt_seed = 0;
  std::size_t corrupt_repeats = 5;
  std::string output_dir = "out";

  bool operator==(const ExperimentConfig&) const = default;
};

// Parses the bracketed-section key = value format. Unknown sections or keys,
// duplicates, malformed values and missing required fields throw ConfigError
// naming "[section] key". Relative data paths stay as written.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Every field, defaults included, in a form parse_config reads back to an
// equal ExperimentConfig.
std::string resolved_config(const ExperimentConfig& cfg);

// Shortest round-trip decimal form, independent of the C locale.
std::string format_real(double v);

struct LoadedData {
  Dataset train;
  Dataset test;
};

// Builds the datasets. Relative IDX / RWPD paths are resolved against
// `base_dir`.
LoadedData load_data(const DataConfig& cfg, const std::filesystem::path& base_dir);

Model build_model(const ModelConfig& cfg, const Dataset& sample);

}  // namespace rwp

#endif  // RWP_CONFIG_HPP_
