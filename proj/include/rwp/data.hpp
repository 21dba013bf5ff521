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
#ifndef RWP_DATA_HPP_
#define RWP_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "rwp/model.hpp"
#include "rwp/rng.hpp"

namespace rwp {

enum class Split { kTrain, kTest };

// Immutable labelled examples, example-major.
struct Dataset {
  Shape shape;
  std::size_t class_count = 0;
  std::vector<double> inputs;
  std::vector<int> labels;
  Split split = Split::kTrain;

  std::size_t size() const { return labels.size(); }

  Batch gather(std::span<const std::size_t> indices) const;
  Batch as_batch() const;

  bool operator==(const Dataset&) const = default;
};

// Throws ConfigError if the dataset is empty or inconsistent.
void validate(const Dataset& dataset);

// Gaussian blobs; class c is centred at 4 * e_c (requires class_count <= dims).
Dataset make_blobs(std::size_t class_count, std::size_t dims, std::size_t n_per_class,
                   double spread, std::uint64_t seed, Split split = Split::kTrain);

// Two interleaved spiral arms in 2-D, 1.5 turns each. Points along an arm are
// ordered by radius; `noise` is the std of the angular jitter in radians.
Dataset make_spirals(std::size_t n_per_class, double noise, std::uint64_t seed,
                     Split split = Split::kTrain);

// Four classes of 1 x size x size images in [0,1]: horizontal bar, vertical
// bar, diagonal, anti-diagonal, at random offsets over a noisy background.
Dataset make_shapes(std::size_t n_per_class, std::size_t size, double noise,
                    std::uint64_t seed, Split split = Split::kTrain);

// IDX images (magic 0x00000803, u8 pixels) and labels (0x00000801, u8).
// Pixels are scaled to [0,1]. Throws IngestionError naming the problem.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, Split split = Split::kTest);

// Dataset container, little-endian:
//   "RWPD" | u64 n | u64 C | u64 H | u64 W | u64 class_count | u64 split |
//   n x u64 label | n*C*H*W x f64
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& path);

enum class CorruptionKind { kGaussianNoise, kImpulseNoise, kBlur3x3, kContrast };

inline constexpr CorruptionKind kAllCorruptions[] = {
    CorruptionKind::kGaussianNoise, CorruptionKind::kImpulseNoise, CorruptionKind::kBlur3x3,
    CorruptionKind::kContrast};

std::string_view corruption_name(CorruptionKind kind);

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::kGaussianNoise;
  int severity = 1;  // 1..5
};

// Applies one corruption to a test split; labels, shapes and count are kept
// and outputs are clamped to [0,1]. Severity tables:
//   gaussian_noise  sigma  0.04 0.08 0.12 0.16 0.20
//   impulse_noise   rate   1%   2%   4%   8%   16%  (pixel set to 0 or 1)
//   blur3x3         passes 1    2    3    4    5    (edge-replicated box)
//   contrast        factor 0.8  0.65 0.5  0.35 0.2  (around 0.5)
// Blur and contrast reject flat datasets with ConfigError.
Dataset corrupt(const Dataset& dataset, const CorruptionSpec& spec, std::uint64_t seed);

// Reshuffled pass over a dataset per epoch. The final partial batch is kept.
class BatchStream {
 public:
  BatchStream(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed);

  std::size_t batches_per_epoch() const;
  // Index lists for the next epoch, each example exactly once.
  std::vector<std::vector<std::size_t>> next_epoch();

 private:
  std::size_t n_;
  std::size_t batch_size_;
  Rng rng_;
  std::vector<std::size_t> order_;
};

}  // namespace rwp

#endif  // RWP_DATA_HPP_
