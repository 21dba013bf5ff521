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
#include "rwp/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>

#include "rwp/checkpoint.hpp"
#include "rwp/error.hpp"

namespace rwp {
namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr char kDatasetMagic[4] = {'R', 'W', 'P', 'D'};

constexpr std::array<double, 5> kGaussianSigma = {0.04, 0.08, 0.12, 0.16, 0.20};
constexpr std::array<double, 5> kImpulseRate = {0.01, 0.02, 0.04, 0.08, 0.16};
constexpr std::array<int, 5> kBlurPasses = {1, 2, 3, 4, 5};
constexpr std::array<double, 5> kContrastFactor = {0.8, 0.65, 0.5, 0.35, 0.2};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& bytes, std::size_t off,
                   const std::filesystem::path& path) {
  if (bytes.size() < off + 4) throw IngestionError("truncated IDX header in " + path.string());
  return (std::uint32_t{bytes[off]} << 24) | (std::uint32_t{bytes[off + 1]} << 16) |
         (std::uint32_t{bytes[off + 2]} << 8) | std::uint32_t{bytes[off + 3]};
}

std::string hex32(std::uint32_t v) {
  char buf[11];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

void box_blur_pass(std::vector<double>& img, const Shape& s) {
  std::vector<double> src(img);
  const auto clamp_idx = [](std::ptrdiff_t v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, static_cast<std::ptrdiff_t>(n) - 1));
  };
  for (std::size_t c = 0; c < s.channels; ++c) {
    const double* plane = src.data() + c * s.height * s.width;
    for (std::size_t y = 0; y < s.height; ++y) {
      for (std::size_t x = 0; x < s.width; ++x) {
        double sum = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const std::size_t yy = clamp_idx(static_cast<std::ptrdiff_t>(y) + dy, s.height);
            const std::size_t xx = clamp_idx(static_cast<std::ptrdiff_t>(x) + dx, s.width);
            sum += plane[yy * s.width + xx];
          }
        }
        img[(c * s.height + y) * s.width + x] = sum / 9.0;
      }
    }
  }
}

}  // namespace

Batch Dataset::gather(std::span<const std::size_t> indices) const {
  Batch batch;
  batch.shape = shape;
  const std::size_t d = shape.size();
  batch.inputs.reserve(indices.size() * d);
  batch.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    batch.inputs.insert(batch.inputs.end(), inputs.begin() + i * d, inputs.begin() + (i + 1) * d);
    batch.labels.push_back(labels[i]);
  }
  batch.indices.assign(indices.begin(), indices.end());
  return batch;
}

Batch Dataset::as_batch() const {
  Batch batch{shape, inputs, labels, std::vector<std::size_t>(size())};
  std::iota(batch.indices.begin(), batch.indices.end(), 0);
  return batch;
}

void validate(const Dataset& dataset) {
  if (dataset.size() == 0) throw ConfigError("dataset is empty");
  if (dataset.shape.size() == 0) throw ConfigError("dataset shape has a zero dimension");
  if (dataset.inputs.size() != dataset.size() * dataset.shape.size()) {
    throw ConfigError("dataset inputs do not match shape and label count");
  }
  for (int y : dataset.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= dataset.class_count) {
      throw ConfigError("dataset label " + std::to_string(y) + " out of range");
    }
  }
}

Dataset make_blobs(std::size_t class_count, std::size_t dims, std::size_t n_per_class,
                   double spread, std::uint64_t seed, Split split) {
  if (class_count == 0 || dims == 0 || n_per_class == 0) {
    throw ConfigError("blobs: class_count, dims and n_per_class must be positive");
  }
  if (class_count > dims) throw ConfigError("blobs: class_count must not exceed dims");
  if (spread < 0.0) throw ConfigError("blobs: spread must be nonnegative");
  Dataset ds;
  ds.shape = {dims, 1, 1};
  ds.class_count = class_count;
  ds.split = split;
  Rng rng(seed);
  for (std::size_t c = 0; c < class_count; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      for (std::size_t j = 0; j < dims; ++j) {
        const double center = j == c ? 4.0 : 0.0;
        ds.inputs.push_back(center + spread * rng.normal());
      }
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

Dataset make_spirals(std::size_t n_per_class, double noise, std::uint64_t seed, Split split) {
  if (n_per_class < 2) throw ConfigError("spirals: n_per_class must be at least 2");
  if (noise < 0.0) throw ConfigError("spirals: noise must be nonnegative");
  Dataset ds;
  ds.shape = {2, 1, 1};
  ds.class_count = 2;
  ds.split = split;
  Rng rng(seed);
  for (int arm = 0; arm < 2; ++arm) {
    std::vector<double> ts(n_per_class);
    for (double& t : ts) t = rng.uniform();
    std::sort(ts.begin(), ts.end());
    for (double t : ts) {
      const double r = 0.2 + 0.8 * t;
      const double theta = 3.0 * std::numbers::pi * t + arm * std::numbers::pi + noise * rng.normal();
      ds.inputs.push_back(r * std::cos(theta));
      ds.inputs.push_back(r * std::sin(theta));
      ds.labels.push_back(arm);
    }
  }
  return ds;
}

Dataset make_shapes(std::size_t n_per_class, std::size_t size, double noise, std::uint64_t seed,
                    Split split) {
  if (n_per_class == 0) throw ConfigError("shapes: n_per_class must be positive");
  if (size < 6) throw ConfigError("shapes: image size must be at least 6");
  if (noise < 0.0) throw ConfigError("shapes: noise must be nonnegative");
  Dataset ds;
  ds.shape = {1, size, size};
  ds.class_count = 4;
  ds.split = split;
  Rng rng(seed);
  std::vector<double> img(size * size);
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t n = 0; n < n_per_class; ++n) {
      for (double& v : img) v = 0.2;
      const std::size_t offset = 1 + static_cast<std::size_t>(rng.below(size - 3));
      const auto s = static_cast<std::ptrdiff_t>(size);
      const auto shift = static_cast<std::ptrdiff_t>(rng.below(5)) - 2;
      for (std::ptrdiff_t a = 0; a < s; ++a) {
        for (std::ptrdiff_t t = 0; t < 2; ++t) {
          std::ptrdiff_t y = 0;
          std::ptrdiff_t x = 0;
          switch (c) {
            case 0: y = static_cast<std::ptrdiff_t>(offset) + t; x = a; break;
            case 1: y = a; x = static_cast<std::ptrdiff_t>(offset) + t; break;
            case 2: y = a; x = a + shift + t; break;
            default: y = a; x = s - 1 - a + shift + t; break;
          }
          if (x >= 0 && x < s && y >= 0 && y < s) img[static_cast<std::size_t>(y * s + x)] = 0.8;
        }
      }
      for (double v : img) ds.inputs.push_back(clamp01(v + noise * rng.normal()));
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, Split split) {
  const std::vector<unsigned char> img = read_file(images_path);
  const std::vector<unsigned char> lab = read_file(labels_path);

  const std::uint32_t img_magic = be32(img, 0, images_path);
  if (img_magic != kIdxImagesMagic) {
    throw IngestionError("bad magic " + hex32(img_magic) + " in images file " +
                         images_path.string() + " (expected 0x00000803)");
  }
  const std::uint32_t lab_magic = be32(lab, 0, labels_path);
  if (lab_magic != kIdxLabelsMagic) {
    throw IngestionError("bad magic " + hex32(lab_magic) + " in labels file " +
                         labels_path.string() + " (expected 0x00000801)");
  }
  const std::size_t count = be32(img, 4, images_path);
  const std::size_t rows = be32(img, 8, images_path);
  const std::size_t cols = be32(img, 12, images_path);
  const std::size_t label_count = be32(lab, 4, labels_path);
  if (count != label_count) {
    throw IngestionError("count mismatch: " + std::to_string(count) + " images vs " +
                         std::to_string(label_count) + " labels");
  }
  if (count == 0 || rows == 0 || cols == 0) throw IngestionError("IDX file has a zero dimension");
  const std::size_t pixels = count * rows * cols;
  if (img.size() < 16 + pixels) throw IngestionError("truncated images file " + images_path.string());
  if (lab.size() < 8 + count) throw IngestionError("truncated labels file " + labels_path.string());

  Dataset ds;
  ds.shape = {1, rows, cols};
  ds.split = split;
  ds.inputs.resize(pixels);
  for (std::size_t i = 0; i < pixels; ++i) ds.inputs[i] = img[16 + i] / 255.0;
  ds.labels.resize(count);
  int max_label = 0;
  for (std::size_t i = 0; i < count; ++i) {
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.class_count = static_cast<std::size_t>(max_label) + 1;
  return ds;
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestionError("cannot open dataset for writing: " + path.string());
  out.write(kDatasetMagic, 4);
  write_u64_le(out, dataset.size());
  write_u64_le(out, dataset.shape.channels);
  write_u64_le(out, dataset.shape.height);
  write_u64_le(out, dataset.shape.width);
  write_u64_le(out, dataset.class_count);
  write_u64_le(out, dataset.split == Split::kTrain ? 0 : 1);
  for (int y : dataset.labels) write_u64_le(out, static_cast<std::uint64_t>(y));
  for (double v : dataset.inputs) write_f64_le(out, v);
  if (!out) throw IngestionError("failed writing dataset: " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open dataset: " + path.string());
  char magic[4];
  if (!in.read(magic, 4)) throw IngestionError("truncated dataset header");
  if (!std::equal(magic, magic + 4, kDatasetMagic)) {
    throw IngestionError("bad magic in dataset " + path.string());
  }
  Dataset ds;
  const std::uint64_t n = read_u64_le(in, "dataset header");
  ds.shape.channels = read_u64_le(in, "dataset header");
  ds.shape.height = read_u64_le(in, "dataset header");
  ds.shape.width = read_u64_le(in, "dataset header");
  ds.class_count = read_u64_le(in, "dataset header");
  ds.split = read_u64_le(in, "dataset header") == 0 ? Split::kTrain : Split::kTest;
  const auto body_start = in.tellg();
  in.seekg(0, std::ios::end);
  const auto remaining = static_cast<std::uint64_t>(in.tellg() - body_start);
  in.seekg(body_start);
  const std::uint64_t d = ds.shape.size();
  if (d == 0 || remaining / 8 < n * (1 + d)) throw IngestionError("truncated dataset " + path.string());
  ds.labels.resize(n);
  for (auto& y : ds.labels) y = static_cast<int>(read_u64_le(in, "dataset labels"));
  ds.inputs.resize(n * d);
  for (auto& v : ds.inputs) v = read_f64_le(in, "dataset inputs");
  validate(ds);
  return ds;
}

std::string_view corruption_name(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::kGaussianNoise: return "gaussian_noise";
    case CorruptionKind::kImpulseNoise: return "impulse_noise";
    case CorruptionKind::kBlur3x3: return "blur3x3";
    case CorruptionKind::kContrast: return "contrast";
  }
  return "unknown";
}

Dataset corrupt(const Dataset& dataset, const CorruptionSpec& spec, std::uint64_t seed) {
  if (spec.severity < 1 || spec.severity > 5) throw ConfigError("severity must be in 1..5");
  if (dataset.split != Split::kTest) throw ConfigError("corruptions apply to test splits only");
  const bool image_only =
      spec.kind == CorruptionKind::kBlur3x3 || spec.kind == CorruptionKind::kContrast;
  if (image_only && !dataset.shape.is_image()) {
    throw ConfigError(std::string(corruption_name(spec.kind)) + " needs image-shaped data");
  }
  const std::size_t level = static_cast<std::size_t>(spec.severity - 1);
  Dataset out = dataset;
  Rng rng(seed);
  switch (spec.kind) {
    case CorruptionKind::kGaussianNoise:
      for (double& v : out.inputs) v = clamp01(v + kGaussianSigma[level] * rng.normal());
      break;
    case CorruptionKind::kImpulseNoise:
      for (double& v : out.inputs) {
        const bool hit = rng.uniform() < kImpulseRate[level];
        const double salt = rng.uniform() < 0.5 ? 0.0 : 1.0;
        v = hit ? salt : clamp01(v);
      }
      break;
    case CorruptionKind::kBlur3x3: {
      const std::size_t d = dataset.shape.size();
      std::vector<double> img(d);
      for (std::size_t i = 0; i < out.size(); ++i) {
        std::copy_n(out.inputs.begin() + i * d, d, img.begin());
        for (int p = 0; p < kBlurPasses[level]; ++p) box_blur_pass(img, dataset.shape);
        for (std::size_t j = 0; j < d; ++j) out.inputs[i * d + j] = clamp01(img[j]);
      }
      break;
    }
    case CorruptionKind::kContrast:
      for (double& v : out.inputs) v = clamp01(0.5 + kContrastFactor[level] * (v - 0.5));
      break;
  }
  return out;
}

BatchStream::BatchStream(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed)
    : n_(dataset_size), batch_size_(batch_size), rng_(seed), order_(dataset_size) {
  if (dataset_size == 0) throw ConfigError("cannot batch an empty dataset");
  if (batch_size == 0 || batch_size > dataset_size) {
    throw ConfigError("batch_size must be in [1, dataset size]");
  }
}

std::size_t BatchStream::batches_per_epoch() const { return (n_ + batch_size_ - 1) / batch_size_; }

std::vector<std::vector<std::size_t>> BatchStream::next_epoch() {
  std::iota(order_.begin(), order_.end(), 0);
  for (std::size_t i = n_; i > 1; --i) {
    std::swap(order_[i - 1], order_[rng_.below(i)]);
  }
  std::vector<std::vector<std::size_t>> batches;
  batches.reserve(batches_per_epoch());
  for (std::size_t start = 0; start < n_; start += batch_size_) {
    const std::size_t end = std::min(n_, start + batch_size_);
    batches.emplace_back(order_.begin() + start, order_.begin() + end);
  }
  return batches;
}

}  // namespace rwp
