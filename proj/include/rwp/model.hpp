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
#ifndef RWP_MODEL_HPP_
#define RWP_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rwp/param_vector.hpp"

namespace rwp {

// Channels x height x width. Flat feature vectors use {dims, 1, 1}.
struct Shape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const { return channels * height * width; }
  bool is_image() const { return height > 1 || width > 1; }
  bool operator==(const Shape&) const = default;
};

// A set of labelled examples stored contiguously, example-major.
struct Batch {
  Shape shape;
  std::vector<double> inputs;
  std::vector<int> labels;
  // Positions of the examples in the dataset they were drawn from.
  std::vector<std::size_t> indices;

  std::size_t size() const { return labels.size(); }
  std::span<const double> example(std::size_t i) const {
    return std::span<const double>(inputs).subspan(i * shape.size(), shape.size());
  }
};

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const IndexRange&) const = default;
};

// Partition of the filter weights of a model. A filter is the weight group
// feeding one output feature map (conv) or one output neuron (dense); its
// shape is C_in x H x W, or {fan_in, 1, 1} for a dense neuron. Biases live in
// `non_filter` and are never perturbed.
struct FilterPartition {
  std::vector<IndexRange> filters;
  std::vector<Shape> filter_shapes;
  std::vector<IndexRange> non_filter;
  std::size_t param_count = 0;

  std::size_t filter_count() const { return filters.size(); }
};

enum class LayerKind { kDense, kConv2d, kRelu, kMaxPool2, kFlatten };

// Architecture-level description used to build a Model.
struct LayerSpec {
  LayerKind kind;
  std::size_t units = 0;   // dense outputs or conv output channels
  std::size_t kernel = 0;  // conv kernel size

  static LayerSpec dense(std::size_t units) { return {LayerKind::kDense, units, 0}; }
  static LayerSpec conv2d(std::size_t channels, std::size_t kernel) {
    return {LayerKind::kConv2d, channels, kernel};
  }
  static LayerSpec relu() { return {LayerKind::kRelu}; }
  static LayerSpec max_pool2() { return {LayerKind::kMaxPool2}; }
  static LayerSpec flatten() { return {LayerKind::kFlatten}; }
};

// A resolved layer: shapes and parameter offsets into the ParamVector.
struct Layer {
  LayerKind kind;
  Shape input;
  Shape output;
  std::size_t kernel = 0;
  std::size_t weight_offset = 0;
  std::size_t weight_count = 0;
  std::size_t bias_offset = 0;
  std::size_t bias_count = 0;
};

// Feed-forward network ending in a softmax cross-entropy head over
// `class_count` logits. Convolutions use valid padding and stride 1; max-pool
// is 2x2 with stride 2 (floor).
class Model {
 public:
  // Throws ConfigError if shapes do not chain or the last layer does not
  // produce exactly `class_count` values.
  Model(Shape input_shape, std::size_t class_count, std::vector<LayerSpec> specs);

  const Shape& input_shape() const { return input_shape_; }
  std::size_t class_count() const { return class_count_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const FilterPartition& partition() const { return partition_; }
  std::size_t param_count() const { return partition_.param_count; }

 private:
  Shape input_shape_;
  std::size_t class_count_;
  std::vector<Layer> layers_;
  FilterPartition partition_;
};

// Dense+ReLU hidden layers followed by a linear head of width class_count.
Model build_mlp(const std::vector<std::size_t>& layer_sizes, std::size_t input_dim,
                std::size_t class_count);

// conv -> relu -> 2x2 max-pool per entry of conv_channels, then flatten and a
// linear head.
Model build_cnn(const std::vector<std::size_t>& conv_channels, std::size_t kernel,
                Shape input_shape, std::size_t class_count);

// Filter weights ~ U(-sqrt(t), sqrt(t)) with t = 1 / (C_in * H * W); biases 0.
ParamVector init_uniform(const Model& model, std::uint64_t seed);

struct LossAndGrad {
  double loss = 0.0;
  ParamVector grad;
};

// Mean softmax cross-entropy and its exact gradient. Examples are reduced in
// index order, so the result is a pure function of its inputs, bit for bit.
// Throws ConfigError on shape mismatch and NumericError (carrying the layer
// index) if an activation becomes non-finite.
LossAndGrad loss_and_grad(const Model& model, const ParamVector& params,
                          const Batch& batch);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

enum class NonFinite { kThrow, kSaturate };

// Forward-only loss and accuracy. With NonFinite::kSaturate an overflowing
// example contributes +inf loss and counts as misclassified.
Evaluation evaluate(const Model& model, const ParamVector& params, const Batch& batch,
                    NonFinite policy = NonFinite::kThrow);

// Euclidean norm of each filter, in partition order.
std::vector<double> filter_norms(const ParamVector& params, const FilterPartition& partition);

// ReLU on/off flags and max-pool winners for every example. Two parameter
// vectors with equal patterns lie in the same smooth piece of the loss.
std::vector<std::uint32_t> activation_pattern(const Model& model, const ParamVector& params,
                                              const Batch& batch);

}  // namespace rwp

#endif  // RWP_MODEL_HPP_
