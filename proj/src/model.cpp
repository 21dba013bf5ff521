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
#include "rwp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rwp/error.hpp"
#include "rwp/rng.hpp"

namespace rwp {
namespace {

std::string shape_str(const Shape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.width);
}

// Per-example scratch buffers, sized once per call.
struct Workspace {
  std::vector<std::vector<double>> acts;  // acts[l] is the input of layer l
  std::vector<std::vector<std::uint32_t>> argmax;
  std::vector<double> delta;
  std::vector<double> delta_in;

  explicit Workspace(const Model& model) {
    const auto& layers = model.layers();
    acts.resize(layers.size() + 1);
    argmax.resize(layers.size());
    acts[0].resize(model.input_shape().size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
      acts[l + 1].resize(layers[l].output.size());
      if (layers[l].kind == LayerKind::kMaxPool2) argmax[l].resize(layers[l].output.size());
    }
  }
};

void dense_forward(const Layer& layer, const double* p, std::span<const double> in,
                   std::span<double> out) {
  const std::size_t n_in = layer.input.size();
  const double* w = p + layer.weight_offset;
  const double* b = p + layer.bias_offset;
  for (std::size_t o = 0; o < out.size(); ++o) {
    const double* row = w + o * n_in;
    double s = b[o];
    for (std::size_t i = 0; i < n_in; ++i) s += row[i] * in[i];
    out[o] = s;
  }
}

void conv_forward(const Layer& layer, const double* p, std::span<const double> in,
                  std::span<double> out) {
  const Shape& is = layer.input;
  const Shape& os = layer.output;
  const std::size_t k = layer.kernel;
  const double* w = p + layer.weight_offset;
  const double* b = p + layer.bias_offset;
  for (std::size_t co = 0; co < os.channels; ++co) {
    const double* wf = w + co * is.channels * k * k;
    for (std::size_t y = 0; y < os.height; ++y) {
      for (std::size_t x = 0; x < os.width; ++x) {
        double s = b[co];
        for (std::size_t ci = 0; ci < is.channels; ++ci) {
          const double* wc = wf + ci * k * k;
          const double* ic = in.data() + ci * is.height * is.width;
          for (std::size_t ky = 0; ky < k; ++ky) {
            const double* irow = ic + (y + ky) * is.width + x;
            const double* wrow = wc + ky * k;
            for (std::size_t kx = 0; kx < k; ++kx) s += wrow[kx] * irow[kx];
          }
        }
        out[(co * os.height + y) * os.width + x] = s;
      }
    }
  }
}

void pool_forward(const Layer& layer, std::span<const double> in, std::span<double> out,
                  std::span<std::uint32_t> argmax) {
  const Shape& is = layer.input;
  const Shape& os = layer.output;
  for (std::size_t c = 0; c < os.channels; ++c) {
    for (std::size_t y = 0; y < os.height; ++y) {
      for (std::size_t x = 0; x < os.width; ++x) {
        std::size_t best = (c * is.height + 2 * y) * is.width + 2 * x;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (c * is.height + 2 * y + dy) * is.width + 2 * x + dx;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (c * os.height + y) * os.width + x;
        out[o] = in[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

// Runs all layers on acts[0]; returns nothing, leaves logits in acts.back().
void forward(const Model& model, const double* p, Workspace& ws) {
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    std::span<const double> in = ws.acts[l];
    std::span<double> out = ws.acts[l + 1];
    switch (layer.kind) {
      case LayerKind::kDense:
        dense_forward(layer, p, in, out);
        break;
      case LayerKind::kConv2d:
        conv_forward(layer, p, in, out);
        break;
      case LayerKind::kRelu:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
        break;
      case LayerKind::kMaxPool2:
        pool_forward(layer, in, out, ws.argmax[l]);
        break;
      case LayerKind::kFlatten:
        std::copy(in.begin(), in.end(), out.begin());
        break;
    }
    if (!all_finite(out)) {
      throw NumericError("non-finite activation in layer " + std::to_string(l), l);
    }
  }
}

// Log-sum-exp of the logits minus the label logit.
double cross_entropy(std::span<const double> logits, int label) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - m);
  return m + std::log(s) - logits[static_cast<std::size_t>(label)];
}

std::size_t argmax_of(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void backward(const Model& model, const double* p, Workspace& ws, int label, double* g) {
  const auto& layers = model.layers();
  std::span<const double> logits = ws.acts.back();
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - m);
  ws.delta.assign(logits.size(), 0.0);
  for (std::size_t c = 0; c < logits.size(); ++c) ws.delta[c] = std::exp(logits[c] - m) / s;
  ws.delta[static_cast<std::size_t>(label)] -= 1.0;

  for (std::size_t l = layers.size(); l-- > 0;) {
    const Layer& layer = layers[l];
    std::span<const double> in = ws.acts[l];
    std::span<const double> out = ws.acts[l + 1];
    const bool need_input_delta = l > 0;
    ws.delta_in.assign(need_input_delta ? layer.input.size() : 0, 0.0);
    switch (layer.kind) {
      case LayerKind::kDense: {
        const std::size_t n_in = layer.input.size();
        const double* w = p + layer.weight_offset;
        double* gw = g + layer.weight_offset;
        double* gb = g + layer.bias_offset;
        for (std::size_t o = 0; o < layer.output.size(); ++o) {
          const double d = ws.delta[o];
          gb[o] += d;
          double* grow = gw + o * n_in;
          for (std::size_t i = 0; i < n_in; ++i) grow[i] += d * in[i];
          if (need_input_delta) {
            const double* row = w + o * n_in;
            for (std::size_t i = 0; i < n_in; ++i) ws.delta_in[i] += row[i] * d;
          }
        }
        break;
      }
      case LayerKind::kConv2d: {
        const Shape& is = layer.input;
        const Shape& os = layer.output;
        const std::size_t k = layer.kernel;
        const double* w = p + layer.weight_offset;
        double* gw = g + layer.weight_offset;
        double* gb = g + layer.bias_offset;
        for (std::size_t co = 0; co < os.channels; ++co) {
          const std::size_t foff = co * is.channels * k * k;
          for (std::size_t y = 0; y < os.height; ++y) {
            for (std::size_t x = 0; x < os.width; ++x) {
              const double d = ws.delta[(co * os.height + y) * os.width + x];
              gb[co] += d;
              for (std::size_t ci = 0; ci < is.channels; ++ci) {
                for (std::size_t ky = 0; ky < k; ++ky) {
                  const std::size_t ioff = (ci * is.height + y + ky) * is.width + x;
                  const std::size_t woff = foff + (ci * k + ky) * k;
                  for (std::size_t kx = 0; kx < k; ++kx) {
                    gw[woff + kx] += d * in[ioff + kx];
                    if (need_input_delta) ws.delta_in[ioff + kx] += w[woff + kx] * d;
                  }
                }
              }
            }
          }
        }
        break;
      }
      case LayerKind::kRelu:
        for (std::size_t i = 0; i < ws.delta_in.size(); ++i) {
          ws.delta_in[i] = out[i] > 0.0 ? ws.delta[i] : 0.0;
        }
        break;
      case LayerKind::kMaxPool2:
        for (std::size_t o = 0; o < layer.output.size() && need_input_delta; ++o) {
          ws.delta_in[ws.argmax[l][o]] += ws.delta[o];
        }
        break;
      case LayerKind::kFlatten:
        if (need_input_delta) std::copy(ws.delta.begin(), ws.delta.end(), ws.delta_in.begin());
        break;
    }
    std::swap(ws.delta, ws.delta_in);
  }
}

void check_inputs(const Model& model, const ParamVector& params, const Batch& batch) {
  if (params.size() != model.param_count()) {
    throw ConfigError("parameter count " + std::to_string(params.size()) +
                      " does not match model (" + std::to_string(model.param_count()) + ")");
  }
  if (!(batch.shape == model.input_shape())) {
    throw ConfigError("batch shape " + shape_str(batch.shape) + " does not match model input " +
                      shape_str(model.input_shape()));
  }
  if (batch.size() == 0) throw ConfigError("empty batch");
  if (batch.inputs.size() != batch.size() * batch.shape.size()) {
    throw ConfigError("batch inputs do not match labels and shape");
  }
  for (int y : batch.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= model.class_count()) {
      throw ConfigError("label " + std::to_string(y) + " out of range");
    }
  }
}

void load_example(const Batch& batch, std::size_t i, Workspace& ws) {
  auto x = batch.example(i);
  std::copy(x.begin(), x.end(), ws.acts[0].begin());
}

}  // namespace

Model::Model(Shape input_shape, std::size_t class_count, std::vector<LayerSpec> specs)
    : input_shape_(input_shape), class_count_(class_count) {
  if (input_shape.size() == 0) throw ConfigError("input shape has a zero dimension");
  if (class_count == 0) throw ConfigError("class_count must be positive");
  if (specs.empty()) throw ConfigError("model has no layers");

  Shape cur = input_shape;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const LayerSpec& spec = specs[l];
    Layer layer{spec.kind, cur, cur};
    switch (spec.kind) {
      case LayerKind::kDense: {
        if (spec.units == 0) throw ConfigError("dense layer " + std::to_string(l) + " has zero units");
        layer.output = {spec.units, 1, 1};
        layer.weight_offset = offset;
        layer.weight_count = spec.units * cur.size();
        layer.bias_offset = offset + layer.weight_count;
        layer.bias_count = spec.units;
        for (std::size_t o = 0; o < spec.units; ++o) {
          const std::size_t b = offset + o * cur.size();
          partition_.filters.push_back({b, b + cur.size()});
          partition_.filter_shapes.push_back({cur.size(), 1, 1});
        }
        break;
      }
      case LayerKind::kConv2d: {
        if (spec.units == 0 || spec.kernel == 0) {
          throw ConfigError("conv layer " + std::to_string(l) + " has a zero dimension");
        }
        if (cur.height < spec.kernel || cur.width < spec.kernel) {
          throw ConfigError("conv layer " + std::to_string(l) + ": kernel " +
                            std::to_string(spec.kernel) + " exceeds input " + shape_str(cur));
        }
        layer.kernel = spec.kernel;
        layer.output = {spec.units, cur.height - spec.kernel + 1, cur.width - spec.kernel + 1};
        const std::size_t fan_in = cur.channels * spec.kernel * spec.kernel;
        layer.weight_offset = offset;
        layer.weight_count = spec.units * fan_in;
        layer.bias_offset = offset + layer.weight_count;
        layer.bias_count = spec.units;
        for (std::size_t co = 0; co < spec.units; ++co) {
          const std::size_t b = offset + co * fan_in;
          partition_.filters.push_back({b, b + fan_in});
          partition_.filter_shapes.push_back({cur.channels, spec.kernel, spec.kernel});
        }
        break;
      }
      case LayerKind::kRelu:
        break;
      case LayerKind::kMaxPool2:
        if (cur.height < 2 || cur.width < 2) {
          throw ConfigError("max-pool layer " + std::to_string(l) + " underflows input " +
                            shape_str(cur));
        }
        layer.output = {cur.channels, cur.height / 2, cur.width / 2};
        break;
      case LayerKind::kFlatten:
        layer.output = {cur.size(), 1, 1};
        break;
    }
    if (layer.bias_count > 0) {
      partition_.non_filter.push_back({layer.bias_offset, layer.bias_offset + layer.bias_count});
    }
    offset += layer.weight_count + layer.bias_count;
    cur = layer.output;
    layers_.push_back(layer);
  }
  if (cur.size() != class_count) {
    throw ConfigError("last layer produces " + std::to_string(cur.size()) + " values, expected " +
                      std::to_string(class_count));
  }
  partition_.param_count = offset;
}

Model build_mlp(const std::vector<std::size_t>& layer_sizes, std::size_t input_dim,
                std::size_t class_count) {
  if (layer_sizes.empty()) throw ConfigError("mlp needs at least one hidden layer");
  if (input_dim == 0) throw ConfigError("mlp input_dim must be positive");
  std::vector<LayerSpec> specs;
  for (std::size_t units : layer_sizes) {
    if (units == 0) throw ConfigError("mlp hidden layer sizes must be positive");
    specs.push_back(LayerSpec::dense(units));
    specs.push_back(LayerSpec::relu());
  }
  specs.push_back(LayerSpec::dense(class_count));
  return Model({input_dim, 1, 1}, class_count, std::move(specs));
}

Model build_cnn(const std::vector<std::size_t>& conv_channels, std::size_t kernel,
                Shape input_shape, std::size_t class_count) {
  if (conv_channels.empty()) throw ConfigError("cnn needs at least one conv block");
  std::vector<LayerSpec> specs;
  for (std::size_t ch : conv_channels) {
    specs.push_back(LayerSpec::conv2d(ch, kernel));
    specs.push_back(LayerSpec::relu());
    specs.push_back(LayerSpec::max_pool2());
  }
  specs.push_back(LayerSpec::flatten());
  specs.push_back(LayerSpec::dense(class_count));
  return Model(input_shape, class_count, std::move(specs));
}

ParamVector init_uniform(const Model& model, std::uint64_t seed) {
  const FilterPartition& part = model.partition();
  ParamVector params(model.param_count(), 0.0);
  Rng rng(seed);
  for (std::size_t k = 0; k < part.filter_count(); ++k) {
    const double bound = std::sqrt(1.0 / static_cast<double>(part.filter_shapes[k].size()));
    for (std::size_t i = part.filters[k].begin; i < part.filters[k].end; ++i) {
      params[i] = rng.uniform(-bound, bound);
    }
  }
  return params;
}

LossAndGrad loss_and_grad(const Model& model, const ParamVector& params, const Batch& batch) {
  check_inputs(model, params, batch);
  Workspace ws(model);
  LossAndGrad out{0.0, ParamVector(model.param_count(), 0.0)};
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    load_example(batch, i, ws);
    forward(model, params.data(), ws);
    const double loss = cross_entropy(ws.acts.back(), batch.labels[i]);
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite loss at head", model.layers().size() - 1);
    }
    loss_sum += loss;
    backward(model, params.data(), ws, batch.labels[i], out.grad.data());
  }
  const double n = static_cast<double>(batch.size());
  out.loss = loss_sum / n;
  for (double& g : out.grad) g /= n;
  return out;
}

Evaluation evaluate(const Model& model, const ParamVector& params, const Batch& batch,
                    NonFinite policy) {
  check_inputs(model, params, batch);
  Workspace ws(model);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    load_example(batch, i, ws);
    double loss;
    try {
      forward(model, params.data(), ws);
      loss = cross_entropy(ws.acts.back(), batch.labels[i]);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss at head", model.layers().size() - 1);
      }
    } catch (const NumericError&) {
      if (policy == NonFinite::kThrow) throw;
      loss_sum = std::numeric_limits<double>::infinity();
      continue;
    }
    loss_sum += loss;
    if (argmax_of(ws.acts.back()) == static_cast<std::size_t>(batch.labels[i])) ++correct;
  }
  const double n = static_cast<double>(batch.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

std::vector<double> filter_norms(const ParamVector& params, const FilterPartition& partition) {
  std::vector<double> norms;
  norms.reserve(partition.filter_count());
  for (const IndexRange& r : partition.filters) {
    norms.push_back(l2_norm(params.span().subspan(r.begin, r.size())));
  }
  return norms;
}

std::vector<std::uint32_t> activation_pattern(const Model& model, const ParamVector& params,
                                              const Batch& batch) {
  check_inputs(model, params, batch);
  Workspace ws(model);
  std::vector<std::uint32_t> pattern;
  const auto& layers = model.layers();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    load_example(batch, i, ws);
    forward(model, params.data(), ws);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].kind == LayerKind::kRelu) {
        for (double v : ws.acts[l + 1]) pattern.push_back(v > 0.0 ? 1u : 0u);
      } else if (layers[l].kind == LayerKind::kMaxPool2) {
        pattern.insert(pattern.end(), ws.argmax[l].begin(), ws.argmax[l].end());
      }
    }
  }
  return pattern;
}

}  // namespace rwp
