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
#ifndef RWP_OPTIMIZERS_HPP_
#define RWP_OPTIMIZERS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rwp/data.hpp"
#include "rwp/executor.hpp"
#include "rwp/model.hpp"
#include "rwp/perturb.hpp"
#include "rwp/rng.hpp"

namespace rwp {

enum class BatchPolicy { kSameBatch, kDifferentBatch };

struct SgdRule {
  bool operator==(const SgdRule&) const = default;
};

struct SamRule {
  double rho = 0.05;
  BatchPolicy policy = BatchPolicy::kSameBatch;
  bool operator==(const SamRule&) const = default;
};

// alpha * grad(w) + (1 - alpha) * grad(w + filter-wise noise).
struct RwpRule {
  double gamma = 0.01;
  double alpha = 0.5;
  BatchPolicy policy = BatchPolicy::kDifferentBatch;
  bool operator==(const RwpRule&) const = default;
};

// SAM whose update mixes in the unperturbed gradient. Same batch only.
struct SamMixRule {
  double rho = 0.05;
  double alpha = 0.5;
  bool operator==(const SamMixRule&) const = default;
};

// RWP without the unperturbed gradient, i.e. alpha = 0.
struct RwpPureRule {
  double gamma = 0.01;
  BatchPolicy policy = BatchPolicy::kDifferentBatch;
  bool operator==(const RwpPureRule&) const = default;
};

using UpdateRule = std::variant<SgdRule, SamRule, RwpRule, SamMixRule, RwpPureRule>;

std::string rule_name(const UpdateRule& rule);
// Throws ConfigError for rho <= 0, gamma < 0 or alpha outside [0,1].
void validate(const UpdateRule& rule);
// True when the rule draws its second gradient from an independent batch.
bool uses_second_batch(const UpdateRule& rule);

struct TrainConfig {
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  double lr0 = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-3;
  std::uint64_t seed_batches = 0;
  std::uint64_t seed_noise = 0;
  std::uint64_t seed_init = 0;

  bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& cfg);

struct OptState {
  ParamVector velocity;
  std::size_t step_index = 0;
  std::size_t total_steps = 0;
  std::size_t degenerate_count = 0;

  static OptState fresh(std::size_t param_count, std::size_t total_steps) {
    return {ParamVector(param_count, 0.0), 0, total_steps, 0};
  }
};

// Records what a step did, in order. Used by tests and the benchmark.
struct StepTrace {
  std::vector<std::string> events;
  double perturbation_norm = 0.0;
};

// lr0 * (1 + cos(pi * step / total_steps)) / 2 for 0 <= step < total_steps.
double cosine_lr(std::size_t step, std::size_t total_steps, double lr0);

// g' = g + weight_decay * w; v <- momentum * v + g'; w <- w - lr * v, with lr
// from the cosine schedule at state.step_index. Params and state are left
// untouched and NumericError is thrown if the update is non-finite.
void combine_and_apply(ParamVector& params, const ParamVector& g_combined, OptState& state,
                       const TrainConfig& cfg);

// Each step returns the loss at the current weights on the first batch.
double sgd_step(const Model& model, ParamVector& params, const Batch& batch, OptState& state,
                const TrainConfig& cfg, StepTrace* trace = nullptr);

// Under kSameBatch, batch_2 must hold the same examples as batch_1.
double sam_step(const Model& model, ParamVector& params, const Batch& batch_1,
                const Batch& batch_2, OptState& state, const TrainConfig& cfg,
                const SamSpec& spec, BatchPolicy policy, StepTrace* trace = nullptr);

// Noise is drawn from `noise_rng`; both gradients go through `executor`.
double rwp_step(const Model& model, ParamVector& params, const Batch& batch_1,
                const Batch& batch_2, OptState& state, const TrainConfig& cfg,
                const RwpNoiseSpec& spec, double alpha, BatchPolicy policy, Executor& executor,
                Rng& noise_rng, StepTrace* trace = nullptr);

double sam_mix_step(const Model& model, ParamVector& params, const Batch& batch,
                    OptState& state, const TrainConfig& cfg, const SamSpec& spec, double alpha,
                    StepTrace* trace = nullptr);

struct MetricsRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  double learning_rate = 0.0;
  std::int64_t epoch_wall_ns = 0;
  std::size_t degenerate_gradient_count = 0;
};

struct TrainOptions {
  // Written with the last finite parameters if training aborts.
  std::optional<std::filesystem::path> abort_checkpoint;
  std::function<void(const MetricsRecord&)> on_epoch;
};

struct TrainResult {
  ParamVector params;
  std::vector<MetricsRecord> metrics;
};

// Runs epochs * ceil(n / batch_size) steps of `rule`. Batch order depends only
// on cfg.seed_batches; different-batch rules draw their second batch from an
// independent shuffle of the same data.
TrainResult train(const Model& model, const UpdateRule& rule, const TrainConfig& cfg,
                  const Dataset& train_set, const Dataset& test_set, Executor& executor,
                  ParamVector initial_params, const TrainOptions& options = {});

// As above, starting from init_uniform(model, cfg.seed_init).
TrainResult train(const Model& model, const UpdateRule& rule, const TrainConfig& cfg,
                  const Dataset& train_set, const Dataset& test_set, Executor& executor,
                  const TrainOptions& options = {});

// One step of `rule` on the given batches. batch_2 is only read by
// different-batch rules.
double apply_rule_step(const Model& model, const UpdateRule& rule, ParamVector& params,
                       const Batch& batch_1, const Batch& batch_2, OptState& state,
                       const TrainConfig& cfg, Executor& executor, Rng& noise_rng,
                       StepTrace* trace = nullptr);

}  // namespace rwp

#endif  // RWP_OPTIMIZERS_HPP_
