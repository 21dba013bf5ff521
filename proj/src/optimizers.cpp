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
#include "rwp/optimizers.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "rwp/checkpoint.hpp"
#include "rwp/error.hpp"

namespace rwp {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void note(StepTrace* trace, const char* event) {
  if (trace != nullptr) trace->events.emplace_back(event);
}

bool same_examples(const Batch& a, const Batch& b) {
  return &a == &b || (a.labels == b.labels && a.inputs == b.inputs);
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
}

// Gradient at w on `batch` when SAM has no usable ascent direction.
ParamVector unperturbed_grad(const Model& model, const ParamVector& params,
                             const LossAndGrad& at_w, const Batch& batch_1, const Batch& batch_2,
                             BatchPolicy policy) {
  if (policy == BatchPolicy::kSameBatch || &batch_1 == &batch_2) return at_w.grad;
  return loss_and_grad(model, params, batch_2).grad;
}

}  // namespace

std::string rule_name(const UpdateRule& rule) {
  return std::visit(Overloaded{[](const SgdRule&) { return "sgd"; },
                               [](const SamRule&) { return "sam"; },
                               [](const RwpRule&) { return "rwp"; },
                               [](const SamMixRule&) { return "sam_mix"; },
                               [](const RwpPureRule&) { return "rwp_pure"; }},
                    rule);
}

void validate(const UpdateRule& rule) {
  auto check_rho = [](double rho) {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("rho must be positive");
  };
  auto check_gamma = [](double gamma) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be nonnegative");
  };
  std::visit(Overloaded{[](const SgdRule&) {},
                        [&](const SamRule& r) { check_rho(r.rho); },
                        [&](const RwpRule& r) {
                          check_gamma(r.gamma);
                          check_alpha(r.alpha);
                        },
                        [&](const SamMixRule& r) {
                          check_rho(r.rho);
                          check_alpha(r.alpha);
                        },
                        [&](const RwpPureRule& r) { check_gamma(r.gamma); }},
             rule);
}

bool uses_second_batch(const UpdateRule& rule) {
  return std::visit(Overloaded{[](const SgdRule&) { return false; },
                               [](const SamRule& r) { return r.policy == BatchPolicy::kDifferentBatch; },
                               [](const RwpRule& r) { return r.policy == BatchPolicy::kDifferentBatch; },
                               [](const SamMixRule&) { return false; },
                               [](const RwpPureRule& r) { return r.policy == BatchPolicy::kDifferentBatch; }},
                    rule);
}

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(cfg.lr0 > 0.0) || !std::isfinite(cfg.lr0)) throw ConfigError("lr must be positive");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!(cfg.weight_decay >= 0.0) || !std::isfinite(cfg.weight_decay)) {
    throw ConfigError("weight_decay must be nonnegative");
  }
}

double cosine_lr(std::size_t step, std::size_t total_steps, double lr0) {
  if (step >= total_steps) {
    throw ConfigError("step " + std::to_string(step) + " outside schedule of " +
                      std::to_string(total_steps) + " steps");
  }
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

void combine_and_apply(ParamVector& params, const ParamVector& g_combined, OptState& state,
                       const TrainConfig& cfg) {
  if (g_combined.size() != params.size() || state.velocity.size() != params.size()) {
    throw ConfigError("gradient, velocity and parameter sizes differ");
  }
  const double lr = cosine_lr(state.step_index, state.total_steps, cfg.lr0);
  ParamVector velocity(params.size());
  ParamVector next(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = g_combined[i] + cfg.weight_decay * params[i];
    velocity[i] = cfg.momentum * state.velocity[i] + g;
    next[i] = params[i] - lr * velocity[i];
  }
  if (!all_finite(next.span()) || !all_finite(velocity.span())) {
    throw NumericError("non-finite parameter update at step " + std::to_string(state.step_index));
  }
  params = std::move(next);
  state.velocity = std::move(velocity);
  ++state.step_index;
}

double sgd_step(const Model& model, ParamVector& params, const Batch& batch, OptState& state,
                const TrainConfig& cfg, StepTrace* trace) {
  LossAndGrad g = loss_and_grad(model, params, batch);
  note(trace, "grad:original");
  combine_and_apply(params, g.grad, state, cfg);
  note(trace, "apply");
  return g.loss;
}

double sam_step(const Model& model, ParamVector& params, const Batch& batch_1,
                const Batch& batch_2, OptState& state, const TrainConfig& cfg,
                const SamSpec& spec, BatchPolicy policy, StepTrace* trace) {
  if (policy == BatchPolicy::kSameBatch && !same_examples(batch_1, batch_2)) {
    throw ConfigError("same-batch SAM step given two different batches");
  }
  const Batch& second = policy == BatchPolicy::kSameBatch ? batch_1 : batch_2;
  LossAndGrad at_w = loss_and_grad(model, params, batch_1);
  note(trace, "grad:original");
  ParamVector eps;
  try {
    eps = sam_perturbation(at_w.grad, spec);
  } catch (const DegenerateGradientError&) {
    ++state.degenerate_count;
    note(trace, "degenerate");
    combine_and_apply(params, unperturbed_grad(model, params, at_w, batch_1, second, policy),
                      state, cfg);
    note(trace, "apply");
    return at_w.loss;
  }
  note(trace, "perturb:sam");
  if (trace != nullptr) trace->perturbation_norm = l2_norm(eps);
  LossAndGrad at_eps = loss_and_grad(model, add(params, eps), second);
  note(trace, "grad:perturbed");
  combine_and_apply(params, at_eps.grad, state, cfg);
  note(trace, "apply");
  return at_w.loss;
}

double rwp_step(const Model& model, ParamVector& params, const Batch& batch_1,
                const Batch& batch_2, OptState& state, const TrainConfig& cfg,
                const RwpNoiseSpec& spec, double alpha, BatchPolicy policy, Executor& executor,
                Rng& noise_rng, StepTrace* trace) {
  check_alpha(alpha);
  if (policy == BatchPolicy::kSameBatch && !same_examples(batch_1, batch_2)) {
    throw ConfigError("same-batch RWP step given two different batches");
  }
  const Batch& second = policy == BatchPolicy::kSameBatch ? batch_1 : batch_2;
  const ParamVector noise = sample_rwp_noise(params, model.partition(), spec, noise_rng);
  note(trace, "perturb:rwp");
  if (trace != nullptr) trace->perturbation_norm = l2_norm(noise);
  const ParamVector perturbed = add(params, noise);
  TwoGrads grads = executor.eval_two_grads(model, params, batch_1, perturbed, second);
  note(trace, "grad:original+perturbed");
  combine_and_apply(params, mix(grads.original.grad, grads.perturbed.grad, alpha), state, cfg);
  note(trace, "apply");
  return grads.original.loss;
}

double sam_mix_step(const Model& model, ParamVector& params, const Batch& batch,
                    OptState& state, const TrainConfig& cfg, const SamSpec& spec, double alpha,
                    StepTrace* trace) {
  check_alpha(alpha);
  LossAndGrad at_w = loss_and_grad(model, params, batch);
  note(trace, "grad:original");
  ParamVector eps;
  try {
    eps = sam_perturbation(at_w.grad, spec);
  } catch (const DegenerateGradientError&) {
    ++state.degenerate_count;
    note(trace, "degenerate");
    combine_and_apply(params, at_w.grad, state, cfg);
    note(trace, "apply");
    return at_w.loss;
  }
  note(trace, "perturb:sam");
  if (trace != nullptr) trace->perturbation_norm = l2_norm(eps);
  LossAndGrad at_eps = loss_and_grad(model, add(params, eps), batch);
  note(trace, "grad:perturbed");
  combine_and_apply(params, mix(at_w.grad, at_eps.grad, alpha), state, cfg);
  note(trace, "apply");
  return at_w.loss;
}

double apply_rule_step(const Model& model, const UpdateRule& rule, ParamVector& params,
                       const Batch& batch_1, const Batch& batch_2, OptState& state,
                       const TrainConfig& cfg, Executor& executor, Rng& noise_rng,
                       StepTrace* trace) {
  const RwpNoiseSpec noise_base{0.0, cfg.seed_noise};
  return std::visit(
      Overloaded{
          [&](const SgdRule&) { return sgd_step(model, params, batch_1, state, cfg, trace); },
          [&](const SamRule& r) {
            const Batch& b2 = r.policy == BatchPolicy::kSameBatch ? batch_1 : batch_2;
            return sam_step(model, params, batch_1, b2, state, cfg, SamSpec{r.rho}, r.policy, trace);
          },
          [&](const RwpRule& r) {
            const Batch& b2 = r.policy == BatchPolicy::kSameBatch ? batch_1 : batch_2;
            RwpNoiseSpec spec = noise_base;
            spec.gamma = r.gamma;
            return rwp_step(model, params, batch_1, b2, state, cfg, spec, r.alpha, r.policy,
                            executor, noise_rng, trace);
          },
          [&](const SamMixRule& r) {
            return sam_mix_step(model, params, batch_1, state, cfg, SamSpec{r.rho}, r.alpha, trace);
          },
          [&](const RwpPureRule& r) {
            const Batch& b2 = r.policy == BatchPolicy::kSameBatch ? batch_1 : batch_2;
            RwpNoiseSpec spec = noise_base;
            spec.gamma = r.gamma;
            return rwp_step(model, params, batch_1, b2, state, cfg, spec, 0.0, r.policy, executor,
                            noise_rng, trace);
          }},
      rule);
}

TrainResult train(const Model& model, const UpdateRule& rule, const TrainConfig& cfg,
                  const Dataset& train_set, const Dataset& test_set, Executor& executor,
                  ParamVector initial_params, const TrainOptions& options) {
  validate(cfg);
  validate(rule);
  validate(train_set);
  validate(test_set);
  if (initial_params.size() != model.param_count()) {
    throw ConfigError("initial parameters do not match the model");
  }
  TrainResult result{std::move(initial_params), {}};
  if (cfg.epochs == 0) return result;

  BatchStream stream_1(train_set.size(), cfg.batch_size, cfg.seed_batches);
  std::optional<BatchStream> stream_2;
  if (uses_second_batch(rule)) {
    stream_2.emplace(train_set.size(), cfg.batch_size, Rng::derive(cfg.seed_batches, 1));
  }
  const std::size_t steps_per_epoch = stream_1.batches_per_epoch();
  OptState state = OptState::fresh(model.param_count(), cfg.epochs * steps_per_epoch);
  Rng noise_rng(cfg.seed_noise);
  const Batch test_batch = test_set.as_batch();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto order_1 = stream_1.next_epoch();
    const auto order_2 = stream_2 ? stream_2->next_epoch() : decltype(order_1){};
    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t j = 0; j < order_1.size(); ++j) {
      const Batch batch_1 = train_set.gather(order_1[j]);
      const Batch batch_2 = stream_2 ? train_set.gather(order_2[j]) : Batch{};
      lr = cosine_lr(state.step_index, state.total_steps, cfg.lr0);
      try {
        loss_sum += apply_rule_step(model, rule, result.params, batch_1,
                                    stream_2 ? batch_2 : batch_1, state, cfg, executor, noise_rng);
      } catch (const Error&) {
        if (options.abort_checkpoint) write_checkpoint(*options.abort_checkpoint, result.params);
        throw;
      }
    }
    MetricsRecord record;
    record.epoch = epoch + 1;
    record.train_loss = loss_sum / static_cast<double>(order_1.size());
    record.test_accuracy = evaluate(model, result.params, test_batch).accuracy;
    record.learning_rate = lr;
    record.degenerate_gradient_count = state.degenerate_count;
    record.epoch_wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                               std::chrono::steady_clock::now() - start)
                               .count();
    if (options.on_epoch) options.on_epoch(record);
    result.metrics.push_back(record);
  }
  return result;
}

TrainResult train(const Model& model, const UpdateRule& rule, const TrainConfig& cfg,
                  const Dataset& train_set, const Dataset& test_set, Executor& executor,
                  const TrainOptions& options) {
  return train(model, rule, cfg, train_set, test_set, executor, init_uniform(model, cfg.seed_init),
               options);
}

}  // namespace rwp
