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
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rwp/error.hpp"
#include "rwp/model.hpp"

namespace rwp {
namespace {

Batch RandomBatch(const Model& model, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, static_cast<int>(model.class_count()) - 1);
  Batch b;
  b.shape = model.input_shape();
  b.inputs.resize(n * b.shape.size());
  for (auto& x : b.inputs) x = normal(gen);
  for (std::size_t i = 0; i < n; ++i) {
    b.labels.push_back(label(gen));
    b.indices.push_back(i);
  }
  return b;
}

TEST(BuildModelTest, MlpFilterCounts) {
  EXPECT_EQ(build_mlp({16}, 2, 2).partition().filter_count(), 18u);
  EXPECT_EQ(build_mlp({8, 8}, 4, 3).partition().filter_count(), 19u);
  const Model m = build_mlp({16}, 2, 2);
  EXPECT_EQ(m.param_count(), 16u * 2 + 16 + 2 * 16 + 2);
}

TEST(BuildModelTest, EmptyMlpIsConfigError) {
  EXPECT_THROW(build_mlp({}, 2, 2), ConfigError);
  EXPECT_THROW(build_mlp({4, 0}, 2, 2), ConfigError);
}

TEST(BuildModelTest, CnnFilterShapes) {
  const Model m = build_cnn({4}, 3, Shape{1, 8, 8}, 2);
  const auto& part = m.partition();
  ASSERT_EQ(part.filter_count(), 6u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(part.filter_shapes[k], (Shape{1, 3, 3}));
    EXPECT_EQ(part.filters[k].size(), 9u);
  }
  // 8x8 -> conv 6x6 -> pool 3x3, 4 channels.
  EXPECT_EQ(part.filters[4].size(), 36u);
  EXPECT_EQ(build_cnn({4, 8}, 3, Shape{1, 28, 28}, 10).partition().filter_count(), 22u);
}

TEST(BuildModelTest, CnnPoolUnderflow) {
  EXPECT_THROW(build_cnn({4, 8, 16}, 3, Shape{1, 4, 4}, 10), ConfigError);
}

TEST(BuildModelTest, PartitionCoversEveryParameterOnce) {
  const Model m = build_cnn({3, 5}, 3, Shape{2, 12, 12}, 4);
  std::vector<int> seen(m.param_count(), 0);
  for (const auto& r : m.partition().filters)
    for (std::size_t i = r.begin; i < r.end; ++i) ++seen[i];
  for (const auto& r : m.partition().non_filter)
    for (std::size_t i = r.begin; i < r.end; ++i) ++seen[i];
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(InitTest, SameSeedSameParams) {
  const Model m = build_mlp({8, 8}, 4, 3);
  EXPECT_TRUE(bitwise_equal(init_uniform(m, 9), init_uniform(m, 9)));
  EXPECT_FALSE(bitwise_equal(init_uniform(m, 9), init_uniform(m, 10)));
}

TEST(InitTest, EntriesWithinFanInBound) {
  const Model m = build_cnn({4}, 3, Shape{2, 6, 6}, 3);
  const ParamVector w = init_uniform(m, 1);
  for (const auto& r : m.partition().filters) {
    const double bound = std::sqrt(1.0 / static_cast<double>(r.size()));
    for (std::size_t i = r.begin; i < r.end; ++i) EXPECT_LE(std::abs(w[i]), bound);
  }
  for (const auto& r : m.partition().non_filter)
    for (std::size_t i = r.begin; i < r.end; ++i) EXPECT_EQ(w[i], 0.0);
}

TEST(InitTest, MeanSquaredFilterNormNearOneThird) {
  // 10^4 filters of fan-in 9. Var ||w||^2 = 4 / (45 d) for d iid uniform
  // entries scaled to unit expected norm; the band is 4 standard errors.
  const Model m = build_cnn({10000}, 3, Shape{1, 4, 4}, 2);
  const ParamVector w = init_uniform(m, 5);
  const auto norms = filter_norms(w, m.partition());
  double sum = 0.0;
  for (std::size_t k = 0; k < 10000; ++k) sum += norms[k] * norms[k];
  const double mean = sum / 10000.0;
  const double se = std::sqrt(4.0 / (45.0 * 9.0) / 10000.0);
  EXPECT_NEAR(mean, 1.0 / 3.0, 4.0 * se);
}

TEST(LossTest, UniformLogitsGiveLogC) {
  const Model m = build_mlp({5}, 3, 7);
  const ParamVector zero(m.param_count(), 0.0);
  const Batch b = RandomBatch(m, 6, 3);
  const LossAndGrad lg = loss_and_grad(m, zero, b);
  EXPECT_NEAR(lg.loss, std::log(7.0), 1e-15);
}

TEST(LossTest, GradientMatchesCentralDifferences) {
  // 2 -> 6 -> 4 MLP with 46 parameters plus enough data to avoid flat spots.
  const Model m = build_mlp({6}, 2, 4);
  ASSERT_LE(m.param_count(), 50u);
  ParamVector w = init_uniform(m, 17);
  std::mt19937_64 gen(18);
  std::normal_distribution<double> small(0.0, 0.1);
  for (const auto& r : m.partition().non_filter)
    for (std::size_t i = r.begin; i < r.end; ++i) w[i] = small(gen);
  const Batch b = RandomBatch(m, 5, 19);
  const ParamVector g = loss_and_grad(m, w, b).grad;
  const auto pattern = activation_pattern(m, w, b);
  const double h = 1e-5;
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    ParamVector plus = w;
    ParamVector minus = w;
    plus[i] += h;
    minus[i] -= h;
    if (activation_pattern(m, plus, b) != pattern || activation_pattern(m, minus, b) != pattern) {
      continue;
    }
    const double fd = (evaluate(m, plus, b).loss - evaluate(m, minus, b).loss) / (2 * h);
    worst = std::max(worst, std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), 1e-6}));
    ++checked;
  }
  EXPECT_GT(checked, w.size() / 2);
  EXPECT_LT(worst, 1e-5);
}

TEST(LossTest, CnnGradientMatchesCentralDifferences) {
  const Model m = build_cnn({2}, 3, Shape{1, 6, 6}, 3);
  const ParamVector w = init_uniform(m, 21);
  const Batch b = RandomBatch(m, 3, 22);
  const ParamVector g = loss_and_grad(m, w, b).grad;
  const auto pattern = activation_pattern(m, w, b);
  const double h = 1e-5;
  for (std::size_t i = 0; i < w.size(); ++i) {
    ParamVector plus = w;
    ParamVector minus = w;
    plus[i] += h;
    minus[i] -= h;
    if (activation_pattern(m, plus, b) != pattern || activation_pattern(m, minus, b) != pattern) {
      continue;
    }
    const double fd = (evaluate(m, plus, b).loss - evaluate(m, minus, b).loss) / (2 * h);
    EXPECT_LT(std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), 1e-6}), 1e-5)
        << "parameter " << i;
  }
}

TEST(LossTest, DeterministicAcrossCalls) {
  const Model m = build_cnn({3}, 3, Shape{1, 7, 7}, 2);
  const ParamVector w = init_uniform(m, 2);
  const Batch b = RandomBatch(m, 4, 3);
  const LossAndGrad a = loss_and_grad(m, w, b);
  const LossAndGrad c = loss_and_grad(m, w, b);
  EXPECT_TRUE(bitwise_equal(a.grad, c.grad));
  EXPECT_EQ(a.loss, c.loss);
}

TEST(LossTest, DoublingHeadScalesMarginAndLowersLoss) {
  // One dense layer 2 -> 2; both examples classified correctly.
  const Model m(Shape{2, 1, 1}, 2, {LayerSpec::dense(2)});
  ParamVector w(std::vector<double>{1.0, -0.5, -0.5, 1.0, 0.1, -0.1});
  Batch b;
  b.shape = Shape{2, 1, 1};
  b.inputs = {1.0, 0.2, 0.1, 1.0};
  b.labels = {0, 1};
  b.indices = {0, 1};
  EXPECT_EQ(evaluate(m, w, b).accuracy, 1.0);
  const double before = evaluate(m, w, b).loss;
  for (double& v : w) v *= 2.0;
  EXPECT_LT(evaluate(m, w, b).loss, before);
}

TEST(LossTest, MismatchedInputsAreConfigErrors) {
  const Model m = build_mlp({4}, 3, 2);
  const ParamVector w = init_uniform(m, 0);
  Batch b = RandomBatch(m, 2, 1);
  EXPECT_THROW(loss_and_grad(m, ParamVector(3), b), ConfigError);
  b.labels[0] = 5;
  EXPECT_THROW(loss_and_grad(m, w, b), ConfigError);
}

TEST(LossTest, NonFiniteActivationNamesLayer) {
  const Model m = build_mlp({4}, 3, 2);
  ParamVector w = init_uniform(m, 0);
  w[0] = std::numeric_limits<double>::infinity();
  const Batch b = RandomBatch(m, 2, 1);
  try {
    loss_and_grad(m, w, b);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    ASSERT_TRUE(e.layer().has_value());
    EXPECT_EQ(*e.layer(), 0u);
  }
  const Evaluation sat = evaluate(m, w, b, NonFinite::kSaturate);
  EXPECT_TRUE(std::isinf(sat.loss));
}

TEST(FilterNormsTest, ZeroParamsZeroNorms) {
  const Model m = build_mlp({3}, 2, 2);
  for (double n : filter_norms(ParamVector(m.param_count(), 0.0), m.partition())) {
    EXPECT_EQ(n, 0.0);
  }
}

TEST(FilterNormsTest, ThreeFourFive) {
  FilterPartition p;
  p.filters = {{0, 2}};
  p.filter_shapes = {Shape{2, 1, 1}};
  p.param_count = 2;
  const auto norms = filter_norms(ParamVector(std::vector<double>{3.0, 4.0}), p);
  ASSERT_EQ(norms.size(), 1u);
  EXPECT_EQ(norms[0], 5.0);
}

}  // namespace
}  // namespace rwp
