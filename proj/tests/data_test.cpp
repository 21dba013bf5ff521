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
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include <unistd.h>

#include <gtest/gtest.h>

#include "rwp/checkpoint.hpp"
#include "rwp/data.hpp"
#include "rwp/error.hpp"

namespace rwp {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("rwp_data_test_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void WriteBytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void PushBe32(std::vector<unsigned char>& v, std::uint32_t x) {
  for (int s = 24; s >= 0; s -= 8) v.push_back(static_cast<unsigned char>(x >> s));
}

std::vector<unsigned char> IdxImages(std::uint32_t magic, std::uint32_t count,
                                     const std::vector<unsigned char>& pixels) {
  std::vector<unsigned char> v;
  PushBe32(v, magic);
  PushBe32(v, count);
  PushBe32(v, 3);
  PushBe32(v, 3);
  v.insert(v.end(), pixels.begin(), pixels.end());
  return v;
}

std::vector<unsigned char> IdxLabels(std::uint32_t magic, const std::vector<unsigned char>& labels) {
  std::vector<unsigned char> v;
  PushBe32(v, magic);
  PushBe32(v, static_cast<std::uint32_t>(labels.size()));
  v.insert(v.end(), labels.begin(), labels.end());
  return v;
}

TEST(BlobsTest, ZeroSpreadCollapsesClasses) {
  const Dataset d = make_blobs(3, 4, 10, 0.0, 1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::size_t first = static_cast<std::size_t>(d.labels[i]) * 10;
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(d.inputs[i * 4 + j], d.inputs[first * 4 + j]);
  }
}

TEST(BlobsTest, BisectorSeparatesTwoClasses) {
  // Centres 4*e0 and 4*e1: the bisector x0 = x1 is the closed-form separator.
  const Dataset d = make_blobs(2, 2, 500, 0.1, 2);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int predicted = d.inputs[2 * i] > d.inputs[2 * i + 1] ? 0 : 1;
    EXPECT_EQ(predicted, d.labels[i]);
  }
}

TEST(BlobsTest, Deterministic) {
  EXPECT_EQ(make_blobs(3, 5, 7, 0.5, 9), make_blobs(3, 5, 7, 0.5, 9));
  EXPECT_NE(make_blobs(3, 5, 7, 0.5, 9), make_blobs(3, 5, 7, 0.5, 10));
  EXPECT_THROW(make_blobs(4, 3, 7, 0.5, 9), ConfigError);
}

TEST(SpiralsTest, RadiiMonotoneAlongArms) {
  const Dataset d = make_spirals(100, 0.0, 3);
  for (int arm = 0; arm < 2; ++arm) {
    double prev = -1.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.labels[i] != arm) continue;
      const double r = std::hypot(d.inputs[2 * i], d.inputs[2 * i + 1]);
      EXPECT_GE(r, prev);
      prev = r;
    }
  }
}

TEST(SpiralsTest, NearestNeighbourOracleOnResample) {
  const Dataset train = make_spirals(300, 0.0, 4);
  const Dataset held = make_spirals(300, 0.0, 5);
  ASSERT_NE(train, held);
  for (std::size_t i = 0; i < held.size(); ++i) {
    double best = 1e300;
    int label = -1;
    for (std::size_t j = 0; j < train.size(); ++j) {
      const double dx = held.inputs[2 * i] - train.inputs[2 * j];
      const double dy = held.inputs[2 * i + 1] - train.inputs[2 * j + 1];
      if (dx * dx + dy * dy < best) {
        best = dx * dx + dy * dy;
        label = train.labels[j];
      }
    }
    EXPECT_EQ(label, held.labels[i]) << "example " << i;
  }
}

TEST(SpiralsTest, Deterministic) {
  EXPECT_EQ(make_spirals(20, 0.2, 6), make_spirals(20, 0.2, 6));
}

TEST(ShapesTest, ImageShapedAndBounded) {
  const Dataset d = make_shapes(5, 8, 0.1, 7);
  EXPECT_EQ(d.shape, (Shape{1, 8, 8}));
  EXPECT_EQ(d.class_count, 4u);
  EXPECT_EQ(d.size(), 20u);
  for (double v : d.inputs) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(d, make_shapes(5, 8, 0.1, 7));
}

TEST(IdxTest, ExactPixelScaling) {
  TempDir dir;
  std::vector<unsigned char> px(18);
  for (int i = 0; i < 18; ++i) px[i] = static_cast<unsigned char>(i * 15);
  px[0] = 0;
  px[17] = 255;
  WriteBytes(dir / "img", IdxImages(0x803, 2, px));
  WriteBytes(dir / "lab", IdxLabels(0x801, {1, 4}));
  const Dataset d = load_idx(dir / "img", dir / "lab");
  EXPECT_EQ(d.shape, (Shape{1, 3, 3}));
  EXPECT_EQ(d.labels, (std::vector<int>{1, 4}));
  EXPECT_EQ(d.class_count, 5u);
  EXPECT_EQ(d.inputs[0], 0.0);
  EXPECT_EQ(d.inputs[17], 1.0);
  EXPECT_EQ(d.inputs[3], 45.0 / 255.0);
}

TEST(IdxTest, BadMagic) {
  TempDir dir;
  WriteBytes(dir / "img", IdxImages(0x802, 1, std::vector<unsigned char>(9)));
  WriteBytes(dir / "lab", IdxLabels(0x801, {0}));
  try {
    load_idx(dir / "img", dir / "lab");
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos);
  }
}

TEST(IdxTest, CountMismatchAndTruncation) {
  TempDir dir;
  WriteBytes(dir / "img", IdxImages(0x803, 2, std::vector<unsigned char>(18)));
  WriteBytes(dir / "lab", IdxLabels(0x801, {0, 1, 1}));
  EXPECT_THROW(load_idx(dir / "img", dir / "lab"), IngestionError);
  WriteBytes(dir / "img", IdxImages(0x803, 2, std::vector<unsigned char>(10)));
  WriteBytes(dir / "lab", IdxLabels(0x801, {0, 1}));
  try {
    load_idx(dir / "img", dir / "lab");
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }
  EXPECT_THROW(load_idx(dir / "missing", dir / "lab"), IngestionError);
}

TEST(RwpdTest, RoundTrip) {
  TempDir dir;
  Dataset d = make_shapes(3, 6, 0.1, 8, Split::kTest);
  write_dataset(dir / "d.rwpd", d);
  EXPECT_EQ(read_dataset(dir / "d.rwpd"), d);
  WriteBytes(dir / "bad.rwpd", {'X', 'X', 'X', 'X'});
  EXPECT_THROW(read_dataset(dir / "bad.rwpd"), IngestionError);
}

TEST(CheckpointTest, RoundTripAndTruncation) {
  TempDir dir;
  const ParamVector p(std::vector<double>{1.5, -0.0, 1e-300, 3.0});
  write_checkpoint(dir / "p.ckpt", p);
  EXPECT_TRUE(bitwise_equal(read_checkpoint(dir / "p.ckpt"), p));
  const auto size = fs::file_size(dir / "p.ckpt");
  fs::resize_file(dir / "p.ckpt", size - 3);
  EXPECT_THROW(read_checkpoint(dir / "p.ckpt"), IngestionError);
}

class CorruptTest : public ::testing::Test {
 protected:
  Dataset images_ = make_shapes(4, 8, 0.1, 9, Split::kTest);
};

TEST_F(CorruptTest, BlurKeepsConstantImage) {
  Dataset flat = images_;
  std::fill(flat.inputs.begin(), flat.inputs.end(), 0.37);
  for (int s = 1; s <= 5; ++s) {
    const Dataset out = corrupt(flat, {CorruptionKind::kBlur3x3, s}, 1);
    for (double v : out.inputs) EXPECT_NEAR(v, 0.37, 1e-15);
  }
}

TEST_F(CorruptTest, ContrastFixedPoint) {
  Dataset half = images_;
  std::fill(half.inputs.begin(), half.inputs.end(), 0.5);
  for (int s = 1; s <= 5; ++s) {
    for (double v : corrupt(half, {CorruptionKind::kContrast, s}, 1).inputs) EXPECT_EQ(v, 0.5);
  }
  const Dataset c = corrupt(images_, {CorruptionKind::kContrast, 3}, 1);
  EXPECT_NEAR(c.inputs[0], 0.5 + 0.5 * (images_.inputs[0] - 0.5), 1e-15);
}

TEST_F(CorruptTest, PreservesLabelsShapeCountAndRange) {
  for (CorruptionKind kind : kAllCorruptions) {
    for (int s = 1; s <= 5; ++s) {
      const Dataset out = corrupt(images_, {kind, s}, 2);
      EXPECT_EQ(out.labels, images_.labels);
      EXPECT_EQ(out.shape, images_.shape);
      for (double v : out.inputs) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
      EXPECT_EQ(out, corrupt(images_, {kind, s}, 2));
    }
  }
}

TEST_F(CorruptTest, ImpulseRateBySeverity) {
  Dataset grey = make_shapes(200, 10, 0.0, 10, Split::kTest);
  std::fill(grey.inputs.begin(), grey.inputs.end(), 0.5);
  const double rates[] = {0.01, 0.02, 0.04, 0.08, 0.16};
  for (int s = 1; s <= 5; ++s) {
    const Dataset out = corrupt(grey, {CorruptionKind::kImpulseNoise, s}, 3);
    const double hit = static_cast<double>(std::count_if(out.inputs.begin(), out.inputs.end(),
                                                         [](double v) { return v != 0.5; })) /
                       static_cast<double>(out.inputs.size());
    EXPECT_NEAR(hit, rates[s - 1], 4.0 * std::sqrt(rates[s - 1] / out.inputs.size()));
  }
}

TEST_F(CorruptTest, GaussianSigmaBySeverity) {
  Dataset grey = make_shapes(200, 10, 0.0, 11, Split::kTest);
  std::fill(grey.inputs.begin(), grey.inputs.end(), 0.5);
  const double sigmas[] = {0.04, 0.08, 0.12, 0.16, 0.20};
  for (int s = 1; s <= 5; ++s) {
    const Dataset out = corrupt(grey, {CorruptionKind::kGaussianNoise, s}, 4);
    double sq = 0.0;
    for (double v : out.inputs) sq += (v - 0.5) * (v - 0.5);
    // Clamping at 0.5 +- 0.5 is negligible up to sigma 0.2.
    EXPECT_NEAR(std::sqrt(sq / out.inputs.size()), sigmas[s - 1], 0.02 * sigmas[s - 1]);
  }
}

TEST_F(CorruptTest, Rejections) {
  Dataset train = images_;
  train.split = Split::kTrain;
  EXPECT_THROW(corrupt(train, {CorruptionKind::kGaussianNoise, 1}, 0), ConfigError);
  EXPECT_THROW(corrupt(images_, {CorruptionKind::kGaussianNoise, 0}, 0), ConfigError);
  EXPECT_THROW(corrupt(images_, {CorruptionKind::kGaussianNoise, 6}, 0), ConfigError);
  const Dataset flat = make_blobs(2, 3, 5, 0.1, 1, Split::kTest);
  EXPECT_THROW(corrupt(flat, {CorruptionKind::kBlur3x3, 1}, 0), ConfigError);
  EXPECT_THROW(corrupt(flat, {CorruptionKind::kContrast, 1}, 0), ConfigError);
  EXPECT_NO_THROW(corrupt(flat, {CorruptionKind::kImpulseNoise, 1}, 0));
}

TEST(BatchStreamTest, FullBatchIsPermutation) {
  BatchStream s(17, 17, 1);
  EXPECT_EQ(s.batches_per_epoch(), 1u);
  auto epoch = s.next_epoch();
  ASSERT_EQ(epoch.size(), 1u);
  std::vector<std::size_t> sorted = epoch[0];
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> all(17);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(sorted, all);
}

TEST(BatchStreamTest, PartialLastBatchAndCoverage) {
  BatchStream s(10, 4, 2);
  EXPECT_EQ(s.batches_per_epoch(), 3u);
  for (int e = 0; e < 3; ++e) {
    const auto epoch = s.next_epoch();
    ASSERT_EQ(epoch.size(), 3u);
    EXPECT_EQ(epoch[2].size(), 2u);
    std::multiset<std::size_t> seen;
    for (const auto& b : epoch) seen.insert(b.begin(), b.end());
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(seen.count(i), 1u);
  }
  EXPECT_THROW(BatchStream(10, 11, 0), ConfigError);
}

TEST(BatchStreamTest, SeedControlsOrder) {
  BatchStream a(50, 10, 3), b(50, 10, 3), c(50, 10, 4);
  const auto ea = a.next_epoch();
  EXPECT_EQ(ea, b.next_epoch());
  EXPECT_NE(ea, c.next_epoch());
  EXPECT_NE(ea, a.next_epoch());
}

}  // namespace
}  // namespace rwp
