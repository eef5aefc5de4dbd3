/* Copyright 2026 The TSA Authors. All Rights Reserved.

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

#include "tsa/data.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

namespace tsa {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("tsa_data_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

TEST(SpiralsTest, NoiselessPointsLieOnTheirSpiral) {
  const std::size_t n = 50, classes = 3;
  const Dataset ds = GenSpirals(n, classes, 0.0, 1);
  ASSERT_EQ(ds.size(), n * classes);
  for (std::size_t j = 0; j < ds.size(); ++j) {
    const double x = ds.features[2 * j], y = ds.features[2 * j + 1];
    const std::size_t c = ds.labels[j], i = j % n;
    const double s = static_cast<double>(i + 1) / n;
    EXPECT_NEAR(std::hypot(x, y), s, 1e-6);
    const double angle = 2 * std::numbers::pi * (static_cast<double>(c) / classes + s);
    // Compare on the unit circle so the branch cut of atan2 does not matter.
    EXPECT_NEAR(x / s, std::cos(angle), 1e-6);
    EXPECT_NEAR(y / s, std::sin(angle), 1e-6);
  }
}

TEST(SpiralsTest, CountsAndDeterminism) {
  const Dataset a = GenSpirals(500, 3, 0.1, 42);
  EXPECT_EQ(a.size(), 1500u);
  EXPECT_EQ(a.num_classes, 3u);
  for (std::size_t c = 0; c < 3; ++c)
    EXPECT_EQ(std::count(a.labels.begin(), a.labels.end(), c), 500);
  EXPECT_EQ(a, GenSpirals(500, 3, 0.1, 42));
  EXPECT_NE(a.features, GenSpirals(500, 3, 0.1, 43).features);
  for (double v : a.features) EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
}

TEST(BlobsTest, CountsCentersAndDeterminism) {
  const Dataset a = GenBlobs(400, 4, 2, 5.0, 9);
  EXPECT_EQ(a.size(), 1600u);
  EXPECT_EQ(a, GenBlobs(400, 4, 2, 5.0, 9));
  EXPECT_EQ(BlobCenter(3, 2, 5.0), (std::vector<double>{0, -5}));
  for (std::size_t c = 0; c < 4; ++c) {
    std::vector<double> mean(2, 0.0);
    for (std::size_t j = 0; j < a.size(); ++j)
      if (a.labels[j] == c)
        for (int d = 0; d < 2; ++d) mean[d] += a.features[2 * j + d] / 400.0;
    const auto center = BlobCenter(c, 2, 5.0);
    EXPECT_LT(std::hypot(mean[0] - center[0], mean[1] - center[1]), 0.25) << c;
  }
  EXPECT_THROW(GenBlobs(10, 5, 2, 1.0, 0), std::invalid_argument);
}

TEST(CsvTest, HandWrittenRows) {
  TempDir dir;
  WriteText(dir.file("a.csv"), "label,f1,f2\n2,0.5,-1.25\n1,3,4e-2\n");
  const Dataset ds = LoadCsv(dir.file("a.csv"));
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.feature_shape, (Shape{2}));
  EXPECT_EQ(ds.labels, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(ds.features, (std::vector<double>{0.5, -1.25, 3, 0.04}));
  EXPECT_EQ(ds.num_classes, 2u);
}

TEST(CsvTest, RoundTripAndErrors) {
  TempDir dir;
  const Dataset ds = GenSpirals(20, 3, 0.2, 5);
  SaveCsv(ds, dir.file("s.csv"));
  const Dataset back = LoadCsv(dir.file("s.csv"));
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.labels, ds.labels);
  WriteText(dir.file("zero.csv"), "label,f1\n1,0\n0,1\n");
  try {
    LoadCsv(dir.file("zero.csv"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.kind(), DataError::Kind::kLabelRange);
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
  WriteText(dir.file("short.csv"), "label,f1,f2\n1,0\n");
  EXPECT_THROW(LoadCsv(dir.file("short.csv")), DataError);
  WriteText(dir.file("head.csv"), "y,f1\n1,0\n");
  EXPECT_THROW(LoadCsv(dir.file("head.csv")), DataError);
  EXPECT_THROW(LoadCsv(dir.file("missing.csv")), DataError);
}

TEST(RawTest, RoundTripIsExact) {
  TempDir dir;
  Dataset ds = GenSpirals(30, 4, 0.3, 6);
  SaveRaw(ds, dir.file("s.bin"));
  const Dataset back = LoadRaw(dir.file("s.bin"));
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.num_classes, 4u);
  EXPECT_EQ(LoadDataset(dir.file("s.bin")).labels, ds.labels);
}

TEST(RawTest, ByteLayout) {
  const Dataset ds{{1}, {1.5}, {1}, 2, "x"};
  const std::vector<std::uint8_t> bytes = EncodeRaw(ds);
  const std::vector<std::uint8_t> expected = {'T', 'S', 'A', 'D', 1, 0, 0, 0, 2, 0,    0,    0,
                                              1,   0,   0,   0,   1, 0, 0, 0, 0, 0,    0xc0, 0x3f,
                                              2,   0,   0,   0};
  EXPECT_EQ(bytes, expected);
}

TEST(RawTest, LabelOutOfRangeNamesRow) {
  Dataset ds = GenSpirals(2, 3, 0.0, 0);
  std::vector<std::uint8_t> bytes = EncodeRaw(ds);
  // The last u32 is the label of row 6; write T + 1 = 4 in 1-based form.
  bytes[bytes.size() - 4] = 4;
  try {
    DecodeRaw(bytes);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.kind(), DataError::Kind::kLabelRange);
    EXPECT_NE(std::string(e.what()).find("row 6"), std::string::npos) << e.what();
  }
}

TEST(RawTest, TruncatedAndBadMagic) {
  const std::vector<std::uint8_t> bytes = EncodeRaw(GenSpirals(3, 2, 0.0, 0));
  for (std::size_t cut : {0ul, 3ul, 10ul, bytes.size() - 1}) {
    try {
      DecodeRaw(std::span(bytes).first(cut));
      FAIL() << cut;
    } catch (const DataError& e) {
      EXPECT_TRUE(e.kind() == DataError::Kind::kTruncated ||
                  e.kind() == DataError::Kind::kMalformedHeader);
    }
  }
  std::vector<std::uint8_t> bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(DecodeRaw(bad), DataError);
  std::vector<std::uint8_t> extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(DecodeRaw(extra), DataError);
}

TEST(AugmentTest, EmptyPolicyLeavesBatchUnchanged) {
  Tensor batch({2, 1, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  EXPECT_EQ(Augment(batch, {}, 3), batch);
  Tensor flat({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(Augment(flat, {}, 3), flat);
  EXPECT_THROW(Augment(flat, {true, 0}, 3), ShapeError);
}

TEST(AugmentTest, FlipIsAnInvolution) {
  std::vector<double> img = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  const auto original = img;
  const AugmentDraw flip{true, 0, 0};
  ApplyAugment(img, {2, 2, 3}, flip);
  EXPECT_EQ(img, (std::vector<double>{3, 2, 1, 6, 5, 4, 9, 8, 7, 12, 11, 10}));
  ApplyAugment(img, {2, 2, 3}, flip);
  EXPECT_EQ(img, original);
}

TEST(AugmentTest, ShiftMovesHotPixelByDrawnOffset) {
  std::set<std::pair<long, long>> seen;
  for (std::size_t sample = 0; sample < 200; ++sample) {
    const AugmentDraw d = DrawAugment({false, 1}, 17, sample);
    ASSERT_LE(std::abs(d.dy), 1);
    ASSERT_LE(std::abs(d.dx), 1);
    seen.insert({d.dy, d.dx});
  }
  EXPECT_EQ(seen.size(), 9u);
  for (auto [dy, dx] : seen) {
    std::vector<double> img(9, 0.0);
    img[4] = 1.0;
    ApplyAugment(img, {1, 3, 3}, {false, dy, dx});
    std::vector<double> expected(9, 0.0);
    expected[(1 + dy) * 3 + (1 + dx)] = 1.0;
    EXPECT_EQ(img, expected) << dy << "," << dx;
  }
  std::vector<double> corner(9, 0.0);
  corner[0] = 1.0;
  ApplyAugment(corner, {1, 3, 3}, {false, -1, 0});
  EXPECT_EQ(corner, std::vector<double>(9, 0.0));
}

TEST(AugmentTest, DeterministicPerSeed) {
  Tensor batch({3, 1, 4, 4});
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = static_cast<double>(i);
  const AugmentPolicy policy{true, 2};
  EXPECT_EQ(Augment(batch, policy, 5), Augment(batch, policy, 5));
}

TEST(BatchesTest, PermutationCoverage) {
  const auto a = Batches(103, 10, 77);
  EXPECT_EQ(a, Batches(103, 10, 77));
  EXPECT_NE(a, Batches(103, 10, 78));
  ASSERT_EQ(a.size(), 11u);
  EXPECT_EQ(a.back().size(), 3u);
  std::vector<int> hits(103, 0);
  std::size_t total = 0;
  for (const auto& b : a) {
    total += b.size();
    for (std::size_t i : b) ++hits[i];
  }
  EXPECT_EQ(total, 103u);
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(GatherTest, CopiesRowsAndLabels) {
  const Dataset ds{{2}, {1, 2, 3, 4, 5, 6}, {0, 1, 2}, 3, "x"};
  const std::size_t idx[] = {2, 0};
  const Batch b = Gather(ds, idx);
  EXPECT_EQ(b.features, Tensor({2, 2}, {5, 6, 1, 2}));
  EXPECT_EQ(b.labels, (std::vector<std::size_t>{2, 0}));
  EXPECT_EQ(WholeSet(ds).features.shape(), (Shape{3, 2}));
}

}  // namespace
}  // namespace tsa
