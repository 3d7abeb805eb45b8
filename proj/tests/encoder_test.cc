/*
 * Copyright 2026 The obeats Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "obeats/encoder.h"
#include "testing.h"

namespace obeats {
namespace {

using testing::KindName;
using testing::RaisedKind;
using testing::RandomGrid;
using testing::TinyEncoderConfig;

TEST(ParamCountTest, TinyConfigMatchesHandEnumeration) {
  // patch embedding 16x8 + 8, positions 16x8, mask token 8.
  const std::size_t stem = 16 * 8 + 8 + 16 * 8 + 8;
  // two norms, qkv 8x24 + 24, projection 8x8 + 8, fc1 8x16 + 16, fc2 16x8 + 8.
  const std::size_t block = 4 * 8 + (8 * 24 + 24) + (8 * 8 + 8) + (8 * 16 + 16) + (16 * 8 + 8);
  const std::size_t final_norm = 2 * 8;
  const std::size_t head = 8 * 8 + 8;
  EXPECT_EQ(ParamCount(TinyEncoderConfig()), stem + block + final_norm + head);
  EXPECT_EQ(ParamCount(TinyEncoderConfig()), 960u);
}

TEST(ParamCountTest, MatchesLayoutEnumeration) {
  for (const EncoderConfig& c : {TinyEncoderConfig(), EncoderPreset("base-toy"), EncoderPreset("large-toy")}) {
    std::size_t total = 0;
    for (const auto& [name, shape] : EncoderTensorLayout(c)) total += ShapeNumel(shape);
    EXPECT_EQ(ParamCount(c), total) << c.preset;
    EXPECT_EQ(InitEncoder(c, 0).ParamCount(), total) << c.preset;
  }
}

TEST(ParamCountTest, ZeroLayersKeepsOnlyStemAndHead) {
  EncoderConfig c = TinyEncoderConfig();
  c.layers = 0;
  EXPECT_EQ(ParamCount(c), (16u * 8 + 8) + 16 * 8 + 8 + (8 * 8 + 8));
}

TEST(ParamCountTest, PresetRatioNearThreeAndAThird) {
  const double ratio = static_cast<double>(ParamCount(EncoderPreset("large-toy"))) /
                       static_cast<double>(ParamCount(EncoderPreset("base-toy")));
  EXPECT_NEAR(ratio, 300.0 / 90.0, 0.15 * 300.0 / 90.0);
}

TEST(InitTest, SameSeedIsBitwiseIdentical) {
  EXPECT_EQ(InitEncoder(TinyEncoderConfig(), 7), InitEncoder(TinyEncoderConfig(), 7));
}

TEST(InitTest, DifferentSeedsDiffer) {
  EXPECT_NE(InitEncoder(TinyEncoderConfig(), 1).tensors, InitEncoder(TinyEncoderConfig(), 2).tensors);
}

TEST(InitTest, UnknownTensorNameIsIndexError) {
  const EncoderWeights w = InitEncoder(TinyEncoderConfig(), 0);
  EXPECT_EQ(RaisedKind([&] { w.Get("nope"); }), KindName(ErrorKind::kIndex));
}

TEST(ConfigTest, HeadsMustDivideDim) {
  EncoderConfig c = TinyEncoderConfig();
  c.heads = 3;
  EXPECT_EQ(RaisedKind([&] { ValidateEncoderConfig(c); }), KindName(ErrorKind::kConfig));
  EXPECT_EQ(RaisedKind([] { EncoderPreset("huge-toy"); }), KindName(ErrorKind::kConfig));
}

TEST(EncodeTest, SequenceLengthIsTimeRows) {
  Rng rng(1);
  const EncoderWeights w = InitEncoder(TinyEncoderConfig(), 0);
  const EncodeResult r = Encode(w, RandomGrid(2, 4, 4, rng));
  EXPECT_EQ(r.sequence.length(), 2u);
  EXPECT_EQ(r.sequence.dim(), 8u);
  EXPECT_EQ(r.patch_outputs.rows(), 8u);
}

TEST(EncodeTest, EmptyMaskGivesNoLogitsAndIsDeterministic) {
  Rng rng(2);
  const EncoderWeights w = InitEncoder(TinyEncoderConfig(), 3);
  const PatchGrid g = RandomGrid(3, 2, 4, rng);
  const EncodeResult a = Encode(w, g), b = Encode(w, g);
  EXPECT_EQ(a.logits.size(), 0u);
  EXPECT_TRUE(a.masked.empty());
  EXPECT_EQ(a.sequence, b.sequence);
}

TEST(EncodeTest, MaskedLogitsFollowMaskOrder) {
  Rng rng(3);
  const EncoderWeights w = InitEncoder(TinyEncoderConfig(), 3);
  const std::vector<std::size_t> mask = {1, 4};
  const EncodeResult r = Encode(w, RandomGrid(3, 2, 4, rng), mask);
  EXPECT_EQ(r.logits.rows(), 2u);
  EXPECT_EQ(r.logits.cols(), 8u);
  EXPECT_EQ(r.masked, mask);
}

TEST(EncodeTest, MaskedContentDoesNotReachTheOutput) {
  Rng rng(4);
  const EncoderWeights w = InitEncoder(TinyEncoderConfig(), 5);
  PatchGrid g = RandomGrid(3, 2, 4, rng);
  const std::vector<std::size_t> mask = {0, 2, 5};
  const EncodeResult before = Encode(w, g, mask);
  for (std::size_t m : mask)
    for (double& v : g.patches.row(m)) v = rng.Uniform(-50, 50);
  const EncodeResult after = Encode(w, g, mask);
  EXPECT_EQ(before.logits, after.logits);
  EXPECT_EQ(before.sequence, after.sequence);
}

PatchGrid SwapFrequencyRows(const PatchGrid& g, std::size_t a, std::size_t b) {
  PatchGrid out = g;
  for (std::size_t t = 0; t < g.rows_time; ++t) {
    auto ra = g.patches.row(t * g.rows_freq + a);
    auto rb = g.patches.row(t * g.rows_freq + b);
    std::copy(rb.begin(), rb.end(), out.patches.row(t * g.rows_freq + a).begin());
    std::copy(ra.begin(), ra.end(), out.patches.row(t * g.rows_freq + b).begin());
  }
  return out;
}

TEST(EncodeTest, FrequencyPermutationInvariantWithZeroPositions) {
  Rng rng(6);
  EncoderWeights w = InitEncoder(TinyEncoderConfig(), 7);
  w.Get("pos_embed").Fill(0.0);
  const PatchGrid g = RandomGrid(2, 4, 4, rng);
  const PatchGrid swapped = SwapFrequencyRows(g, 0, 3);
  const Tensor& a = Encode(w, g).sequence.vectors;
  const Tensor& b = Encode(w, swapped).sequence.vectors;
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(EncodeTest, FrequencyPermutationChangesOutputWithPositions) {
  Rng rng(6);
  EncoderWeights w = InitEncoder(TinyEncoderConfig(), 7);
  for (double& v : w.Get("pos_embed").storage()) v = rng.Uniform(-1, 1);
  const PatchGrid g = RandomGrid(2, 4, 4, rng);
  const Tensor a = Encode(w, g).sequence.vectors;
  const Tensor b = Encode(w, SwapFrequencyRows(g, 0, 3)).sequence.vectors;
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
  EXPECT_GT(diff, 1e-6);
}

TEST(EncodeTest, ZeroLayerSequenceIsPooledEmbedding) {
  EncoderConfig c = TinyEncoderConfig();
  c.layers = 0;
  Rng rng(8);
  const EncoderWeights w = InitEncoder(c, 1);
  const PatchGrid g = RandomGrid(2, 2, 4, rng);
  const Tensor emb = Matmul(g.patches, w.Get("patch_embed.weight"));
  const Tensor& pos = w.Get("pos_embed");
  const Tensor seq = Encode(w, g).sequence.vectors;
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t j = 0; j < 8; ++j) {
      const double expected = 0.5 * (emb.at(2 * t, j) + pos.at(2 * t, j) + emb.at(2 * t + 1, j) + pos.at(2 * t + 1, j));
      EXPECT_NEAR(seq.at(t, j), expected, 1e-12);
    }
}

TEST(EncodeTest, TooManyPatchesIsCapacityError) {
  Rng rng(9);
  const EncoderWeights w = InitEncoder(TinyEncoderConfig(), 0);
  const PatchGrid g = RandomGrid(9, 2, 4, rng);
  EXPECT_EQ(RaisedKind([&] { Encode(w, g); }), KindName(ErrorKind::kCapacity));
}

TEST(EncodeTest, MaskOutOfRangeIsIndexError) {
  Rng rng(10);
  const EncoderWeights w = InitEncoder(TinyEncoderConfig(), 0);
  const PatchGrid g = RandomGrid(2, 2, 4, rng);
  const std::vector<std::size_t> mask = {4};
  EXPECT_EQ(RaisedKind([&] { Encode(w, g, mask); }), KindName(ErrorKind::kIndex));
}

TEST(EncodeTest, WrongPatchSizeIsDimensionError) {
  Rng rng(11);
  const EncoderWeights w = InitEncoder(TinyEncoderConfig(), 0);
  const PatchGrid g = RandomGrid(2, 2, 2, rng);
  EXPECT_EQ(RaisedKind([&] { Encode(w, g); }), KindName(ErrorKind::kDimension));
}

}  // namespace
}  // namespace obeats
