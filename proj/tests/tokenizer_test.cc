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


#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "obeats/mixture.h"
#include "obeats/pretrain.h"
#include "obeats/tokenizer.h"
#include "testing.h"

namespace obeats {
namespace {

using testing::KindName;
using testing::RaisedKind;

Tensor Column(std::initializer_list<double> values) {
  Tensor t({values.size(), 1});
  std::size_t i = 0;
  for (double v : values) t[i++] = v;
  return t;
}

TEST(FitCodebookTest, TwoPointsTwoCentroids) {
  const Codebook cb = FitCodebook(Column({0.0, 10.0}), 2, 50, 0);
  std::vector<double> c = {cb.centroids[0], cb.centroids[1]};
  std::sort(c.begin(), c.end());
  EXPECT_EQ(c, (std::vector<double>{0.0, 10.0}));
  EXPECT_EQ(Inertia(Column({0.0, 10.0}), cb.centroids, Quantize(cb, Column({0.0, 10.0}))), 0.0);
}

TEST(FitCodebookTest, SingleCentroidIsMean) {
  Rng rng(1);
  const Tensor x = testing::RandomTensor({30, 3}, rng);
  const Codebook cb = FitCodebook(x, 1, 50, 0);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 30; ++i) mean += x.at(i, j);
    EXPECT_NEAR(cb.centroids.at(0, j), mean / 30.0, 1e-12);
  }
}

Tensor CentroidsOf(const Tensor& x, const std::vector<int>& assign, std::size_t k) {
  Tensor c({k, x.cols()});
  std::vector<double> counts(k, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    counts[assign[i]] += 1.0;
    for (std::size_t j = 0; j < x.cols(); ++j) c.at(assign[i], j) += x.at(i, j);
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t j = 0; j < x.cols(); ++j) c.at(a, j) /= counts[a];
  return c;
}

TEST(FitCodebookTest, NoSinglePointMoveLowersInertia) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Tensor x = testing::RandomTensor({20, 2}, rng);
    const Codebook cb = FitCodebook(x, 3, 100, seed);
    const std::vector<int> assign = Quantize(cb, x);
    const double best = Inertia(x, cb.centroids, assign);
    for (std::size_t i = 0; i < 20; ++i) {
      for (int to = 0; to < 3; ++to) {
        if (to == assign[i]) continue;
        std::vector<int> moved = assign;
        moved[i] = to;
        if (std::count(moved.begin(), moved.end(), assign[i]) == 0) continue;
        const double inertia = Inertia(x, CentroidsOf(x, moved, 3), moved);
        EXPECT_GE(inertia, best - 1e-12) << "seed " << seed << " point " << i << " to " << to;
      }
    }
  }
}

TEST(FitCodebookTest, InertiaHistoryNonIncreasing) {
  Rng rng(3);
  const Tensor x = testing::RandomTensor({200, 4}, rng);
  FitReport report;
  FitCodebook(x, 8, 100, 3, &report);
  ASSERT_GE(report.inertia_history.size(), 2u);
  for (std::size_t i = 1; i < report.inertia_history.size(); ++i)
    EXPECT_LE(report.inertia_history[i], report.inertia_history[i - 1] + 1e-12);
}

TEST(FitCodebookTest, TooFewDistinctRowsIsDataInsufficient) {
  const Tensor x({10, 3}, 0.5);
  EXPECT_EQ(RaisedKind([&] { FitCodebook(x, 2, 10, 0); }), KindName(ErrorKind::kDataInsufficient));
}

TEST(FitCodebookTest, SameSeedSameCodebook) {
  Rng rng(4);
  const Tensor x = testing::RandomTensor({50, 3}, rng);
  EXPECT_EQ(FitCodebook(x, 4, 50, 9), FitCodebook(x, 4, 50, 9));
}

TEST(QuantizeTest, CentroidMapsToItsIndex) {
  Codebook cb;
  cb.centroids = Tensor::Matrix({{0, 0}, {1, 1}, {2, 0}, {5, 5}});
  EXPECT_EQ(Quantize(cb, Tensor::Matrix({{5, 5}})), std::vector<int>{3});
  EXPECT_EQ(Quantize(cb, cb.centroids), (std::vector<int>{0, 1, 2, 3}));
}

TEST(QuantizeTest, NearestByDistance) {
  Codebook cb;
  cb.centroids = Column({0.0, 3.0});
  // (2.9 - 0)^2 = 8.41 > (2.9 - 3)^2 = 0.01.
  EXPECT_EQ(Quantize(cb, Column({2.9})), std::vector<int>{1});
}

TEST(QuantizeTest, TieGoesToLowestIndex) {
  Codebook cb;
  cb.centroids = Column({0.0, 2.0});
  EXPECT_EQ(Quantize(cb, Column({1.0})), std::vector<int>{0});
}

TEST(QuantizeTest, WidthMismatchIsDimensionError) {
  Codebook cb;
  cb.centroids = Column({0.0, 2.0});
  EXPECT_EQ(RaisedKind([&] { Quantize(cb, Tensor({1, 2})); }), KindName(ErrorKind::kDimension));
}

TEST(RefineTest, ZeroAudioCorpusIsDataInsufficient) {
  FrontendConfig frontend;
  Waveform silence;
  silence.samples.assign(16000, 0.0);
  const std::vector<PatchGrid> corpus(4, WaveformToPatches(silence, frontend));
  TokenizerConfig config;
  config.codebook_size = 4;
  EXPECT_EQ(RaisedKind([&] { RefineIteration(nullptr, nullptr, corpus, config, 0); }),
            KindName(ErrorKind::kDataInsufficient));
}

TEST(RefineTest, IterationsIncreaseAndTokensChange) {
  const DatasetManifest manifest = LoadManifest(testing::FixtureCorpus() / "manifest.json");
  TrainConfig train;
  train.steps = 10;
  train.batch_size = 4;
  train.tokenizer.codebook_size = 8;
  Trainer trainer(train, manifest);
  trainer.Run();
  const Checkpoint& ckpt = trainer.state();
  EXPECT_EQ(ckpt.codebook.iteration, 0);
  EXPECT_EQ(ckpt.codebook.feature_source, kFeatureSourcePatch);

  ClipCache clips(train.frontend);
  std::vector<PatchGrid> sample;
  for (const std::vector<std::string>& paths : ResolveClips(manifest).clips)
    for (const std::string& path : paths) sample.push_back(clips.Get(path));
  const Codebook first = RefineIteration(&ckpt.codebook, &ckpt.weights, sample, train.tokenizer, 1);
  EXPECT_EQ(first.iteration, 1);
  EXPECT_EQ(first.feature_source, kFeatureSourceEncoder);
  const Codebook second = RefineIteration(&first, &ckpt.weights, sample, train.tokenizer, 2);
  EXPECT_EQ(second.iteration, 2);

  std::size_t changed = 0, total = 0;
  for (const PatchGrid& g : sample) {
    const std::vector<int> t0 = Quantize(ckpt.codebook, TokenizerFeatures(nullptr, g));
    const std::vector<int> t1 = Quantize(first, TokenizerFeatures(&ckpt.weights, g));
    for (std::size_t i = 0; i < t0.size(); ++i) changed += t0[i] != t1[i];
    total += t0.size();
  }
  EXPECT_GT(changed, 0u);
  EXPECT_LT(changed, total + 1);
}

TEST(RefineTest, LaterIterationNeedsTeacher) {
  Rng rng(5);
  const std::vector<PatchGrid> corpus = {testing::RandomGrid(4, 4, 16, rng)};
  Codebook prev;
  prev.centroids = Tensor({2, 96});
  TokenizerConfig config;
  config.codebook_size = 2;
  EXPECT_NE(RaisedKind([&] { RefineIteration(&prev, nullptr, corpus, config, 0); }), "none");
}

}  // namespace
}  // namespace obeats
