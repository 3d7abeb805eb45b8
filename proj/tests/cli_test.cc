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


#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "obeats/cli.h"
#include "obeats/container.h"
#include "obeats/ensemble.h"
#include "testing.h"

namespace obeats {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult RunCli(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::Run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string Manifest() { return (testing::FixtureCorpus() / "manifest.json").string(); }
std::string Task() { return (testing::FixtureCorpus() / "task.json").string(); }
std::string CatalogManifest() { return (fs::path(OBEATS_FIXTURE_DIR) / "catalog.json").string(); }

TEST(CliTest, EmbeddingFileNameJoinsParentAndStem) {
  EXPECT_EQ(cli::EmbeddingFileName("speech/yodas_00.wav"), "speech_yodas_00.oemb");
  EXPECT_EQ(cli::EmbeddingFileName("/data/fx/music/fma_03.wav"), "music_fma_03.oemb");
}

TEST(CliTest, MixtureRatiosPrintsDomainSplit) {
  const CliResult r = RunCli({"mixture", "ratios", "--manifest", CatalogManifest()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("speech/music/sound: 68.9/15.5/15.5"), std::string::npos) << r.out;
  const CliResult d = RunCli({"mixture", "ratios", "--manifest", CatalogManifest(), "--disable", "yodas"});
  EXPECT_NE(d.out.find("speech/music/sound: 41.5/29.2/29.2"), std::string::npos) << d.out;
}

TEST(CliTest, MissingManifestExitsTwoNamingThePath) {
  const CliResult r = RunCli({"mixture", "ratios", "--manifest", "/nonexistent/m.json"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("/nonexistent/m.json"), std::string::npos) << r.err;
}

TEST(CliTest, UsageErrorsExitTwoAndHelpExitsZero) {
  EXPECT_EQ(RunCli({"frobnicate"}).code, 2);
  EXPECT_EQ(RunCli({"pretrain"}).code, 2);
  EXPECT_EQ(RunCli({"--help"}).code, 0);
}

TEST(CliTest, UnknownWithinDomainWeightingExitsTwo) {
  const fs::path dir = testing::TempDir("cli_within");
  const CliResult r = RunCli({"pretrain", "--manifest", Manifest(), "--within",
                              "flat", "--steps", "1", "--out", (dir / "run").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("flat"), std::string::npos) << r.err;
}

TEST(CliTest, PresetsReportRatio) {
  const CliResult r = RunCli({"presets"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("base-toy"), std::string::npos);
  EXPECT_NE(r.out.find("large-toy"), std::string::npos);
  EXPECT_NE(r.out.find("3.3"), std::string::npos) << r.out;
}

TEST(CliTest, AverageWithMismatchedWidthsExitsTwo) {
  const fs::path dir = testing::TempDir("cli_avg");
  Rng rng(1);
  EmbeddingSequence a, b;
  a.vectors = testing::RandomTensor({3, 4}, rng);
  b.vectors = testing::RandomTensor({3, 6}, rng);
  a.source_id = "a";
  b.source_id = "b";
  SaveEmbedding(a, dir / "a.oemb");
  SaveEmbedding(b, dir / "b.oemb");
  const CliResult r = RunCli({"ensemble", "--in", (dir / "a.oemb").string(), (dir / "b.oemb").string(), "--mode",
                              "average", "--out", (dir / "c.oemb").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("h = 4"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("h = 6"), std::string::npos) << r.err;
  const CliResult ok = RunCli({"ensemble", "--in", (dir / "a.oemb").string(), (dir / "b.oemb").string(), "--out",
                               (dir / "c.oemb").string()});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(LoadEmbedding(dir / "c.oemb").dim(), 10u);
  EXPECT_TRUE(fs::exists(dir / "c.run.json"));
}

TEST(CliTest, CorruptCheckpointExitsThree) {
  const fs::path dir = testing::TempDir("cli_corrupt");
  WriteFileBytes(dir / "bad.obts", "OBTS garbage");
  const CliResult r = RunCli({"embed", "--checkpoint", (dir / "bad.obts").string(), "--task", Task(), "--out",
                              (dir / "emb").string()});
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST(CliTest, ConflictingReportExitsTwo) {
  const fs::path dir = testing::TempDir("cli_report");
  std::ofstream(dir / "r.json") << R"({"results": [{"task": "t", "system": "a", "value": 0.1},
                                                   {"task": "t", "system": "a", "value": 0.2}]})";
  EXPECT_EQ(RunCli({"report", (dir / "r.json").string()}).code, 2);
  const CliResult ok = RunCli({"report", (fs::path(OBEATS_FIXTURE_DIR) / "reference_results.json").string(), "--out",
                               (dir / "out").string()});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_NE(ok.out.find("**0.904**"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "out" / "report.md"));
  EXPECT_TRUE(fs::exists(dir / "out" / "report.csv"));
}

// pretrain -> embed -> ensemble -> probe, run twice with the same seeds.
std::string Pipeline(const fs::path& root) {
  auto must = [](std::vector<std::string> args) {
    const CliResult r = RunCli(args);
    EXPECT_EQ(r.code, 0) << r.err;
  };
  const std::vector<std::string> train = {"pretrain", "--manifest", Manifest(), "--steps", "10",
                                          "--batch-size", "2", "--codebook-size", "8"};
  for (const char* seed : {"1", "2"}) {
    std::vector<std::string> args = {"--seed", seed, "--deterministic"};
    args.insert(args.end(), train.begin(), train.end());
    args.insert(args.end(), {"--out", (root / ("run" + std::string(seed))).string()});
    must(args);
  }
  EXPECT_TRUE(fs::exists(root / "run1" / "final.obts"));
  EXPECT_TRUE(fs::exists(root / "run1" / "run.json"));
  must({"--deterministic", "embed", "--checkpoint", (root / "run1" / "final.obts").string(), "--checkpoint",
        (root / "run2" / "final.obts").string(), "--name", "enc1", "--name", "enc2", "--standin", "melpool",
        "--task", Task(), "--out", (root / "emb").string()});
  must({"--deterministic", "ensemble", "--in", (root / "emb" / "enc1").string(), (root / "emb" / "enc2").string(),
        "--out", (root / "emb" / "fused").string()});
  must({"--deterministic", "--seed", "3", "probe", "--task", Task(), "--embeddings", (root / "emb" / "fused").string(),
        "--epochs", "5", "--out", (root / "probe").string()});
  must({"--deterministic", "probe", "--task", Task(), "--embeddings", (root / "emb" / "enc1").string(),
        (root / "emb" / "melpool").string(), "--epochs", "5", "--out", (root / "study").string()});
  EXPECT_TRUE(fs::exists(root / "study" / "study.json"));
  return ReadFileBytes(root / "probe" / "metrics.json");
}

TEST(CliTest, PipelineIsReproducible) {
  const std::string first = Pipeline(testing::TempDir("cli_pipe_a"));
  const std::string second = Pipeline(testing::TempDir("cli_pipe_b"));
  const nlohmann::json doc = nlohmann::json::parse(first);
  EXPECT_EQ(doc["task"], "fixture-classes");
  EXPECT_EQ(doc["test"]["metric"], "accuracy");
  EXPECT_EQ(first, second);
}

}  // namespace
}  // namespace obeats
