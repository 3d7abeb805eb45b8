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


// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "obeats/cli.h"
#include "obeats/container.h"
#include "obeats/ensemble.h"
#include "obeats/mixture.h"
#include "obeats/pretrain.h"
#include "obeats/probe.h"
#include "testing.h"

namespace obeats {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates sub-checks; the first failures are kept for the report line.
class Checker {
 public:
  void Expect(bool ok, const std::string& what) {
    if (ok) return;
    pass_ = false;
    if (failures_++ < 3) detail_ += (detail_.empty() ? "" : "; ") + what;
  }
  void Note(const std::string& note) { notes_ += (notes_.empty() ? "" : "; ") + note; }
  Outcome Done() const {
    std::string d = notes_;
    if (!pass_) d += (d.empty() ? "" : " | ") + std::string("failed: ") + detail_;
    if (failures_ > 3) d += " (+" + std::to_string(failures_ - 3) + " more)";
    return {pass_, d};
  }

 private:
  bool pass_ = true;
  int failures_ = 0;
  std::string detail_, notes_;
};

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

fs::path FixtureDir() { return fs::path(OBEATS_FIXTURE_DIR); }

Outcome MixtureArithmetic() {
  Checker c;
  DatasetManifest m = LoadManifest(FixtureDir() / "catalog.json");
  const DomainMap totals = DomainTotals(m);
  c.Expect(totals[0] == 51140.0, "speech total " + Fmt("%.0f", totals[0]));
  c.Expect(totals[1] == 11525.0, "music total " + Fmt("%.0f", totals[1]));
  c.Expect(totals[2] == 11522.0, "sound total " + Fmt("%.0f", totals[2]));
  c.Expect(TotalHours(m) == 74187.0, "total " + Fmt("%.0f", TotalHours(m)));
  const DomainMap with = MixtureRatios(m);
  const DomainMap target_with = {0.689, 0.155, 0.155};
  m.SetEnabled("yodas", false);
  const DomainMap without = MixtureRatios(m);
  const DomainMap target_without = {0.415, 0.292, 0.292};
  for (std::size_t d = 0; d < kNumDomains; ++d) {
    c.Expect(std::abs(with[d] - target_with[d]) <= 1e-3, "ratio with yodas " + Fmt("%.4f", with[d]));
    c.Expect(std::abs(without[d] - target_without[d]) <= 1e-3, "ratio without yodas " + Fmt("%.4f", without[d]));
  }
  c.Note("totals 51140/11525/11522 = 74187; ratios " + Fmt("%.3f", with[0]) + "/" + Fmt("%.3f", with[1]) + "/" +
         Fmt("%.3f", with[2]) + ", without yodas " + Fmt("%.3f", without[0]) + "/" + Fmt("%.3f", without[1]) + "/" +
         Fmt("%.3f", without[2]));
  return c.Done();
}

Outcome GradientIntegrity() {
  Checker c;
  double worst_op = 0.0, worst_graph = 0.0, worst_mlm = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    for (testing::OpCase& op : testing::MakeOpCases(seed)) {
      const testing::GradCheckResult r = testing::GradCheck(op.inputs, op.loss, 1e-5);
      worst_op = std::max(worst_op, r.max_rel_error);
      checked += r.checked;
      c.Expect(r.max_rel_error <= 1e-4, op.op + " seed " + std::to_string(seed) + " " + Fmt("%.2e", r.max_rel_error));
    }
    const testing::RandomGraphCase g = testing::MakeRandomGraph(seed);
    const testing::GradCheckResult rg = testing::GradCheck(g.inputs, g.loss, 1e-5);
    worst_graph = std::max(worst_graph, rg.max_rel_error);
    checked += rg.checked;
    c.Expect(rg.max_rel_error <= 1e-4, "composite seed " + std::to_string(seed) + " " + Fmt("%.2e", rg.max_rel_error));
    const testing::MlmCase mlm = testing::MakeMlmCase(seed);
    const testing::GradCheckResult rm = testing::GradCheck(mlm.inputs, mlm.loss, 1e-5);
    worst_mlm = std::max(worst_mlm, rm.max_rel_error);
    checked += rm.checked;
    c.Expect(rm.max_rel_error <= 1e-4, "1-layer MLM seed " + std::to_string(seed) + " " + Fmt("%.2e", rm.max_rel_error));
  }
  c.Note("100 seeds, " + std::to_string(checked) + " partials; max rel error ops " + Fmt("%.1e", worst_op) +
         ", composite " + Fmt("%.1e", worst_graph) + ", 1-layer MLM " + Fmt("%.1e", worst_mlm));
  return c.Done();
}

// Pretraining settings for the convergence criterion.
TrainConfig ConvergenceConfig() {
  TrainConfig t;
  t.encoder_preset = "base-toy";
  t.tokenizer.codebook_size = 16;
  t.steps = 500;
  t.mixture = "balanced";
  t.within_domain = "uniform";
  t.batch_size = 8;
  return t;
}

Outcome ToyConvergence() {
  Checker c;
  Trainer trainer(ConvergenceConfig(), LoadManifest(testing::FixtureCorpus() / "manifest.json"));
  trainer.Run();
  const std::vector<double>& h = trainer.state().loss_history;
  std::vector<double> windows;
  for (std::size_t w = 0; w + 50 <= h.size(); w += 50) {
    double s = 0.0;
    for (std::size_t i = w; i < w + 50; ++i) s += h[i];
    windows.push_back(s / 50.0);
  }
  const double target = 0.5 * std::log(16.0);
  c.Expect(windows.size() == 10, "expected 10 windows");
  c.Expect(!windows.empty() && windows.back() <= target, "final smoothed loss above 0.5 ln 16");
  std::string trace;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    trace += (i ? " " : "") + Fmt("%.3f", windows[i]);
    if (i > 0) c.Expect(windows[i] <= windows[i - 1], "window " + std::to_string(i) + " rose");
  }
  c.Note("50-step means " + trace + "; final " + Fmt("%.3f", windows.back()) + " (bound " + Fmt("%.3f", target) + ")");
  return c.Done();
}

Outcome UpsamplingOracle() {
  Checker c;
  std::size_t pairs = 0;
  for (std::size_t n = 1; n <= 32; ++n) {
    EmbeddingSequence s;
    s.vectors = Tensor({n, 2});
    for (std::size_t i = 0; i < n; ++i) {
      s.vectors.at(i, 0) = static_cast<double>(i);
      s.vectors.at(i, 1) = -static_cast<double>(i) * 0.5;
    }
    for (std::size_t target = n; target <= 32; ++target) {
      ++pairs;
      const EmbeddingSequence u = Upsample(s, target, UpsampleMode::kNearest);
      bool ok = u.length() == target;
      for (std::size_t j = 0; ok && j < target; ++j) {
        const std::size_t src = (j * n) / target;
        ok = u.vectors.at(j, 0) == s.vectors.at(src, 0) && u.vectors.at(j, 1) == s.vectors.at(src, 1);
      }
      c.Expect(ok, "N=" + std::to_string(n) + " -> " + std::to_string(target));
    }
  }
  c.Note(std::to_string(pairs) + " (N, N') pairs");
  return c.Done();
}

Outcome SliceRecovery() {
  Checker c;
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + rng.Below(4);
    std::vector<EmbeddingSequence> seqs;
    for (std::size_t i = 0; i < k; ++i) {
      EmbeddingSequence s;
      s.vectors = testing::RandomTensor({1 + rng.Below(32), 1 + rng.Below(24)}, rng);
      s.source_id = "s" + std::to_string(i);
      s.frame_rate = static_cast<double>(s.length());
      seqs.push_back(std::move(s));
    }
    const AlignedStack stack = Align(seqs);
    const EmbeddingSequence fused = Combine(stack, CombinerMode::kConcatenate);
    bool ok = fused.dim() == stack.total_width();
    for (std::size_t i = 0; ok && i < k; ++i) ok = SliceSource(fused, stack.slices[i]).vectors == stack.sequences[i].vectors;
    c.Expect(ok, "trial " + std::to_string(trial));
  }
  c.Note("1000 stacks of 2-5 sources, N in [1, 32], h in [1, 24]");
  return c.Done();
}

Outcome EnsembleComplementarity() {
  Checker c;
  std::string trace;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const testing::TwoViewStudy s = testing::MakeTwoViewStudy(seed);
    const StudyReport r = RunEnsembleStudy(s.sources, s.task, testing::StudyProbeConfig(seed));
    double a = 0.0, b = 0.0;
    for (const StudyEntry& e : r.entries) {
      if (e.system == "view-a") a = e.test.value;
      if (e.system == "view-b") b = e.test.value;
    }
    const std::string tag = "seed " + std::to_string(seed);
    c.Expect(a <= 0.75 && b <= 0.75, tag + " single above 0.75");
    c.Expect(r.concat >= 0.95, tag + " concat " + Fmt("%.3f", r.concat));
    c.Expect(r.average < r.concat, tag + " average not below concat");
    trace += (seed ? "; " : "") + Fmt("%.2f", a) + "/" + Fmt("%.2f", b) + " concat " + Fmt("%.2f", r.concat) +
             " avg " + Fmt("%.2f", r.average);
  }
  c.Note("single A/B, concat, average per seed: " + trace);
  return c.Done();
}

Outcome MapOracle() {
  Checker c;
  Rng rng(77);
  std::size_t single = 0;
  double worst = 0.0;
  for (std::size_t n = 1; n <= 6; ++n) {
    for (unsigned pattern = 1; pattern < (1u << n); ++pattern) {
      Tensor labels({n, 1});
      for (std::size_t i = 0; i < n; ++i) labels[i] = (pattern >> i) & 1u;
      std::vector<double> base(n);
      for (std::size_t i = 0; i < n; ++i) base[i] = static_cast<double>(i);
      for (int perm = 0; perm < 24; ++perm) {
        for (std::size_t i = n; i > 1; --i) std::swap(base[i - 1], base[rng.Below(i)]);
        Tensor scores({n, 1});
        for (std::size_t i = 0; i < n; ++i) scores[i] = perm % 4 == 3 ? std::floor(base[i] / 2.0) : base[i];
        std::vector<int> lab(n);
        for (std::size_t i = 0; i < n; ++i) lab[i] = static_cast<int>(labels[i]);
        const double diff = std::abs(MapScore(scores, labels) - testing::BruteForceAp(scores.data(), lab));
        worst = std::max(worst, diff);
        c.Expect(diff <= 1e-12, "single-class n=" + std::to_string(n));
        ++single;
      }
    }
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.Below(30), classes = 1 + rng.Below(8);
    Tensor scores({n, classes}), labels({n, classes});
    for (double& v : scores.storage()) v = rng.Below(4) == 0 ? 0.5 : rng.Uniform();
    for (double& v : labels.storage()) v = static_cast<double>(rng.Below(3) == 0);
    labels.at(rng.Below(n), 0) = 1.0;
    double sum = 0.0;
    std::size_t included = 0;
    for (std::size_t k = 0; k < classes; ++k) {
      std::vector<double> col(n);
      std::vector<int> lab(n);
      for (std::size_t i = 0; i < n; ++i) {
        col[i] = scores.at(i, k);
        lab[i] = static_cast<int>(labels.at(i, k));
      }
      const double ap = testing::BruteForceAp(col, lab);
      if (!std::isnan(ap)) {
        sum += ap;
        ++included;
      }
    }
    const double diff = std::abs(MapScore(scores, labels) - sum / static_cast<double>(included));
    worst = std::max(worst, diff);
    c.Expect(diff <= 1e-12, "multi-class trial " + std::to_string(trial));
  }
  c.Note(std::to_string(single) + " single-class + 1000 multi-class instances; max |diff| " + Fmt("%.1e", worst));
  return c.Done();
}

Outcome SamplerConvergence() {
  Checker c;
  const DatasetManifest m = LoadManifest(testing::FixtureCorpus() / "manifest.json");
  const ClipPool pool = ResolveClips(m);
  std::string trace;
  for (const char* name : {"speech-heavy", "balanced"}) {
    const MixtureSpec spec = NamedMixture(name);
    DomainMap freq{};
    for (const ClipRef& r : SampleBatch(m, pool, spec, 100000, 31)) freq[static_cast<std::size_t>(r.domain)] += 1e-5;
    for (std::size_t d = 0; d < kNumDomains; ++d)
      c.Expect(std::abs(freq[d] - spec.target_ratios[d]) <= 0.01, std::string(name) + " domain off by > 1 pp");
    trace += std::string(trace.empty() ? "" : "; ") + name + " " + Fmt("%.4f", freq[0]) + "/" + Fmt("%.4f", freq[1]) +
             "/" + Fmt("%.4f", freq[2]);
  }
  c.Note("1e5 draws: " + trace);
  return c.Done();
}

Outcome RoundTrips() {
  Checker c;
  const DatasetManifest m = LoadManifest(testing::FixtureCorpus() / "manifest.json");
  TrainConfig t;
  t.steps = 8;
  t.batch_size = 4;
  t.tokenizer.codebook_size = 16;
  t.checkpoint_every = 4;
  t.refit_tokenizer_every = 4;
  std::string midway;
  Trainer straight(t, m, /*deterministic=*/true);
  straight.Run([&](const Checkpoint& ck) {
    if (ck.step == 4) midway = EncodeCheckpoint(ck);
  });
  const fs::path dir = testing::TempDir("acceptance_roundtrip");
  SaveCheckpoint(straight.state(), dir / "a.obts");
  SaveCheckpoint(LoadCheckpoint(dir / "a.obts"), dir / "b.obts");
  c.Expect(ReadFileBytes(dir / "a.obts") == ReadFileBytes(dir / "b.obts"), "checkpoint save-load-save differs");

  std::string corrupt = ReadFileBytes(dir / "a.obts");
  corrupt[corrupt.size() / 2] ^= 0x20;
  c.Expect(testing::RaisedKind([&] { DecodeCheckpoint(corrupt); }) == testing::KindName(ErrorKind::kCorruption),
           "corrupted checkpoint byte not detected");

  Trainer resumed(DecodeCheckpoint(midway), m, /*deterministic=*/true);
  resumed.Run();
  c.Expect(resumed.state().loss_history == straight.state().loss_history, "resumed loss history differs");
  c.Expect(EncodeCheckpoint(resumed.state()) == EncodeCheckpoint(straight.state()), "resumed final state differs");

  const Waveform wave = LoadWav(testing::FixtureCorpus() / "music" / "fma_00.wav");
  const PatchGrid grid = WaveformToPatches(wave, t.frontend);
  SaveEmbedding(Encode(straight.state().weights, grid).sequence, dir / "a.oemb");
  SaveEmbedding(LoadEmbedding(dir / "a.oemb"), dir / "b.oemb");
  c.Expect(ReadFileBytes(dir / "a.oemb") == ReadFileBytes(dir / "b.oemb"), "embedding save-load-save differs");
  std::string bad = ReadFileBytes(dir / "a.oemb");
  bad[bad.size() - 10] ^= 0x01;
  c.Expect(testing::RaisedKind([&] { DecodeEmbedding(bad); }) == testing::KindName(ErrorKind::kCorruption),
           "corrupted embedding byte not detected");
  c.Note("checkpoint and OEMB byte-identical, flips detected, resume from step 4 of 8 (with tokenizer refit) bitwise");
  return c.Done();
}

Outcome EndToEnd() {
  Checker c;
  const fs::path root = testing::TempDir("acceptance_e2e");
  std::string last_out;
  auto run = [&](std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::Run(args, out, err);
    last_out = out.str();
    c.Expect(code == 0, args.front() + " exited " + std::to_string(code) + ": " + err.str());
    return code == 0;
  };
  const std::string fx = (root / "fixtures").string();
  if (!run({"fixtures", "generate", "--out", fx})) return c.Done();
  const std::string manifest = fx + "/manifest.json", task = fx + "/task.json";
  for (const char* preset : {"base-toy", "large-toy"}) {
    if (!run({"--deterministic", "pretrain", "--manifest", manifest, "--preset", preset, "--steps", "10",
              "--batch-size", "4", "--codebook-size", "16", "--out", (root / preset).string()}))
      return c.Done();
  }
  const std::string emb = (root / "emb").string();
  if (!run({"--deterministic", "embed", "--checkpoint", (root / "base-toy" / "final.obts").string(), "--checkpoint",
            (root / "large-toy" / "final.obts").string(), "--name", "base", "--name", "large", "--standin", "melpool",
            "--task", task, "--out", emb}))
    return c.Done();
  const EmbeddingSequence a = LoadEmbedding(fs::path(emb) / "base" / "speech_yodas_00.oemb");
  const EmbeddingSequence s = LoadEmbedding(fs::path(emb) / "melpool" / "speech_yodas_00.oemb");
  c.Expect(a.frame_rate != s.frame_rate && a.length() != s.length(), "stand-in shares the encoder frame rate");
  if (!run({"--deterministic", "ensemble", "--in", emb + "/base", emb + "/large", emb + "/melpool", "--out",
            emb + "/fused"}))
    return c.Done();
  const EmbeddingSequence fused = LoadEmbedding(fs::path(emb) / "fused" / "speech_yodas_00.oemb");
  c.Expect(fused.length() == std::max(a.length(), s.length()), "fused N is not the maximum N");
  c.Expect(fused.dim() == 96 + 128 + 64, "fused h = " + std::to_string(fused.dim()));
  std::vector<std::string> reports;
  for (const char* source : {"base", "large", "melpool", "fused"}) {
    const std::string out = (root / "probe" / source).string();
    if (!run({"--deterministic", "probe", "--task", task, "--embeddings", emb + "/" + source, "--out", out}))
      return c.Done();
    reports.push_back(out + "/metrics.json");
  }
  std::vector<std::string> args = {"report"};
  args.insert(args.end(), reports.begin(), reports.end());
  args.insert(args.end(), {"--out", (root / "report").string()});
  if (!run(args)) return c.Done();
  const std::string md = ReadFileBytes(root / "report" / "report.md");
  c.Expect(md.rfind("| Task | Domain | base | large | melpool | fused |", 0) == 0, "report header");
  c.Expect(md.find("| fixture-classes |") != std::string::npos, "report row");
  c.Expect(md.find("**") != std::string::npos, "no bold best value");
  c.Note("N base/melpool " + std::to_string(a.length()) + "/" + std::to_string(s.length()) + ", fused h " +
         std::to_string(fused.dim()) + "; " + md.substr(md.find("| fixture-classes"), md.find('\n', md.find("| fixture-classes")) - md.find("| fixture-classes")));
  return c.Done();
}

struct Criterion {
  int id;
  std::string name;
  double limit_s;  // runtime bound; 0 for none
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace obeats

int main(int argc, char** argv) {
  using namespace obeats;
  const std::vector<Criterion> criteria = {
      {1, "mixture arithmetic", 1.0, MixtureArithmetic},
      {2, "gradient integrity", 60.0, GradientIntegrity},
      {3, "toy pretraining convergence", 600.0, ToyConvergence},
      {4, "upsampling oracle", 1.0, UpsamplingOracle},
      {5, "slice recovery", 5.0, SliceRecovery},
      {6, "ensemble complementarity", 300.0, EnsembleComplementarity},
      {7, "mAP oracle", 0.0, MapOracle},
      {8, "sampler convergence", 0.0, SamplerConvergence},
      {9, "checkpoint and embedding round trip", 0.0, RoundTrips},
      {10, "end-to-end smoke", 180.0, EndToEnd},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0.0 && secs > c.limit_s) {
      o.pass = false;
      o.detail += " | runtime above " + std::to_string(static_cast<int>(c.limit_s)) + " s";
    }
    std::printf("%s %2d %-36s %8.2f s  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
