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


#include "obeats/cli.h"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include "obeats/audio.h"
#include "obeats/config.h"
#include "obeats/container.h"
#include "obeats/encoder.h"
#include "obeats/ensemble.h"
#include "obeats/error.h"
#include "obeats/fixtures.h"
#include "obeats/mixture.h"
#include "obeats/pretrain.h"
#include "obeats/probe.h"
#include "obeats/report.h"

namespace obeats::cli {
namespace fs = std::filesystem;
using nlohmann::json;

std::string EmbeddingFileName(const std::string& clip_path) {
  const fs::path p(clip_path);
  const std::string parent = p.parent_path().filename().string();
  const std::string stem = p.stem().string();
  return (parent.empty() ? stem : parent + "_" + stem) + ".oemb";
}

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::string config_path;
  std::vector<std::string> argv;
};

void RequireFile(const fs::path& path, const char* what) {
  if (!fs::exists(path)) Fail(ErrorKind::kConfig, what, " not found: ", path.string());
}

RunConfig LoadRunConfig(const Globals& g) {
  RunConfig rc;
  if (!g.config_path.empty()) {
    RequireFile(g.config_path, "config file");
    rc = ParseRunConfig(LoadJsonFile(g.config_path));
  }
  if (g.seed) rc.seed = *g.seed;
  if (g.deterministic) rc.deterministic = true;
  rc.pretrain.seed = rc.seed;
  rc.probe.seed = rc.seed;
  return rc;
}

json RunRecord(const Globals& g, const std::string& command, json config) {
  return {{"tool", "obeats"},
          {"version", OBEATS_VERSION},
          {"command", command},
          {"argv", g.argv},
          {"config", std::move(config)}};
}

void WriteJson(const fs::path& path, const json& doc) { WriteFileBytes(path, doc.dump(2) + "\n"); }

std::string Percent(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * ratio);
  return buf;
}

template <typename Fn>
void ParallelFor(std::size_t n, bool deterministic, Fn fn) {
  const std::size_t workers =
      deterministic ? 1 : std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : threads) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---- mixture ----

struct MixtureOptions {
  std::string manifest;
  std::vector<std::string> disable;
  std::string spec = "balanced";
  std::size_t n = 10;
  std::string within = "hours";
};

DatasetManifest LoadManifestFor(const MixtureOptions& o) {
  RequireFile(o.manifest, "manifest");
  DatasetManifest manifest = LoadManifest(o.manifest);
  for (const std::string& id : o.disable) manifest.SetEnabled(id, false);
  return manifest;
}

void MixtureRatiosCommand(const MixtureOptions& o, std::ostream& out) {
  const DatasetManifest manifest = LoadManifestFor(o);
  const DomainMap totals = DomainTotals(manifest);
  const DomainMap ratios = MixtureRatios(manifest);
  std::string joined;
  for (Domain d : kAllDomains) {
    const auto i = static_cast<std::size_t>(d);
    char line[96];
    std::snprintf(line, sizeof(line), "%-8s %10.1f h  %5s%%\n", std::string(DomainName(d)).c_str(), totals[i],
                  Percent(ratios[i]).c_str());
    out << line;
    joined += (joined.empty() ? "" : "/") + Percent(ratios[i]);
  }
  char total[64];
  std::snprintf(total, sizeof(total), "%-8s %10.1f h\n", "total", TotalHours(manifest));
  out << total << "speech/music/sound: " << joined << "\n";
}

void MixtureSampleCommand(const MixtureOptions& o, const Globals& g, std::ostream& out) {
  const DatasetManifest manifest = LoadManifestFor(o);
  const MixtureSpec spec = NamedMixture(o.spec);
  if (o.within != "hours" && o.within != "uniform") {
    Fail(ErrorKind::kConfig, "--within must be hours or uniform, got '", o.within, "'");
  }
  const auto weighting = o.within == "uniform" ? WithinDomainWeighting::kUniform : WithinDomainWeighting::kHours;
  const std::vector<ClipRef> draws =
      SampleBatch(manifest, ResolveClips(manifest), spec, o.n, g.seed.value_or(0), 0, weighting);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    out << i << '\t' << DomainName(draws[i].domain) << '\t' << draws[i].dataset_id << '\t' << draws[i].path << '\n';
  }
}

// ---- presets ----

void PresetsCommand(std::size_t codebook_size, std::ostream& out) {
  std::size_t base = 0, large = 0;
  for (const std::string& name : EncoderPresetNames()) {
    const EncoderConfig c = EncoderPreset(name, codebook_size);
    const std::size_t count = ParamCount(c);
    if (name == "base-toy") base = count;
    if (name == "large-toy") large = count;
    out << name << ": layers=" << c.layers << " dim=" << c.dim << " heads=" << c.heads << " ffn=" << c.ffn_dim
        << " params=" << count << "\n";
  }
  char ratio[64];
  std::snprintf(ratio, sizeof(ratio), "%.3f", static_cast<double>(large) / static_cast<double>(base));
  out << "large-toy/base-toy parameter ratio: " << ratio << "\n";
}

// ---- fixtures ----

void FixturesCommand(const std::string& out_dir, std::size_t clips_per_class, const Globals& g, std::ostream& out) {
  CorpusSpec spec;
  spec.clips_per_class = clips_per_class;
  spec.seed = g.seed.value_or(0);
  const CorpusSummary summary = GenerateCorpus(spec, out_dir);
  WriteJson(fs::path(out_dir) / "run.json",
            RunRecord(g, "fixtures generate",
                      {{"seed", spec.seed}, {"clips_per_class", spec.clips_per_class},
                       {"duration_s", spec.duration_s}, {"sample_rate", spec.sample_rate}}));
  out << "wrote " << summary.clips.size() << " clips to " << out_dir << "\n"
      << "digest " << summary.digest << "\n";
}

// ---- pretrain ----

struct PretrainOptions {
  std::string manifest;
  std::string out;
  std::string resume;
  std::optional<std::string> preset;
  std::optional<std::string> mixture;
  std::optional<std::string> within;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> codebook_size;
  std::optional<std::size_t> checkpoint_every;
  std::optional<std::size_t> refit_every;
  std::optional<std::size_t> warmup;
  std::optional<double> lr;
  std::size_t log_every = 10;
};

void PretrainCommand(const PretrainOptions& o, const Globals& g, std::ostream& out) {
  RunConfig rc = LoadRunConfig(g);
  TrainConfig& tc = rc.pretrain;
  if (o.preset) tc.encoder_preset = *o.preset;
  if (o.mixture) tc.mixture = *o.mixture;
  if (o.within) tc.within_domain = *o.within;
  if (o.steps) tc.steps = *o.steps;
  if (o.batch_size) tc.batch_size = *o.batch_size;
  if (o.codebook_size) tc.tokenizer.codebook_size = *o.codebook_size;
  if (o.checkpoint_every) tc.checkpoint_every = *o.checkpoint_every;
  if (o.refit_every) tc.refit_tokenizer_every = *o.refit_every;
  if (o.warmup) tc.warmup_steps = *o.warmup;
  if (o.lr) tc.optimizer.learning_rate = *o.lr;
  RequireFile(o.manifest, "manifest");
  DatasetManifest manifest = LoadManifest(o.manifest);

  std::unique_ptr<Trainer> trainer;
  if (!o.resume.empty()) {
    RequireFile(o.resume, "checkpoint");
    Checkpoint ckpt = LoadCheckpoint(o.resume);
    if (o.steps) ckpt.train_config.steps = *o.steps;
    trainer = std::make_unique<Trainer>(std::move(ckpt), std::move(manifest), rc.deterministic);
  } else {
    ValidateTrainConfig(tc);
    trainer = std::make_unique<Trainer>(tc, std::move(manifest), rc.deterministic);
  }
  const TrainConfig& effective = trainer->config();
  const fs::path dir(o.out);
  json record_config = ToJson(rc);
  record_config["pretrain"] = ToJson(effective);
  record_config["manifest"] = o.manifest;
  if (!o.resume.empty()) record_config["resume"] = o.resume;
  WriteJson(dir / "run.json", RunRecord(g, "pretrain", record_config));

  out << "encoder " << effective.encoder_preset << " (" << trainer->state().weights.ParamCount()
      << " parameters), K = " << effective.tokenizer.codebook_size << ", " << effective.steps << " steps\n";
  std::size_t last_logged = trainer->state().step;
  trainer->Run([&](const Checkpoint& ckpt) {
    char name[48];
    std::snprintf(name, sizeof(name), "step_%06llu.obts", static_cast<unsigned long long>(ckpt.step));
    const bool periodic = effective.checkpoint_every > 0 && ckpt.step % effective.checkpoint_every == 0;
    if (periodic) SaveCheckpoint(ckpt, dir / name);
    if (ckpt.step == effective.steps) SaveCheckpoint(ckpt, dir / "final.obts");
  });
  const std::vector<double>& history = trainer->state().loss_history;
  for (std::size_t s = last_logged; s < history.size(); ++s) {
    if ((s + 1) % o.log_every == 0 || s + 1 == history.size()) {
      char line[64];
      std::snprintf(line, sizeof(line), "step %zu loss %.6f\n", s + 1, history[s]);
      out << line;
    }
  }
  WriteJson(dir / "loss.json", {{"loss_history", history}});
  out << "wrote " << (dir / "final.obts").string() << "\n";
}

// ---- embed ----

struct EmbedOptions {
  std::vector<std::string> checkpoints;
  std::vector<std::string> names;
  std::vector<std::string> standins;
  std::string task;
  std::vector<std::string> clips;
  std::string out;
};

std::vector<std::string> SourceNames(const EmbedOptions& o) {
  if (!o.names.empty()) {
    if (o.names.size() != o.checkpoints.size()) {
      Fail(ErrorKind::kConfig, o.names.size(), " --name values for ", o.checkpoints.size(), " checkpoints");
    }
    return o.names;
  }
  std::vector<std::string> names;
  std::set<std::string> stems;
  for (const std::string& c : o.checkpoints) stems.insert(fs::path(c).stem().string());
  const bool clash = stems.size() != o.checkpoints.size();
  for (const std::string& c : o.checkpoints) {
    const fs::path p(c);
    names.push_back(clash ? p.parent_path().filename().string() + "_" + p.stem().string() : p.stem().string());
  }
  return names;
}

void EmbedCommand(const EmbedOptions& o, const Globals& g, std::ostream& out) {
  const RunConfig rc = LoadRunConfig(g);
  if (o.checkpoints.empty() && o.standins.empty()) {
    Fail(ErrorKind::kConfig, "embed needs at least one --checkpoint or --standin");
  }
  for (const std::string& s : o.standins) {
    if (s != kMelPoolSourceId) Fail(ErrorKind::kConfig, "unknown stand-in source '", s, "' (expected melpool)");
  }
  std::vector<std::string> clips = o.clips;
  if (!o.task.empty()) {
    RequireFile(o.task, "task file");
    const TaskSpec task = LoadTask(o.task);
    for (const auto* split : {&task.train, &task.valid, &task.test}) {
      for (const LabeledClip& c : *split) {
        if (!c.clip_path.empty()) clips.push_back(c.clip_path);
      }
    }
  }
  if (clips.empty()) Fail(ErrorKind::kConfig, "embed needs --task or --clips");
  for (const std::string& c : clips) RequireFile(c, "clip");
  std::set<std::string> file_names;
  for (const std::string& c : clips) {
    if (!file_names.insert(EmbeddingFileName(c)).second) {
      Fail(ErrorKind::kConfig, "two clips map to the embedding file ", EmbeddingFileName(c));
    }
  }

  const fs::path dir(o.out);
  const std::vector<std::string> names = SourceNames(o);
  json sources = json::array();
  for (std::size_t k = 0; k < o.checkpoints.size(); ++k) {
    RequireFile(o.checkpoints[k], "checkpoint");
    const Checkpoint ckpt = LoadCheckpoint(o.checkpoints[k]);
    const FrontendConfig frontend = ckpt.train_config.frontend;
    ParallelFor(clips.size(), rc.deterministic, [&](std::size_t i) {
      const PatchGrid grid = WaveformToPatches(LoadWav(clips[i]), frontend);
      SaveEmbedding(Encode(ckpt.weights, grid, {}, names[k]).sequence, dir / names[k] / EmbeddingFileName(clips[i]));
    });
    sources.push_back({{"name", names[k]}, {"checkpoint", o.checkpoints[k]}, {"step", ckpt.step}});
    out << names[k] << ": " << clips.size() << " embeddings\n";
  }
  for (const std::string& s : o.standins) {
    ParallelFor(clips.size(), rc.deterministic, [&](std::size_t i) {
      SaveEmbedding(MelPoolSequence(LoadWav(clips[i]), rc.frontend), dir / s / EmbeddingFileName(clips[i]));
    });
    sources.push_back({{"name", s}, {"frontend", ToJson(rc.frontend)}});
    out << s << ": " << clips.size() << " embeddings\n";
  }
  WriteJson(dir / "run.json", RunRecord(g, "embed", {{"sources", sources}, {"clips", clips}, {"task", o.task}}));
}

// ---- ensemble ----

struct EnsembleCliOptions {
  std::vector<std::string> inputs;
  std::string mode = "concat";
  std::string upsample = "nearest";
  bool standardize = false;
  std::string out;
};

void EnsembleCommand(const EnsembleCliOptions& o, const Globals& g, std::ostream& out) {
  if (o.inputs.empty()) Fail(ErrorKind::kConfig, "ensemble needs at least one --in");
  for (const std::string& in : o.inputs) RequireFile(in, "ensemble input");
  const EnsembleOptions options{ParseCombinerMode(o.mode), ParseUpsampleMode(o.upsample), o.standardize};
  const json config = {{"inputs", o.inputs},
                       {"mode", CombinerModeName(options.mode)},
                       {"upsample", UpsampleModeName(options.upsample)},
                       {"standardize", options.standardize}};
  const bool directories = fs::is_directory(o.inputs.front());
  for (const std::string& in : o.inputs) {
    if (fs::is_directory(in) != directories) Fail(ErrorKind::kConfig, "mix of files and directories in --in");
  }
  if (!directories) {
    std::vector<EmbeddingSequence> seqs;
    for (const std::string& in : o.inputs) seqs.push_back(LoadEmbedding(in));
    const EmbeddingSequence fused = EnsembleSequences(seqs, options);
    const fs::path target(o.out);
    SaveEmbedding(fused, target);
    fs::path record = target;
    record.replace_extension(".run.json");
    WriteJson(record, RunRecord(g, "ensemble", config));
    out << fused.source_id << ": N = " << fused.length() << ", h = " << fused.dim() << "\n";
    return;
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(o.inputs.front())) {
    if (entry.path().extension() == ".oemb") files.push_back(entry.path().filename().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) Fail(ErrorKind::kData, "no .oemb files in ", o.inputs.front());
  const fs::path dir(o.out);
  std::size_t n = 0, h = 0;
  for (const std::string& name : files) {
    std::vector<EmbeddingSequence> seqs;
    for (const std::string& in : o.inputs) {
      const fs::path p = fs::path(in) / name;
      if (!fs::exists(p)) Fail(ErrorKind::kData, "missing ", p.string(), " (present in ", o.inputs.front(), ")");
      seqs.push_back(LoadEmbedding(p));
    }
    const EmbeddingSequence fused = EnsembleSequences(seqs, options);
    n = fused.length();
    h = fused.dim();
    SaveEmbedding(fused, dir / name);
  }
  WriteJson(dir / "run.json", RunRecord(g, "ensemble", config));
  out << "fused " << files.size() << " clips: N = " << n << ", h = " << h << "\n";
}

// ---- probe ----

struct ProbeOptions {
  std::string task;
  std::vector<std::string> embeddings;
  std::string out;
  std::string system;
  std::optional<std::size_t> hidden_dim;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> batch_size;
  std::optional<double> lr;
  std::string upsample = "nearest";
  bool standardize = false;
};

fs::path EmbeddingPath(const LabeledClip& clip, const std::string& dir) {
  if (dir.empty()) {
    if (clip.oemb_path.empty()) Fail(ErrorKind::kConfig, "task item ", clip.clip_path, " has no oemb_path");
    return clip.oemb_path;
  }
  const std::string name =
      clip.clip_path.empty() ? fs::path(clip.oemb_path).filename().string() : EmbeddingFileName(clip.clip_path);
  return fs::path(dir) / name;
}

struct LoadedSplits {
  std::vector<EmbeddingSequence> train, valid, test;
  std::map<std::string, std::string> digests;
};

LoadedSplits LoadSplits(const TaskSpec& task, const std::string& dir) {
  LoadedSplits out;
  auto load = [&](const std::vector<LabeledClip>& clips, std::vector<EmbeddingSequence>& seqs) {
    for (const LabeledClip& c : clips) {
      const fs::path p = EmbeddingPath(c, dir);
      if (!fs::exists(p)) Fail(ErrorKind::kData, "embedding not found: ", p.string());
      const std::string bytes = ReadFileBytes(p);
      out.digests[p.string()] = DigestHex(Sha256(bytes));
      try {
        seqs.push_back(DecodeEmbedding(bytes));
      } catch (const Error& e) {
        Fail(e.kind(), p.string(), ": ", e.what());
      }
    }
  };
  load(task.train, out.train);
  load(task.valid, out.valid);
  load(task.test, out.test);
  return out;
}

void CheckUnchanged(const std::map<std::string, std::string>& digests) {
  for (const auto& [path, digest] : digests) {
    if (DigestHex(Sha256(ReadFileBytes(path))) != digest) {
      Fail(ErrorKind::kInvariant, "embedding file ", path, " changed during probing");
    }
  }
}

ProbeData Pool(const std::vector<EmbeddingSequence>& seqs, const std::vector<LabeledClip>& clips) {
  std::vector<Tensor> pooled;
  std::vector<std::vector<int>> labels;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    pooled.push_back(PoolClip(seqs[i]));
    labels.push_back(clips[i].labels);
  }
  return MakeProbeData(pooled, std::move(labels));
}

std::string DirName(const std::string& dir) {
  fs::path p(dir);
  if (p.filename().empty()) p = p.parent_path();
  return p.filename().string();
}

void ProbeCommand(const ProbeOptions& o, const Globals& g, std::ostream& out) {
  RunConfig rc = LoadRunConfig(g);
  ProbeConfig& pc = rc.probe;
  if (o.hidden_dim) pc.hidden_dim = *o.hidden_dim;
  if (o.epochs) pc.epochs = *o.epochs;
  if (o.patience) pc.patience = *o.patience;
  if (o.batch_size) pc.batch_size = *o.batch_size;
  if (o.lr) pc.learning_rate = *o.lr;
  ValidateProbeConfig(pc);
  RequireFile(o.task, "task file");
  const TaskSpec task = LoadTask(o.task);
  for (const std::string& d : o.embeddings) RequireFile(d, "embedding directory");
  const fs::path dir(o.out);
  json record_config = {{"task", o.task},
                        {"embeddings", o.embeddings},
                        {"probe", ToJson(pc)},
                        {"upsample", o.upsample},
                        {"standardize", o.standardize}};

  if (o.embeddings.size() >= 2) {
    std::vector<StudySource> sources;
    std::map<std::string, std::string> digests;
    for (const std::string& d : o.embeddings) {
      LoadedSplits s = LoadSplits(task, d);
      digests.insert(s.digests.begin(), s.digests.end());
      sources.push_back({DirName(d), std::move(s.train), std::move(s.valid), std::move(s.test)});
    }
    const StudyReport report = RunEnsembleStudy(sources, task, pc, ParseUpsampleMode(o.upsample), o.standardize);
    CheckUnchanged(digests);
    json doc = report.ToJson();
    if (!task.domain.empty()) doc["domain"] = task.domain;
    WriteJson(dir / "study.json", doc);
    WriteJson(dir / "run.json", RunRecord(g, "probe", record_config));
    for (const StudyEntry& e : report.entries) {
      char line[256];
      std::snprintf(line, sizeof(line), "%-40s %s %.4f\n", e.system.c_str(), e.test.metric.c_str(), e.test.value);
      out << line;
    }
    return;
  }

  const std::string source_dir = o.embeddings.empty() ? "" : o.embeddings.front();
  LoadedSplits s = LoadSplits(task, source_dir);
  const ProbeData train = Pool(s.train, task.train);
  const ProbeData valid = Pool(s.valid, task.valid);
  const ProbeData test = Pool(s.test, task.test);
  const ProbeWeights probe = TrainProbe(train, valid, task.kind, task.num_classes, pc);
  CheckUnchanged(s.digests);
  const Metrics test_metrics = Evaluate(probe, test);
  json doc = {{"task", task.name},
              {"kind", TaskKindName(task.kind)},
              {"system", !o.system.empty() ? o.system : source_dir.empty() ? "embeddings" : DirName(source_dir)},
              {"test", MetricsToJson(test_metrics)},
              {"best_epoch", probe.best_epoch}};
  if (valid.size() > 0) doc["valid"] = MetricsToJson(Evaluate(probe, valid));
  if (!task.domain.empty()) doc["domain"] = task.domain;
  WriteJson(dir / "metrics.json", doc);
  WriteJson(dir / "run.json", RunRecord(g, "probe", record_config));
  char line[128];
  std::snprintf(line, sizeof(line), "%s %s %.4f\n", doc["system"].get<std::string>().c_str(),
                test_metrics.metric.c_str(), test_metrics.value);
  out << line;
}

// ---- report ----

void ReportCommand(const std::vector<std::string>& files, const std::string& out_dir, int decimals,
                   const Globals& g, std::ostream& out) {
  std::vector<ResultRecord> records;
  for (const std::string& f : files) {
    RequireFile(f, "results file");
    const std::vector<ResultRecord> r = LoadResults(f);
    records.insert(records.end(), r.begin(), r.end());
  }
  if (records.empty()) Fail(ErrorKind::kValidation, "no results in the given files");
  const ResultTable table = BuildTable(records);
  const std::string markdown = RenderMarkdown(table, decimals);
  out << markdown;
  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    WriteFileBytes(dir / "report.md", markdown);
    WriteFileBytes(dir / "report.csv", RenderCsv(table));
    WriteJson(dir / "run.json", RunRecord(g, "report", {{"inputs", files}, {"decimals", decimals}}));
  }
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"obeats: masked-token audio encoder workbench"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  g.argv = args;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Run seed");
  app.add_flag("--deterministic", g.deterministic, "Single-threaded, bitwise reproducible execution");
  app.add_option("--config", g.config_path, "JSON run configuration; flags override it");

  MixtureOptions mix;
  auto* mixture = app.add_subcommand("mixture", "Corpus mixture accounting and sampling");
  mixture->require_subcommand(1);
  auto* ratios = mixture->add_subcommand("ratios", "Per-domain hours and ratios");
  ratios->add_option("--manifest", mix.manifest, "Dataset manifest")->required();
  ratios->add_option("--disable", mix.disable, "Dataset id to exclude (repeatable)");
  auto* sample = mixture->add_subcommand("sample", "Draw clips by target domain ratio");
  sample->add_option("--manifest", mix.manifest, "Dataset manifest")->required();
  sample->add_option("--disable", mix.disable, "Dataset id to exclude (repeatable)");
  sample->add_option("--spec", mix.spec, "speech-heavy or balanced");
  sample->add_option("--n", mix.n, "Number of draws");
  sample->add_option("--within", mix.within, "Within-domain weighting: hours or uniform");

  std::size_t preset_k = 64;
  auto* presets = app.add_subcommand("presets", "Encoder presets and their parameter counts");
  presets->add_option("--codebook-size", preset_k, "Codebook size K");

  std::string fixtures_out;
  std::size_t clips_per_class = 8;
  auto* fixtures = app.add_subcommand("fixtures", "Synthetic fixture corpus");
  fixtures->require_subcommand(1);
  auto* generate = fixtures->add_subcommand("generate", "Write the fixture corpus");
  generate->add_option("--out", fixtures_out, "Output directory")->required();
  generate->add_option("--clips-per-class", clips_per_class, "Clips per class");

  PretrainOptions pre;
  auto* pretrain = app.add_subcommand("pretrain", "Masked token prediction pretraining");
  pretrain->add_option("--manifest", pre.manifest, "Dataset manifest")->required();
  pretrain->add_option("--out", pre.out, "Output directory")->required();
  pretrain->add_option("--resume", pre.resume, "Continue from a checkpoint");
  pretrain->add_option("--preset", pre.preset, "base-toy or large-toy");
  pretrain->add_option("--mixture", pre.mixture, "speech-heavy or balanced");
  pretrain->add_option("--within", pre.within, "Within-domain weighting: hours or uniform");
  pretrain->add_option("--steps", pre.steps, "Optimizer steps");
  pretrain->add_option("--batch-size", pre.batch_size, "Clips per step");
  pretrain->add_option("--codebook-size", pre.codebook_size, "Tokenizer codebook size K");
  pretrain->add_option("--checkpoint-every", pre.checkpoint_every, "Periodic checkpoint interval");
  pretrain->add_option("--refit-tokenizer-every", pre.refit_every, "Tokenizer refit interval");
  pretrain->add_option("--warmup-steps", pre.warmup, "Linear learning-rate warmup");
  pretrain->add_option("--lr", pre.lr, "Adam learning rate");
  pretrain->add_option("--log-every", pre.log_every, "Loss print interval");

  EmbedOptions emb;
  auto* embed = app.add_subcommand("embed", "Write OEMB embedding sequences");
  embed->add_option("--checkpoint", emb.checkpoints, "Encoder checkpoint (repeatable)");
  embed->add_option("--name", emb.names, "Source name per checkpoint (repeatable)");
  embed->add_option("--standin", emb.standins, "Training-free source: melpool");
  embed->add_option("--task", emb.task, "Embed every clip of a task file");
  embed->add_option("--clips", emb.clips, "WAV files to embed");
  embed->add_option("--out", emb.out, "Output directory")->required();

  EnsembleCliOptions ens;
  auto* ensemble = app.add_subcommand("ensemble", "Align and combine embedding sequences");
  ensemble->add_option("--in", ens.inputs, "OEMB files or embedding directories")->required();
  ensemble->add_option("--mode", ens.mode, "concat or average");
  ensemble->add_option("--upsample", ens.upsample, "nearest or linear");
  ensemble->add_flag("--standardize", ens.standardize, "Per-source standardization before combining");
  ensemble->add_option("--out", ens.out, "Output file (for file inputs) or directory")->required();

  ProbeOptions pro;
  auto* probe = app.add_subcommand("probe", "Train and evaluate a probe on frozen embeddings");
  probe->add_option("--task", pro.task, "Task file")->required();
  probe->add_option("--embeddings", pro.embeddings, "Embedding directory; several run the ensemble study");
  probe->add_option("--out", pro.out, "Output directory")->required();
  probe->add_option("--system", pro.system, "System name in the metrics file");
  probe->add_option("--hidden-dim", pro.hidden_dim, "Hidden width, 0 for a linear probe");
  probe->add_option("--epochs", pro.epochs, "Maximum epochs");
  probe->add_option("--patience", pro.patience, "Early-stopping patience");
  probe->add_option("--batch-size", pro.batch_size, "Mini-batch size");
  probe->add_option("--lr", pro.lr, "Adam learning rate");
  probe->add_option("--upsample", pro.upsample, "Ensemble study upsampling: nearest or linear");
  probe->add_flag("--standardize", pro.standardize, "Ensemble study per-source standardization");

  std::vector<std::string> report_files;
  std::string report_out;
  int decimals = 3;
  auto* report = app.add_subcommand("report", "Render a results table");
  report->add_option("files", report_files, "Metrics, study or results files")->required();
  report->add_option("--out", report_out, "Directory for report.md and report.csv");
  report->add_option("--decimals", decimals, "Digits after the decimal point");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (ratios->parsed()) {
      MixtureRatiosCommand(mix, out);
    } else if (sample->parsed()) {
      MixtureSampleCommand(mix, g, out);
    } else if (presets->parsed()) {
      PresetsCommand(preset_k, out);
    } else if (generate->parsed()) {
      FixturesCommand(fixtures_out, clips_per_class, g, out);
    } else if (pretrain->parsed()) {
      PretrainCommand(pre, g, out);
    } else if (embed->parsed()) {
      EmbedCommand(emb, g, out);
    } else if (ensemble->parsed()) {
      EnsembleCommand(ens, g, out);
    } else if (probe->parsed()) {
      ProbeCommand(pro, g, out);
    } else if (report->parsed()) {
      ReportCommand(report_files, report_out, decimals, g, out);
    }
  } catch (const Error& e) {
    err << "error [" << ErrorKindName(e.kind()) << "]: " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

}  // namespace obeats::cli
