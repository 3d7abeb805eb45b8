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


#include "obeats/fixtures.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "obeats/container.h"
#include "obeats/error.h"
#include "obeats/rng.h"

namespace obeats {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kBackgroundLevel = 0.002;
constexpr std::size_t kNoiseComponents = 80;

struct Table2Row {
  const char* id;
  Domain domain;
  double hours;
};

constexpr Table2Row kTable2[] = {
    {"audioset", Domain::kSound, 5000},     {"freesound", Domain::kSound, 4648},
    {"bbc-soundeffects", Domain::kSound, 1000}, {"vggsound", Domain::kSound, 548},
    {"cochlscene", Domain::kSound, 169},    {"epickitchen", Domain::kSound, 157},
    {"fma", Domain::kMusic, 7824},          {"mtg-jamendo", Domain::kMusic, 3701},
    {"yodas", Domain::kSpeech, 34759},      {"commonvoice", Domain::kSpeech, 16304},
    {"ears", Domain::kSpeech, 77},
};

enum ClassId { kToneLow, kToneHigh, kToneMix, kChirpUp, kChirpDown, kNoiseLow, kNoiseHigh, kNoiseBand };

void AddTone(std::vector<double>& out, double hz, double amplitude, double phase, int sample_rate) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += amplitude * std::sin(kTwoPi * hz * static_cast<double>(i) / sample_rate + phase);
  }
}

void AddChirp(std::vector<double>& out, double f0, double f1, double amplitude, int sample_rate) {
  const double duration = static_cast<double>(out.size()) / sample_rate;
  const double k = std::log(f1 / f0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double phase = kTwoPi * f0 * duration / k * (std::exp(k * t / duration) - 1.0);
    out[i] += amplitude * std::sin(phase);
  }
}

void AddBandNoise(std::vector<double>& out, double lo, double hi, double amplitude, int sample_rate, Rng& rng) {
  std::vector<double> noise(out.size(), 0.0);
  for (std::size_t c = 0; c < kNoiseComponents; ++c) AddTone(noise, rng.Uniform(lo, hi), 1.0, rng.Uniform(0.0, kTwoPi), sample_rate);
  double peak = 0.0;
  for (double v : noise) peak = std::max(peak, std::abs(v));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += amplitude * noise[i] / peak;
}

}  // namespace

std::vector<FixtureClass> FixtureClasses() {
  return {{"tone-low", Domain::kSpeech, {0}},   {"tone-high", Domain::kSpeech, {2}},
          {"tone-pair", Domain::kSpeech, {0, 2}}, {"chirp-up", Domain::kMusic, {0, 1, 2}},
          {"chirp-down", Domain::kMusic, {0, 1, 2}}, {"noise-low", Domain::kSound, {0}},
          {"noise-high", Domain::kSound, {2}},  {"noise-band", Domain::kSound, {1}}};
}

std::vector<FixtureClip> PlanCorpus(const CorpusSpec& spec) {
  if (spec.clips_per_class < 1) Fail(ErrorKind::kConfig, "clips_per_class must be >= 1");
  if (spec.sample_rate < 16000) Fail(ErrorKind::kConfig, "fixture sample rate must be >= 16000");
  if (!(spec.duration_s > 0.0)) Fail(ErrorKind::kConfig, "fixture duration must be > 0");
  const std::vector<FixtureClass> classes = FixtureClasses();
  std::vector<FixtureClip> clips;
  std::array<std::size_t, kNumDomains> domain_counter{};
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<const Table2Row*> datasets;
    for (const Table2Row& row : kTable2) {
      if (row.domain == classes[c].domain) datasets.push_back(&row);
    }
    for (std::size_t v = 0; v < spec.clips_per_class; ++v) {
      std::size_t& n = domain_counter[static_cast<std::size_t>(classes[c].domain)];
      FixtureClip clip;
      clip.class_index = c;
      clip.variant = v;
      clip.dataset_id = datasets[n % datasets.size()]->id;
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%02zu.wav", clip.dataset_id.c_str(), n);
      clip.relative_path = std::string(DomainName(classes[c].domain)) + "/" + name;
      ++n;
      Rng rng(DeriveKey(spec.seed, {c, v, 0}));
      const double frac = (static_cast<double>(v) + rng.Uniform()) / static_cast<double>(spec.clips_per_class);
      if (c == kToneLow || c == kToneMix) clip.tone_hz.push_back(250.0 + 600.0 * frac);
      if (c == kToneHigh) clip.tone_hz.push_back(3500.0 + 3000.0 * frac);
      if (c == kToneMix) clip.tone_hz.push_back(3500.0 + 3000.0 * rng.Uniform());
      clips.push_back(std::move(clip));
    }
  }
  return clips;
}

Waveform SynthesizeClip(const FixtureClip& clip, const CorpusSpec& spec) {
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate));
  const int sr = spec.sample_rate;
  Waveform wave;
  wave.sample_rate = sr;
  wave.samples.assign(n, 0.0f);
  Rng rng(DeriveKey(spec.seed, {clip.class_index, clip.variant, 1}));
  const double amplitude = clip.tone_hz.size() > 1 ? 0.3 : 0.5;
  for (double hz : clip.tone_hz) AddTone(wave.samples, hz, amplitude, rng.Uniform(0.0, kTwoPi), sr);
  switch (clip.class_index) {
    case kChirpUp:
      AddChirp(wave.samples, rng.Uniform(150.0, 250.0), rng.Uniform(5000.0, 7000.0), 0.5, sr);
      break;
    case kChirpDown:
      AddChirp(wave.samples, rng.Uniform(5000.0, 7000.0), rng.Uniform(150.0, 250.0), 0.5, sr);
      break;
    case kNoiseLow:
      AddBandNoise(wave.samples, 80.0, 1000.0, 0.5, sr, rng);
      break;
    case kNoiseHigh:
      AddBandNoise(wave.samples, 3000.0, 7500.0, 0.5, sr, rng);
      break;
    case kNoiseBand:
      AddBandNoise(wave.samples, 1000.0, 3000.0, 0.5, sr, rng);
      break;
    default:
      break;
  }
  for (double& s : wave.samples) s += kBackgroundLevel * rng.Normal();
  return wave;
}

DatasetManifest Table2Manifest() {
  DatasetManifest manifest;
  for (const Table2Row& row : kTable2) {
    manifest.entries.push_back(
        {row.id, row.domain, row.hours, std::string(DomainName(row.domain)) + "/" + row.id + "_*.wav", true});
  }
  return manifest;
}

CorpusSummary GenerateCorpus(const CorpusSpec& spec, const std::filesystem::path& out_dir) {
  CorpusSummary summary;
  summary.clips = PlanCorpus(spec);
  const std::vector<FixtureClass> classes = FixtureClasses();

  std::vector<std::pair<std::string, std::string>> files;
  for (const FixtureClip& clip : summary.clips) {
    files.emplace_back(clip.relative_path, EncodeWav(SynthesizeClip(clip, spec)));
  }

  summary.task.name = "fixture-classes";
  summary.task.kind = TaskKind::kMulticlass;
  summary.task.num_classes = classes.size();
  summary.bands_task.name = "fixture-bands";
  summary.bands_task.kind = TaskKind::kMultilabel;
  summary.bands_task.num_classes = 3;
  const std::size_t valid_begin = spec.clips_per_class / 2;
  const std::size_t test_begin = valid_begin + std::max<std::size_t>(1, spec.clips_per_class / 4);
  for (const FixtureClip& clip : summary.clips) {
    auto& split = clip.variant < valid_begin ? summary.task.train
                  : clip.variant < test_begin ? summary.task.valid
                                              : summary.task.test;
    auto& band_split = clip.variant < valid_begin ? summary.bands_task.train
                       : clip.variant < test_begin ? summary.bands_task.valid
                                                   : summary.bands_task.test;
    split.push_back({clip.relative_path, "", {static_cast<int>(clip.class_index)}});
    band_split.push_back({clip.relative_path, "", classes[clip.class_index].bands});
  }
  files.emplace_back("manifest.json", ManifestToJson(Table2Manifest()).dump(2) + "\n");
  files.emplace_back("task.json", TaskToJson(summary.task).dump(2) + "\n");
  files.emplace_back("task_bands.json", TaskToJson(summary.bands_task).dump(2) + "\n");

  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& [name, bytes] : files) {
    WriteFileBytes(out_dir / name, bytes);
    all += name;
    all.push_back('\0');
    all += bytes;
  }
  summary.digest = DigestHex(Sha256(all));
  return summary;
}

}  // namespace obeats
