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


// Deterministic synthetic corpus: 8 signal classes in three pseudo-domains
// (tones as "speech", chirps as "music", band-limited noise as "sound"),
// written as WAV files with a dataset manifest and probe task files.

#ifndef OBEATS_FIXTURES_H_
#define OBEATS_FIXTURES_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "obeats/audio.h"
#include "obeats/mixture.h"
#include "obeats/probe.h"

namespace obeats {

struct CorpusSpec {
  std::size_t clips_per_class = 8;
  double duration_s = 1.0;
  int sample_rate = 16000;
  std::uint64_t seed = 0;
};

struct FixtureClass {
  std::string name;
  Domain domain;
  std::vector<int> bands;  // occupied bands: 0 below 1 kHz, 1 for 1-3 kHz, 2 above 3 kHz
};

// The 8 classes, in label order.
std::vector<FixtureClass> FixtureClasses();

struct FixtureClip {
  std::string relative_path;  // e.g. "speech/yodas_00.wav"
  std::size_t class_index = 0;
  std::size_t variant = 0;
  std::string dataset_id;
  std::vector<double> tone_hz;  // component frequencies of tone classes
};

// The corpus layout without any audio: classes are spread round-robin over
// the datasets of their domain.
std::vector<FixtureClip> PlanCorpus(const CorpusSpec& spec);

Waveform SynthesizeClip(const FixtureClip& clip, const CorpusSpec& spec);

// The Table 2 data sources with their hours; path globs point at the fixture
// corpus layout ("<domain>/<id>_*.wav").
DatasetManifest Table2Manifest();

struct CorpusSummary {
  std::vector<FixtureClip> clips;
  TaskSpec task;        // multiclass over the 8 classes
  TaskSpec bands_task;  // multilabel over the 3 frequency bands
  std::string digest;   // SHA-256 over every written file, hex
};

// Writes the WAV files, manifest.json, task.json and task_bands.json.
// Splits per class: variants 0-3 train, 4-5 valid, the rest test.
CorpusSummary GenerateCorpus(const CorpusSpec& spec, const std::filesystem::path& out_dir);

}  // namespace obeats

#endif  // OBEATS_FIXTURES_H_
