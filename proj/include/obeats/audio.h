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

#ifndef OBEATS_AUDIO_H_
#define OBEATS_AUDIO_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace obeats {

struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;
};

// RIFF/WAVE, PCM 16-bit, mono only. Samples are scaled by 1/32768.
Waveform LoadWav(const std::filesystem::path& path);
Waveform ParseWav(std::string_view bytes);

// Writes PCM 16-bit mono; samples are clamped to the int16 range after
// scaling by 32768.
void WriteWav(const std::filesystem::path& path, const Waveform& wave);
std::string EncodeWav(const Waveform& wave);

// Linear-interpolation resampling.
Waveform Resample(const Waveform& wave, int target_rate);

}  // namespace obeats

#endif  // OBEATS_AUDIO_H_
