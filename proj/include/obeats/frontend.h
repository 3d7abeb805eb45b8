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

// Log-mel spectrogram frontend and ViT patch tiling.

#ifndef OBEATS_FRONTEND_H_
#define OBEATS_FRONTEND_H_

#include <cstddef>
#include <vector>

#include "obeats/audio.h"
#include "obeats/tensor.h"

namespace obeats {

struct MelParams {
  int n_fft = 512;
  int hop = 160;
  int n_mels = 64;
  double fmin = 0.0;
  double fmax = 8000.0;
  double floor = 1e-10;

  bool operator==(const MelParams&) const = default;
};

struct LogMelSpectrogram {
  Tensor frames;  // T x M
  double frame_rate = 0.0;
  MelParams params;
};

// Hann-windowed (periodic) power STFT without centering, HTK-scale
// triangular filterbank, natural log with an additive floor. Inputs shorter
// than n_fft are zero-padded to a single frame.
LogMelSpectrogram LogMel(const Waveform& wave, const MelParams& params);

double HzToMelHtk(double hz);
double MelToHzHtk(double mel);
// Center frequency (Hz) of each mel filter.
std::vector<double> MelCenterFrequencies(const MelParams& params);
// (n_fft / 2 + 1) x n_mels filterbank matrix.
Tensor MelFilterbank(const MelParams& params, int sample_rate);

struct PatchGrid {
  Tensor patches;  // P x (p * p), time-major patch order
  std::size_t rows_time = 0;
  std::size_t rows_freq = 0;
  std::size_t patch_size = 0;
  double frame_rate = 0.0;  // spectrogram frames per second

  std::size_t count() const { return rows_time * rows_freq; }
};

// Non-overlapping p x p tiles; trailing frames and bins that do not fill a
// whole tile are dropped. Patch (t, f) sits at index t * rows_freq + f and
// element (i, j) of a tile is frame t*p + i, mel bin f*p + j.
PatchGrid Patchify(const LogMelSpectrogram& spec, std::size_t patch_size);
Tensor Unpatchify(const PatchGrid& grid);

struct FrontendConfig {
  int sample_rate = 16000;
  MelParams mel;
  std::size_t patch_size = 16;
  // Applied to log-mel values before tiling: (x - norm_mean) / norm_std.
  double norm_mean = -4.5;
  double norm_std = 4.0;

  bool operator==(const FrontendConfig&) const = default;
};

void ValidateFrontend(const FrontendConfig& config);

// resample -> log-mel -> normalize -> patchify.
PatchGrid WaveformToPatches(const Waveform& wave, const FrontendConfig& config);
LogMelSpectrogram WaveformToLogMel(const Waveform& wave, const FrontendConfig& config);

}  // namespace obeats

#endif  // OBEATS_FRONTEND_H_
