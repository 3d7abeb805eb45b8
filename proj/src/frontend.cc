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

#include "obeats/frontend.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "obeats/error.h"

namespace obeats {
namespace {

// FFTW planning is not thread-safe; execution with private buffers is.
std::mutex& PlannerMutex() {
  static std::mutex mu;
  return mu;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * static_cast<std::size_t>(n))));
    out_.reset(static_cast<fftw_complex*>(
        fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n / 2 + 1))));
    std::lock_guard<std::mutex> lock(PlannerMutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_.get(), out_.get(), FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fftw_destroy_plan(plan_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_.get(); }
  void Execute() { fftw_execute(plan_); }
  double Power(int k) const {
    return out_.get()[k][0] * out_.get()[k][0] + out_.get()[k][1] * out_.get()[k][1];
  }

 private:
  int n_;
  std::unique_ptr<double, FftwFree> in_;
  std::unique_ptr<fftw_complex, FftwFree> out_;
  fftw_plan plan_;
};

bool IsPowerOfTwo(int n) { return n > 0 && (n & (n - 1)) == 0; }

void ValidateMel(const MelParams& p, int sample_rate) {
  if (sample_rate <= 0) Fail(ErrorKind::kConfig, "sample_rate must be positive");
  if (!IsPowerOfTwo(p.n_fft)) Fail(ErrorKind::kConfig, "n_fft = ", p.n_fft, " is not a power of two");
  if (p.hop < 1 || p.hop > p.n_fft) {
    Fail(ErrorKind::kConfig, "hop = ", p.hop, " must lie in [1, n_fft = ", p.n_fft, "]");
  }
  if (p.n_mels < 1) Fail(ErrorKind::kConfig, "n_mels must be >= 1");
  if (p.fmin < 0.0 || p.fmin >= p.fmax) {
    Fail(ErrorKind::kConfig, "need 0 <= fmin < fmax, got fmin = ", p.fmin, ", fmax = ", p.fmax);
  }
  if (p.fmax > sample_rate / 2.0) {
    Fail(ErrorKind::kConfig, "fmax = ", p.fmax, " exceeds Nyquist ", sample_rate / 2.0);
  }
  if (!(p.floor > 0.0)) Fail(ErrorKind::kConfig, "log floor must be > 0");
}

std::vector<double> MelEdges(const MelParams& params) {
  const double lo = HzToMelHtk(params.fmin);
  const double hi = HzToMelHtk(params.fmax);
  std::vector<double> edges(static_cast<std::size_t>(params.n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHzHtk(lo + (hi - lo) * static_cast<double>(i) /
                                   static_cast<double>(params.n_mels + 1));
  }
  return edges;
}

}  // namespace

double HzToMelHtk(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHzHtk(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> MelCenterFrequencies(const MelParams& params) {
  const std::vector<double> edges = MelEdges(params);
  return std::vector<double>(edges.begin() + 1, edges.end() - 1);
}

Tensor MelFilterbank(const MelParams& params, int sample_rate) {
  ValidateMel(params, sample_rate);
  const std::size_t bins = static_cast<std::size_t>(params.n_fft / 2 + 1);
  const std::size_t mels = static_cast<std::size_t>(params.n_mels);
  const std::vector<double> edges = MelEdges(params);
  Tensor fb({bins, mels});
  for (std::size_t k = 0; k < bins; ++k) {
    const double f = static_cast<double>(k) * sample_rate / params.n_fft;
    for (std::size_t m = 0; m < mels; ++m) {
      const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
      const double up = (f - left) / (center - left);
      const double down = (right - f) / (right - center);
      fb.at(k, m) = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

LogMelSpectrogram LogMel(const Waveform& wave, const MelParams& params) {
  ValidateMel(params, wave.sample_rate);
  if (wave.samples.empty()) Fail(ErrorKind::kData, "log_mel: empty waveform");
  const std::size_t n_fft = static_cast<std::size_t>(params.n_fft);
  const std::size_t hop = static_cast<std::size_t>(params.hop);
  const std::size_t len = wave.samples.size();
  const std::size_t frames = len < n_fft ? 1 : 1 + (len - n_fft) / hop;
  const std::size_t bins = n_fft / 2 + 1;
  const std::size_t mels = static_cast<std::size_t>(params.n_mels);

  std::vector<double> window(n_fft);
  for (std::size_t i = 0; i < n_fft; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(n_fft));
  }
  const Tensor fb = MelFilterbank(params, wave.sample_rate);

  LogMelSpectrogram out;
  out.params = params;
  out.frame_rate = static_cast<double>(wave.sample_rate) / static_cast<double>(hop);
  out.frames = Tensor({frames, mels});

  RealFft fft(params.n_fft);
  std::vector<double> power(bins);
  for (std::size_t t = 0; t < frames; ++t) {
    double* in = fft.input();
    for (std::size_t i = 0; i < n_fft; ++i) {
      const std::size_t s = t * hop + i;
      in[i] = s < len ? wave.samples[s] * window[i] : 0.0;
    }
    fft.Execute();
    for (std::size_t k = 0; k < bins; ++k) power[k] = fft.Power(static_cast<int>(k));
    for (std::size_t m = 0; m < mels; ++m) {
      double acc = 0.0;
      for (std::size_t k = 0; k < bins; ++k) acc += power[k] * fb.at(k, m);
      out.frames.at(t, m) = std::log(acc + params.floor);
    }
  }
  return out;
}

PatchGrid Patchify(const LogMelSpectrogram& spec, std::size_t patch_size) {
  if (patch_size < 1) Fail(ErrorKind::kConfig, "patch size must be >= 1");
  const std::size_t p = patch_size;
  const std::size_t m = spec.frames.cols();
  PatchGrid grid;
  grid.patch_size = p;
  grid.rows_time = spec.frames.rows() / p;
  grid.rows_freq = m / p;
  grid.frame_rate = spec.frame_rate;
  grid.patches = Tensor({grid.count(), p * p});
  for (std::size_t t = 0; t < grid.rows_time; ++t) {
    for (std::size_t f = 0; f < grid.rows_freq; ++f) {
      auto dst = grid.patches.row(t * grid.rows_freq + f);
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) dst[i * p + j] = spec.frames.at(t * p + i, f * p + j);
    }
  }
  return grid;
}

Tensor Unpatchify(const PatchGrid& grid) {
  const std::size_t p = grid.patch_size;
  Tensor out({grid.rows_time * p, grid.rows_freq * p});
  for (std::size_t t = 0; t < grid.rows_time; ++t) {
    for (std::size_t f = 0; f < grid.rows_freq; ++f) {
      auto src = grid.patches.row(t * grid.rows_freq + f);
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) out.at(t * p + i, f * p + j) = src[i * p + j];
    }
  }
  return out;
}

void ValidateFrontend(const FrontendConfig& config) {
  ValidateMel(config.mel, config.sample_rate);
  if (config.patch_size < 1) Fail(ErrorKind::kConfig, "patch_size must be >= 1");
  if (!(config.norm_std > 0.0)) Fail(ErrorKind::kConfig, "norm_std must be > 0");
}

LogMelSpectrogram WaveformToLogMel(const Waveform& wave, const FrontendConfig& config) {
  ValidateFrontend(config);
  LogMelSpectrogram spec = LogMel(Resample(wave, config.sample_rate), config.mel);
  if (config.norm_mean != 0.0 || config.norm_std != 1.0) {
    for (double& v : spec.frames.storage()) v = (v - config.norm_mean) / config.norm_std;
  }
  return spec;
}

PatchGrid WaveformToPatches(const Waveform& wave, const FrontendConfig& config) {
  return Patchify(WaveformToLogMel(wave, config), config.patch_size);
}

}  // namespace obeats
