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
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "obeats/audio.h"
#include "obeats/frontend.h"
#include "testing.h"

namespace obeats {
namespace {

using testing::KindName;
using testing::RaisedKind;

void PutU32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void PutU16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

// A hand-assembled PCM16 mono file. declared_samples may exceed the samples
// actually written.
std::string MakeWav(const std::vector<std::int16_t>& samples, std::uint32_t declared_samples) {
  std::string s = "RIFF";
  PutU32(s, 36 + 2 * declared_samples);
  s += "WAVEfmt ";
  PutU32(s, 16);
  PutU16(s, 1);
  PutU16(s, 1);
  PutU32(s, 16000);
  PutU32(s, 32000);
  PutU16(s, 2);
  PutU16(s, 16);
  s += "data";
  PutU32(s, 2 * declared_samples);
  for (std::int16_t v : samples) PutU16(s, static_cast<std::uint16_t>(v));
  return s;
}

Waveform Tone(double hz, double amplitude, std::size_t n = 16000) {
  Waveform w;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / 16000.0);
  return w;
}

TEST(WavTest, SilenceDecodesToZeros) {
  const Waveform w = ParseWav(MakeWav(std::vector<std::int16_t>(16000, 0), 16000));
  EXPECT_EQ(w.sample_rate, 16000);
  ASSERT_EQ(w.samples.size(), 16000u);
  for (double v : w.samples) EXPECT_EQ(v, 0.0);
}

TEST(WavTest, FullScaleDecodesNearOne) {
  const Waveform w = ParseWav(MakeWav(std::vector<std::int16_t>(100, 32767), 100));
  for (double v : w.samples) EXPECT_NEAR(v, 0.99997, 1e-5);
}

TEST(WavTest, TruncatedDataIsFormatError) {
  const std::string bytes = MakeWav(std::vector<std::int16_t>(50, 7), 100);
  EXPECT_EQ(RaisedKind([&] { ParseWav(bytes); }), KindName(ErrorKind::kFormat));
}

TEST(WavTest, NonRiffIsFormatError) {
  EXPECT_EQ(RaisedKind([] { ParseWav("not a wav file at all"); }), KindName(ErrorKind::kFormat));
}

TEST(WavTest, EncodeParseRoundTrip) {
  Waveform w;
  w.samples = {0.0, 0.5, -0.5, -1.0, 0.25};
  const Waveform back = ParseWav(EncodeWav(w));
  EXPECT_EQ(back.samples, w.samples);
}

TEST(LogMelTest, ZeroWaveformIsLogFloorEverywhere) {
  MelParams p;
  Waveform w;
  w.samples.assign(16000, 0.0);
  const LogMelSpectrogram s = LogMel(w, p);
  EXPECT_GT(s.frames.rows(), 0u);
  EXPECT_EQ(s.frames.cols(), 64u);
  for (double v : s.frames.data()) EXPECT_DOUBLE_EQ(v, std::log(p.floor));
}

// HTK mel points computed here from the textbook formula.
std::vector<double> OracleCenters(int n_mels, double fmin, double fmax) {
  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  std::vector<double> out;
  const double lo = mel(fmin), hi = mel(fmax);
  for (int i = 1; i <= n_mels; ++i) out.push_back(hz(lo + (hi - lo) * i / (n_mels + 1)));
  return out;
}

TEST(LogMelTest, CenterFrequenciesMatchHtkOracle) {
  MelParams p;
  const std::vector<double> centers = MelCenterFrequencies(p);
  const std::vector<double> oracle = OracleCenters(p.n_mels, p.fmin, p.fmax);
  ASSERT_EQ(centers.size(), oracle.size());
  for (std::size_t i = 0; i < centers.size(); ++i) EXPECT_NEAR(centers[i], oracle[i], 1e-9);
}

TEST(LogMelTest, OneKilohertzToneArgmaxIsNearestCenter) {
  MelParams p;
  const std::vector<double> oracle = OracleCenters(p.n_mels, p.fmin, p.fmax);
  std::size_t nearest = 0;
  for (std::size_t i = 0; i < oracle.size(); ++i)
    if (std::abs(oracle[i] - 1000.0) < std::abs(oracle[nearest] - 1000.0)) nearest = i;
  const LogMelSpectrogram s = LogMel(Tone(1000.0, 0.5), p);
  for (std::size_t t = 0; t < s.frames.rows(); ++t) {
    std::size_t best = 0;
    for (std::size_t m = 0; m < s.frames.cols(); ++m)
      if (s.frames.at(t, m) > s.frames.at(t, best)) best = m;
    EXPECT_EQ(best, nearest) << "frame " << t;
  }
}

TEST(LogMelTest, DoublingAmplitudeAddsLogFour) {
  MelParams p;
  p.floor = 1e-12;
  Waveform quiet;
  Rng rng(5);
  quiet.samples.resize(8000);
  for (double& v : quiet.samples) v = rng.Uniform(-0.2, 0.2);
  Waveform loud = quiet;
  for (double& v : loud.samples) v *= 2.0;
  const LogMelSpectrogram a = LogMel(quiet, p), b = LogMel(loud, p);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    if (a.frames[i] < std::log(p.floor) + 10.0) continue;
    EXPECT_NEAR(b.frames[i] - a.frames[i], std::log(4.0), 1e-3);
    ++checked;
  }
  EXPECT_GT(checked, a.frames.size() / 2);
}

TEST(LogMelTest, FrameCountAndRate) {
  MelParams p;
  const LogMelSpectrogram s = LogMel(Tone(440.0, 0.3), p);
  EXPECT_EQ(s.frames.rows(), 1u + (16000u - 512u) / 160u);
  EXPECT_DOUBLE_EQ(s.frame_rate, 100.0);
}

TEST(LogMelTest, HopShiftShiftsFrames) {
  MelParams p;
  Rng rng(9);
  Waveform w;
  w.samples.resize(4000);
  for (double& v : w.samples) v = rng.Uniform(-1, 1);
  Waveform shifted;
  shifted.samples.assign(w.samples.begin() + p.hop, w.samples.end());
  const LogMelSpectrogram a = LogMel(w, p), b = LogMel(shifted, p);
  ASSERT_EQ(b.frames.rows() + 1, a.frames.rows());
  for (std::size_t t = 0; t < b.frames.rows(); ++t)
    for (std::size_t m = 0; m < b.frames.cols(); ++m) EXPECT_NEAR(b.frames.at(t, m), a.frames.at(t + 1, m), 1e-9);
}

TEST(LogMelTest, ParameterViolationsAreConfigErrors) {
  const Waveform w = Tone(440.0, 0.3, 1000);
  auto kind = [&](MelParams p) { return RaisedKind([&] { LogMel(w, p); }); };
  const std::string config = KindName(ErrorKind::kConfig);
  MelParams p;
  p.n_fft = 500;
  EXPECT_EQ(kind(p), config);
  p = {};
  p.hop = 1024;
  EXPECT_EQ(kind(p), config);
  p = {};
  p.fmax = 9000.0;
  EXPECT_EQ(kind(p), config);
  p = {};
  p.floor = 0.0;
  EXPECT_EQ(kind(p), config);
}

LogMelSpectrogram RandomSpec(std::size_t t, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  LogMelSpectrogram s;
  s.frames = testing::RandomTensor({t, m}, rng);
  s.frame_rate = 100.0;
  return s;
}

TEST(PatchifyTest, ExactTiling) {
  const PatchGrid g = Patchify(RandomSpec(32, 16, 1), 16);
  EXPECT_EQ(g.count(), 2u);
  EXPECT_EQ(g.rows_time, 2u);
  EXPECT_EQ(g.rows_freq, 1u);
  EXPECT_EQ(g.patches.cols(), 256u);
}

TEST(PatchifyTest, RemainderFrameDropped) {
  const PatchGrid g = Patchify(RandomSpec(33, 16, 1), 16);
  EXPECT_EQ(g.count(), 2u);
  EXPECT_EQ(g.rows_time, 2u);
}

TEST(PatchifyTest, UnpatchifyRecoversRetainedRegion) {
  const LogMelSpectrogram s = RandomSpec(37, 19, 2);
  const PatchGrid g = Patchify(s, 4);
  EXPECT_EQ(g.rows_time, 9u);
  EXPECT_EQ(g.rows_freq, 4u);
  const Tensor back = Unpatchify(g);
  ASSERT_EQ(back.rows(), 36u);
  ASSERT_EQ(back.cols(), 16u);
  for (std::size_t t = 0; t < 36; ++t)
    for (std::size_t m = 0; m < 16; ++m) EXPECT_EQ(back.at(t, m), s.frames.at(t, m));
}

TEST(PatchifyTest, PatchLayoutIsTimeMajor) {
  const LogMelSpectrogram s = RandomSpec(8, 8, 3);
  const PatchGrid g = Patchify(s, 4);
  // Patch (1, 0) is index rows_freq; its element (2, 3) is frame 6, bin 3.
  EXPECT_EQ(g.patches.at(g.rows_freq, 2 * 4 + 3), s.frames.at(6, 3));
}

TEST(FrontendTest, NormalizationAppliedBeforeTiling) {
  FrontendConfig config;
  config.patch_size = 8;
  const Waveform w = Tone(1000.0, 0.3);
  const LogMelSpectrogram raw = LogMel(w, config.mel);
  const PatchGrid g = WaveformToPatches(w, config);
  EXPECT_DOUBLE_EQ(g.patches.at(0, 0), (raw.frames.at(0, 0) - config.norm_mean) / config.norm_std);
}

TEST(FrontendTest, ResamplesToConfiguredRate) {
  FrontendConfig config;
  Waveform w = Tone(500.0, 0.3, 8000);
  w.sample_rate = 8000;
  const Waveform up = Resample(w, 16000);
  EXPECT_EQ(up.samples.size(), 16000u);
  EXPECT_EQ(WaveformToLogMel(w, config).frames.rows(), LogMel(up, config.mel).frames.rows());
}

TEST(FrontendTest, InvalidNormIsConfigError) {
  FrontendConfig config;
  config.norm_std = 0.0;
  EXPECT_EQ(RaisedKind([&] { ValidateFrontend(config); }), KindName(ErrorKind::kConfig));
}

}  // namespace
}  // namespace obeats
