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

#include "obeats/audio.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>

#include "obeats/container.h"
#include "obeats/error.h"

namespace obeats {
namespace {

std::uint32_t U32(std::string_view b, std::size_t off) {
  std::uint32_t v;
  std::memcpy(&v, b.data() + off, 4);
  return v;
}

std::uint16_t U16(std::string_view b, std::size_t off) {
  std::uint16_t v;
  std::memcpy(&v, b.data() + off, 2);
  return v;
}

void PutU32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }
void PutU16(std::string& out, std::uint16_t v) { out.append(reinterpret_cast<const char*>(&v), 2); }

}  // namespace

Waveform ParseWav(std::string_view bytes) {
  if (bytes.size() < 12) Fail(ErrorKind::kFormat, "wav: file shorter than RIFF header");
  if (bytes.substr(0, 4) != "RIFF") Fail(ErrorKind::kFormat, "wav: missing RIFF tag");
  if (bytes.substr(8, 4) != "WAVE") Fail(ErrorKind::kFormat, "wav: RIFF form is not WAVE");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string_view id = bytes.substr(pos, 4);
    const std::uint32_t size = U32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + size > bytes.size()) {
        Fail(ErrorKind::kFormat, "wav: fmt chunk truncated");
      }
      format = U16(bytes, body);
      channels = U16(bytes, body + 2);
      rate = U32(bytes, body + 4);
      bits = U16(bytes, body + 14);
      have_fmt = true;
      if (format != 1) Fail(ErrorKind::kFormat, "wav: fmt.audio_format = ", format, " (PCM = 1 required)");
      if (channels != 1) Fail(ErrorKind::kFormat, "wav: fmt.channels = ", channels, " (mono required)");
      if (bits != 16) Fail(ErrorKind::kFormat, "wav: fmt.bits_per_sample = ", bits, " (16 required)");
      if (rate == 0) Fail(ErrorKind::kFormat, "wav: fmt.sample_rate = 0");
    } else if (id == "data") {
      if (!have_fmt) Fail(ErrorKind::kFormat, "wav: data chunk before fmt chunk");
      if (body + size > bytes.size()) {
        Fail(ErrorKind::kFormat, "wav: data.size = ", size, " but only ", bytes.size() - body,
             " bytes follow (truncated)");
      }
      if (size % 2 != 0) Fail(ErrorKind::kFormat, "wav: data.size = ", size, " is not whole samples");
      Waveform wave;
      wave.sample_rate = static_cast<int>(rate);
      wave.samples.resize(size / 2);
      for (std::size_t i = 0; i < wave.samples.size(); ++i) {
        std::int16_t s;
        std::memcpy(&s, bytes.data() + body + 2 * i, 2);
        wave.samples[i] = static_cast<double>(s) / 32768.0;
      }
      if (wave.samples.empty()) Fail(ErrorKind::kFormat, "wav: data.size = 0 (empty waveform)");
      return wave;
    }
    pos = body + size + (size & 1u);
  }
  Fail(ErrorKind::kFormat, have_fmt ? "wav: missing data chunk" : "wav: missing fmt chunk");
}

Waveform LoadWav(const std::filesystem::path& path) {
  try {
    return ParseWav(ReadFileBytes(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kFormat) Fail(ErrorKind::kFormat, path.string(), ": ", e.what());
    throw;
  }
}

std::string EncodeWav(const Waveform& wave) {
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(wave.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out.append("RIFF");
  PutU32(out, 36 + data_bytes);
  out.append("WAVE");
  out.append("fmt ");
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(wave.sample_rate));
  PutU32(out, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  out.append("data");
  PutU32(out, data_bytes);
  for (double x : wave.samples) {
    const double scaled = std::round(x * 32768.0);
    const auto s = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    PutU16(out, static_cast<std::uint16_t>(s));
  }
  return out;
}

void WriteWav(const std::filesystem::path& path, const Waveform& wave) {
  WriteFileBytes(path, EncodeWav(wave));
}

Waveform Resample(const Waveform& wave, int target_rate) {
  if (target_rate <= 0) Fail(ErrorKind::kConfig, "resample: target rate must be positive");
  if (wave.sample_rate == target_rate) return wave;
  const std::size_t n_in = wave.samples.size();
  const auto n_out = static_cast<std::size_t>(
      std::floor(static_cast<double>(n_in) * target_rate / wave.sample_rate));
  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(std::max<std::size_t>(n_out, 1));
  const double step = static_cast<double>(wave.sample_rate) / target_rate;
  for (std::size_t j = 0; j < out.samples.size(); ++j) {
    const double x = static_cast<double>(j) * step;
    const auto i0 = static_cast<std::size_t>(x);
    const double frac = x - static_cast<double>(i0);
    const double a = wave.samples[std::min(i0, n_in - 1)];
    const double b = wave.samples[std::min(i0 + 1, n_in - 1)];
    out.samples[j] = a + frac * (b - a);
  }
  return out;
}

}  // namespace obeats
