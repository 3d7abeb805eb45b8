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

#include "obeats/ensemble.h"

#include <algorithm>
#include <cmath>

#include "obeats/container.h"
#include "obeats/error.h"

namespace obeats {

CombinerMode ParseCombinerMode(std::string_view name) {
  if (name == "concat" || name == "concatenate") return CombinerMode::kConcatenate;
  if (name == "average") return CombinerMode::kAverage;
  Fail(ErrorKind::kConfig, "unknown combiner mode '", name, "' (expected concat or average)");
}

std::string_view CombinerModeName(CombinerMode mode) {
  return mode == CombinerMode::kConcatenate ? "concat" : "average";
}

UpsampleMode ParseUpsampleMode(std::string_view name) {
  if (name == "nearest") return UpsampleMode::kNearest;
  if (name == "linear") return UpsampleMode::kLinear;
  Fail(ErrorKind::kConfig, "unknown upsample mode '", name, "' (expected nearest or linear)");
}

std::string_view UpsampleModeName(UpsampleMode mode) {
  return mode == UpsampleMode::kNearest ? "nearest" : "linear";
}

std::vector<std::size_t> NearestSourceIndices(std::size_t n, std::size_t target_n) {
  std::vector<std::size_t> idx(target_n);
  for (std::size_t j = 0; j < target_n; ++j) idx[j] = j * n / target_n;
  return idx;
}

EmbeddingSequence Upsample(const EmbeddingSequence& seq, std::size_t target_n, UpsampleMode mode) {
  const std::size_t n = seq.length(), h = seq.dim();
  if (n == 0) Fail(ErrorKind::kEmptyInput, "upsample of an empty sequence");
  if (target_n < n) {
    Fail(ErrorKind::kDownsampleNotSupported, "cannot resample ", seq.source_id, " from N = ", n,
         " down to ", target_n, "; only upsampling is supported");
  }
  if (target_n == n) return seq;
  EmbeddingSequence out;
  out.source_id = seq.source_id;
  out.frame_rate = seq.frame_rate * static_cast<double>(target_n) / static_cast<double>(n);
  out.vectors = Tensor({target_n, h});
  if (mode == UpsampleMode::kNearest) {
    const std::vector<std::size_t> idx = NearestSourceIndices(n, target_n);
    for (std::size_t j = 0; j < target_n; ++j) {
      auto src = seq.vectors.row(idx[j]);
      std::copy(src.begin(), src.end(), out.vectors.row(j).begin());
    }
    return out;
  }
  const double ratio = static_cast<double>(n) / static_cast<double>(target_n);
  for (std::size_t j = 0; j < target_n; ++j) {
    const double x = std::clamp((static_cast<double>(j) + 0.5) * ratio - 0.5, 0.0,
                                static_cast<double>(n - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(x));
    const std::size_t i1 = std::min(i0 + 1, n - 1);
    const double frac = x - static_cast<double>(i0);
    auto a = seq.vectors.row(i0);
    auto b = seq.vectors.row(i1);
    auto dst = out.vectors.row(j);
    for (std::size_t c = 0; c < h; ++c) dst[c] = a[c] + frac * (b[c] - a[c]);
  }
  return out;
}

std::size_t AlignedStack::total_width() const {
  std::size_t w = 0;
  for (const SourceSlice& s : slices) w += s.width;
  return w;
}

AlignedStack Align(std::span<const EmbeddingSequence> seqs, UpsampleMode mode) {
  if (seqs.empty()) Fail(ErrorKind::kEmptyInput, "align needs at least one sequence");
  std::size_t target = 0;
  for (const EmbeddingSequence& s : seqs) target = std::max(target, s.length());
  AlignedStack stack;
  std::size_t offset = 0;
  for (const EmbeddingSequence& s : seqs) {
    stack.sequences.push_back(Upsample(s, target, mode));
    stack.slices.push_back({s.source_id, offset, s.dim()});
    offset += s.dim();
  }
  return stack;
}

EmbeddingSequence Combine(const AlignedStack& stack, CombinerMode mode) {
  if (stack.sequences.empty()) Fail(ErrorKind::kEmptyInput, "combine of an empty stack");
  const std::size_t n = stack.length();
  for (const EmbeddingSequence& s : stack.sequences) {
    if (s.length() != n) Fail(ErrorKind::kDimension, "stack members disagree on N");
  }
  EmbeddingSequence out;
  out.frame_rate = stack.sequences.front().frame_rate;
  std::string ids;
  for (const EmbeddingSequence& s : stack.sequences) ids += (ids.empty() ? "" : "+") + s.source_id;

  if (mode == CombinerMode::kConcatenate) {
    const std::size_t width = stack.total_width();
    out.vectors = Tensor({n, width});
    for (std::size_t k = 0; k < stack.sequences.size(); ++k) {
      const SourceSlice& sl = stack.slices[k];
      const Tensor& v = stack.sequences[k].vectors;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < sl.width; ++c) out.vectors.at(i, sl.offset + c) = v.at(i, c);
    }
    out.source_id = "concat(" + ids + ")";
    return out;
  }

  const std::size_t h = stack.sequences.front().dim();
  for (const EmbeddingSequence& s : stack.sequences) {
    if (s.dim() != h) {
      Fail(ErrorKind::kDimension, "average needs equal widths: ", stack.sequences.front().source_id,
           " has h = ", h, " but ", s.source_id, " has h = ", s.dim());
    }
  }
  out.vectors = Tensor({n, h});
  for (const EmbeddingSequence& s : stack.sequences)
    for (std::size_t i = 0; i < n * h; ++i) out.vectors[i] += s.vectors[i];
  const double inv = 1.0 / static_cast<double>(stack.sequences.size());
  for (double& v : out.vectors.storage()) v *= inv;
  out.source_id = "average(" + ids + ")";
  return out;
}

EmbeddingSequence SliceSource(const EmbeddingSequence& combined, const SourceSlice& slice) {
  if (slice.offset + slice.width > combined.dim()) {
    Fail(ErrorKind::kIndex, "slice [", slice.offset, ", ", slice.offset + slice.width,
         ") exceeds width ", combined.dim());
  }
  EmbeddingSequence out;
  out.source_id = slice.source_id;
  out.frame_rate = combined.frame_rate;
  out.vectors = Tensor({combined.length(), slice.width});
  for (std::size_t i = 0; i < combined.length(); ++i)
    for (std::size_t c = 0; c < slice.width; ++c)
      out.vectors.at(i, c) = combined.vectors.at(i, slice.offset + c);
  return out;
}

EmbeddingSequence Standardize(const EmbeddingSequence& seq, double eps) {
  EmbeddingSequence out = seq;
  const std::size_t n = seq.length(), h = seq.dim();
  for (std::size_t c = 0; c < h; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += seq.vectors.at(i, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = seq.vectors.at(i, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < n; ++i) out.vectors.at(i, c) = (seq.vectors.at(i, c) - mean) * inv;
  }
  return out;
}

EmbeddingSequence EnsembleSequences(std::span<const EmbeddingSequence> seqs,
                                    const EnsembleOptions& options) {
  AlignedStack stack = Align(seqs, options.upsample);
  if (options.standardize) {
    for (EmbeddingSequence& s : stack.sequences) s = Standardize(s);
  }
  return Combine(stack, options.mode);
}

EmbeddingSequence MelPoolSequence(const Waveform& wave, const FrontendConfig& frontend, std::size_t window) {
  if (window < 1) Fail(ErrorKind::kConfig, "pooling window must be >= 1");
  const LogMelSpectrogram spec = WaveformToLogMel(wave, frontend);
  const std::size_t n = spec.frames.rows() / window, h = spec.frames.cols();
  if (n == 0) {
    Fail(ErrorKind::kClipTooShort, "clip has ", spec.frames.rows(), " frames, fewer than one pooling window of ",
         window);
  }
  EmbeddingSequence out;
  out.source_id = kMelPoolSourceId;
  out.frame_rate = spec.frame_rate / static_cast<double>(window);
  out.vectors = Tensor({n, h});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < window; ++f)
      for (std::size_t c = 0; c < h; ++c) out.vectors.at(i, c) += spec.frames.at(i * window + f, c);
    for (std::size_t c = 0; c < h; ++c) out.vectors.at(i, c) /= static_cast<double>(window);
  }
  return out;
}

std::string EncodeEmbedding(const EmbeddingSequence& seq) {
  Container c;
  c.version = kEmbeddingVersion;
  c.header = {{"source_id", seq.source_id},
              {"N", seq.length()},
              {"h", seq.dim()},
              {"frame_rate", seq.frame_rate}};
  c.payload.reserve(seq.vectors.size());
  for (double v : seq.vectors.data()) c.payload.push_back(static_cast<float>(v));
  return EncodeContainer(kEmbeddingMagic, c);
}

EmbeddingSequence DecodeEmbedding(std::string_view bytes) {
  const Container c = DecodeContainer(bytes, kEmbeddingMagic, kEmbeddingVersion);
  EmbeddingSequence seq;
  std::size_t n = 0, h = 0;
  try {
    seq.source_id = c.header.at("source_id").get<std::string>();
    n = c.header.at("N").get<std::size_t>();
    h = c.header.at("h").get<std::size_t>();
    seq.frame_rate = c.header.at("frame_rate").get<double>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kCorruption, "embedding header: ", e.what());
  }
  if (n * h != c.payload.size()) {
    Fail(ErrorKind::kCorruption, "embedding header promises ", n, " x ", h, " values, payload has ",
         c.payload.size());
  }
  seq.vectors = Tensor({n, h});
  for (std::size_t i = 0; i < c.payload.size(); ++i) seq.vectors[i] = c.payload[i];
  return seq;
}

void SaveEmbedding(const EmbeddingSequence& seq, const std::filesystem::path& path) {
  WriteFileBytes(path, EncodeEmbedding(seq));
}

EmbeddingSequence LoadEmbedding(const std::filesystem::path& path) {
  try {
    return DecodeEmbedding(ReadFileBytes(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    Fail(e.kind(), path.string(), ": ", e.what());
  }
}

}  // namespace obeats
