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

// Multi-encoder ensembling by rate alignment and feature concatenation.
//
// Encoders fed the same clip can disagree on both the number of output
// vectors N (different frame rates) and their width h. Align() brings every
// sequence up to the largest N by upsampling; Combine() then joins the
// per-position vectors along the feature axis (or averages them, which needs
// equal widths). Concatenation keeps each source in its own column block, so
// a downstream affine layer can weight or ignore sources independently.
//
//   AlignedStack stack = Align(sequences);
//   EmbeddingSequence fused = Combine(stack, CombinerMode::kConcatenate);
//   EmbeddingSequence back = SliceSource(fused, stack.slices[1]);  // == stack.sequences[1]

#ifndef OBEATS_ENSEMBLE_H_
#define OBEATS_ENSEMBLE_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "obeats/audio.h"
#include "obeats/encoder.h"
#include "obeats/frontend.h"

namespace obeats {

enum class CombinerMode { kConcatenate, kAverage };
enum class UpsampleMode { kNearest, kLinear };

// "concat"/"concatenate" and "average"; kConfig otherwise.
CombinerMode ParseCombinerMode(std::string_view name);
std::string_view CombinerModeName(CombinerMode mode);
UpsampleMode ParseUpsampleMode(std::string_view name);
std::string_view UpsampleModeName(UpsampleMode mode);

// Output j of the nearest mode copies source floor(j * n / target_n).
std::vector<std::size_t> NearestSourceIndices(std::size_t n, std::size_t target_n);

// Stretches seq to target_n vectors. Linear mode samples source position
// (j + 0.5) * n / target_n - 0.5, clamped to [0, n - 1]. Fails with
// kDownsampleNotSupported when target_n < n.
EmbeddingSequence Upsample(const EmbeddingSequence& seq, std::size_t target_n,
                           UpsampleMode mode = UpsampleMode::kNearest);

struct SourceSlice {
  std::string source_id;
  std::size_t offset = 0;
  std::size_t width = 0;
};

struct AlignedStack {
  std::vector<EmbeddingSequence> sequences;  // equal length, input order
  std::vector<SourceSlice> slices;           // concatenation layout

  std::size_t length() const { return sequences.empty() ? 0 : sequences.front().length(); }
  std::size_t total_width() const;
};

// Upsamples every member to the maximum N. Fails with kEmptyInput on an
// empty list.
AlignedStack Align(std::span<const EmbeddingSequence> seqs,
                   UpsampleMode mode = UpsampleMode::kNearest);

// Concatenation is order-sensitive; averaging is not, and requires equal h
// (kDimension otherwise, there is no implicit projection).
EmbeddingSequence Combine(const AlignedStack& stack, CombinerMode mode);

// Column block of a concatenated sequence.
EmbeddingSequence SliceSource(const EmbeddingSequence& combined, const SourceSlice& slice);

// Per-feature zero mean, unit variance over the positions of one sequence.
EmbeddingSequence Standardize(const EmbeddingSequence& seq, double eps = 1e-8);

struct EnsembleOptions {
  CombinerMode mode = CombinerMode::kConcatenate;
  UpsampleMode upsample = UpsampleMode::kNearest;
  bool standardize = false;

  bool operator==(const EnsembleOptions&) const = default;
};

EmbeddingSequence EnsembleSequences(std::span<const EmbeddingSequence> seqs,
                                    const EnsembleOptions& options);

// A training-free embedding source: normalized log-mel frames averaged over
// non-overlapping windows of `window` frames (h = n_mels). With 10 ms hops and
// 32-frame windows it runs at half the rate of a 16-frame patch encoder, which
// makes it a convenient second-rate member for ensembles. kClipTooShort when
// the clip holds fewer than `window` frames.
inline constexpr char kMelPoolSourceId[] = "melpool";
EmbeddingSequence MelPoolSequence(const Waveform& wave, const FrontendConfig& frontend,
                                  std::size_t window = 32);

// OEMB embedding files: the shared container (container.h) with magic
// "OEMB", header {source_id, N, h, frame_rate} and N * h float32 values.
inline constexpr char kEmbeddingMagic[] = "OEMB";
inline constexpr std::uint32_t kEmbeddingVersion = 1;

std::string EncodeEmbedding(const EmbeddingSequence& seq);
EmbeddingSequence DecodeEmbedding(std::string_view bytes);
void SaveEmbedding(const EmbeddingSequence& seq, const std::filesystem::path& path);
EmbeddingSequence LoadEmbedding(const std::filesystem::path& path);

}  // namespace obeats

#endif  // OBEATS_ENSEMBLE_H_
