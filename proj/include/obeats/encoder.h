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

// ViT-style patch encoder: linear patch projection, learned absolute
// positions, a learned mask token, L pre-norm transformer blocks, a final
// norm and a token-prediction head.
//
// The encoder sees a 2-D grid of patches in time-major order. Its output
// sequence has one vector per time column of the grid, obtained by averaging
// the final per-patch outputs over the frequency rows of that column.

#ifndef OBEATS_ENCODER_H_
#define OBEATS_ENCODER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "obeats/autodiff.h"
#include "obeats/frontend.h"
#include "obeats/tensor.h"

namespace obeats {

struct EncoderConfig {
  std::string preset = "custom";
  std::size_t layers = 4;
  std::size_t dim = 96;
  std::size_t heads = 4;
  std::size_t ffn_dim = 384;
  std::size_t patch_size = 16;
  std::size_t codebook_size = 64;
  std::size_t max_positions = 256;
  double norm_eps = 1e-6;

  bool operator==(const EncoderConfig&) const = default;
};

// "base-toy" and "large-toy". Their parameter ratio is about 3.3, the ratio
// of a 300M large encoder to a 90M base one.
EncoderConfig EncoderPreset(std::string_view name, std::size_t codebook_size = 64);
std::vector<std::string> EncoderPresetNames();

void ValidateEncoderConfig(const EncoderConfig& config);

// Closed-form parameter count.
std::size_t ParamCount(const EncoderConfig& config);

// Every declared tensor, in storage order.
std::vector<std::pair<std::string, Shape>> EncoderTensorLayout(const EncoderConfig& config);

struct EncoderWeights {
  EncoderConfig config;
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  std::size_t ParamCount() const;
  const Tensor& Get(std::string_view name) const;
  Tensor& Get(std::string_view name);
  bool operator==(const EncoderWeights&) const = default;
};

// Xavier-uniform projections; U(-0.02, 0.02) positions, mask token and
// prediction head, so an untrained encoder predicts near-uniform tokens; zero
// biases and norm betas; unit norm gammas. Deterministic in (config, seed).
EncoderWeights InitEncoder(const EncoderConfig& config, std::uint64_t seed);

// The {o_n} sequence produced by one encoder for one input signal.
struct EmbeddingSequence {
  Tensor vectors;  // N x h
  double frame_rate = 0.0;
  std::string source_id;

  std::size_t length() const { return vectors.rank() == 2 ? vectors.rows() : 0; }
  std::size_t dim() const { return vectors.rank() == 2 ? vectors.cols() : 0; }
  bool operator==(const EmbeddingSequence&) const = default;
};

struct EncodeResult {
  EmbeddingSequence sequence;
  Tensor patch_outputs;           // P x d, after the final norm
  Tensor logits;                  // |mask| x K, rows follow `masked`
  std::vector<std::size_t> masked;  // sorted, unique
};

EncodeResult Encode(const EncoderWeights& weights, const PatchGrid& grid,
                    std::span<const std::size_t> mask = {},
                    std::string source_id = "encoder");

// Graph-level forward over a batch of clips, used for training.
struct ClipInput {
  const PatchGrid* grid = nullptr;
  std::vector<std::size_t> mask;
};

struct ClipForward {
  Var patch_outputs;  // P x d
  Var sequence;       // N x d
  Var logits;         // |mask| x K; only valid when has_logits
  bool has_logits = false;
  std::vector<std::size_t> masked;
};

std::vector<Var> BindEncoder(Graph& graph, const EncoderWeights& weights, bool trainable);
std::vector<ClipForward> EncoderForward(const EncoderConfig& config,
                                        std::span<const Var> params,
                                        std::span<const ClipInput> clips);

}  // namespace obeats

#endif  // OBEATS_ENCODER_H_
