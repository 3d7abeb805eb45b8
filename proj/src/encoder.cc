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

#include "obeats/encoder.h"

#include <algorithm>
#include <cmath>

#include "obeats/error.h"
#include "obeats/rng.h"

namespace obeats {
namespace {

constexpr std::size_t kStemTensors = 4;   // patch weight, patch bias, positions, mask token
constexpr std::size_t kBlockTensors = 12;

enum BlockSlot : std::size_t {
  kNorm1Gamma,
  kNorm1Beta,
  kQkvWeight,
  kQkvBias,
  kProjWeight,
  kProjBias,
  kNorm2Gamma,
  kNorm2Beta,
  kFc1Weight,
  kFc1Bias,
  kFc2Weight,
  kFc2Bias,
};

std::size_t BlockIndex(std::size_t layer, BlockSlot slot) {
  return kStemTensors + layer * kBlockTensors + slot;
}

std::size_t TailIndex(const EncoderConfig& c) { return kStemTensors + c.layers * kBlockTensors; }

}  // namespace

EncoderConfig EncoderPreset(std::string_view name, std::size_t codebook_size) {
  EncoderConfig c;
  c.codebook_size = codebook_size;
  if (name == "base-toy") {
    c.preset = "base-toy";
    c.layers = 4;
    c.dim = 96;
    c.heads = 4;
    c.ffn_dim = 384;
  } else if (name == "large-toy") {
    c.preset = "large-toy";
    c.layers = 8;
    c.dim = 128;
    c.heads = 8;
    c.ffn_dim = 512;
  } else {
    Fail(ErrorKind::kConfig, "unknown encoder preset '", name, "' (expected base-toy or large-toy)");
  }
  return c;
}

std::vector<std::string> EncoderPresetNames() { return {"base-toy", "large-toy"}; }

void ValidateEncoderConfig(const EncoderConfig& c) {
  if (c.dim == 0 || c.heads == 0 || c.ffn_dim == 0 || c.patch_size == 0 || c.max_positions == 0) {
    Fail(ErrorKind::kConfig, "encoder dims must be positive");
  }
  if (c.codebook_size < 2) Fail(ErrorKind::kConfig, "codebook_size must be >= 2");
  if (c.dim % c.heads != 0) {
    Fail(ErrorKind::kConfig, "model dim ", c.dim, " is not divisible by heads ", c.heads);
  }
  if (!(c.norm_eps > 0.0)) Fail(ErrorKind::kConfig, "norm_eps must be > 0");
}

std::vector<std::pair<std::string, Shape>> EncoderTensorLayout(const EncoderConfig& c) {
  ValidateEncoderConfig(c);
  const std::size_t d = c.dim, p2 = c.patch_size * c.patch_size;
  std::vector<std::pair<std::string, Shape>> layout = {
      {"patch_embed.weight", {p2, d}},
      {"patch_embed.bias", {d}},
      {"pos_embed", {c.max_positions, d}},
      {"mask_token", {d}},
  };
  for (std::size_t i = 0; i < c.layers; ++i) {
    const std::string b = "blocks." + std::to_string(i) + ".";
    layout.insert(layout.end(), {
                                    {b + "norm1.gamma", {d}},
                                    {b + "norm1.beta", {d}},
                                    {b + "attn.qkv.weight", {d, 3 * d}},
                                    {b + "attn.qkv.bias", {3 * d}},
                                    {b + "attn.proj.weight", {d, d}},
                                    {b + "attn.proj.bias", {d}},
                                    {b + "norm2.gamma", {d}},
                                    {b + "norm2.beta", {d}},
                                    {b + "mlp.fc1.weight", {d, c.ffn_dim}},
                                    {b + "mlp.fc1.bias", {c.ffn_dim}},
                                    {b + "mlp.fc2.weight", {c.ffn_dim, d}},
                                    {b + "mlp.fc2.bias", {d}},
                                });
  }
  // A zero-layer stack is the identity; it carries no final norm either.
  if (c.layers > 0) {
    layout.push_back({"norm.gamma", {d}});
    layout.push_back({"norm.beta", {d}});
  }
  layout.push_back({"head.weight", {d, c.codebook_size}});
  layout.push_back({"head.bias", {c.codebook_size}});
  return layout;
}

std::size_t ParamCount(const EncoderConfig& c) {
  ValidateEncoderConfig(c);
  const std::size_t d = c.dim, f = c.ffn_dim, k = c.codebook_size;
  const std::size_t p2 = c.patch_size * c.patch_size;
  const std::size_t stem = p2 * d + d + c.max_positions * d + d;
  const std::size_t block = 4 * d + (d * 3 * d + 3 * d) + (d * d + d) + (d * f + f) + (f * d + d);
  const std::size_t final_norm = c.layers > 0 ? 2 * d : 0;
  const std::size_t head = d * k + k;
  return stem + c.layers * block + final_norm + head;
}

std::size_t EncoderWeights::ParamCount() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors) n += t.size();
  return n;
}

const Tensor& EncoderWeights::Get(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return tensors[i];
  Fail(ErrorKind::kIndex, "no encoder tensor named '", name, "'");
}

Tensor& EncoderWeights::Get(std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this).Get(name));
}

EncoderWeights InitEncoder(const EncoderConfig& config, std::uint64_t seed) {
  EncoderWeights w;
  w.config = config;
  const auto layout = EncoderTensorLayout(config);
  for (std::size_t idx = 0; idx < layout.size(); ++idx) {
    const auto& [name, shape] = layout[idx];
    Tensor t(shape, 0.0);
    Rng rng(DeriveKey(seed, {idx}));
    const bool is_gamma = name.ends_with(".gamma");
    const bool is_bias = name.ends_with(".bias") || name.ends_with(".beta");
    if (is_gamma) {
      t.Fill(1.0);
    } else if (is_bias) {
      // zeros
    } else if (name == "pos_embed" || name == "mask_token" || name == "head.weight") {
      for (double& v : t.storage()) v = rng.Uniform(-0.02, 0.02);
    } else {
      const double fan_in = static_cast<double>(shape[0]);
      const double fan_out = static_cast<double>(shape[1]);
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      for (double& v : t.storage()) v = rng.Uniform(-bound, bound);
    }
    w.names.push_back(name);
    w.tensors.push_back(std::move(t));
  }
  return w;
}

std::vector<Var> BindEncoder(Graph& graph, const EncoderWeights& weights, bool trainable) {
  std::vector<Var> vars;
  vars.reserve(weights.tensors.size());
  for (const Tensor& t : weights.tensors) {
    vars.push_back(trainable ? graph.Param(t) : graph.Constant(t));
  }
  return vars;
}

std::vector<ClipForward> EncoderForward(const EncoderConfig& c, std::span<const Var> params,
                                        std::span<const ClipInput> clips) {
  if (clips.empty()) Fail(ErrorKind::kEmptyInput, "encoder forward over zero clips");
  const std::size_t expected = TailIndex(c) + (c.layers > 0 ? 2 : 0) + 2;
  if (params.size() != expected) {
    Fail(ErrorKind::kDimension, "encoder expects ", expected, " tensors, got ", params.size());
  }
  Graph& g = *params.front().graph;
  const std::size_t d = c.dim, heads = c.heads, head_dim = c.dim / c.heads;
  const std::size_t p2 = c.patch_size * c.patch_size;

  std::vector<Var> inputs;
  std::vector<std::size_t> offsets, counts, positions, masked_global;
  std::vector<std::vector<std::size_t>> masked_local(clips.size());
  std::size_t total = 0;
  for (std::size_t b = 0; b < clips.size(); ++b) {
    const PatchGrid& grid = *clips[b].grid;
    const std::size_t n = grid.count();
    if (n == 0) Fail(ErrorKind::kData, "clip ", b, " has no patches");
    if (grid.patch_size != c.patch_size || grid.patches.cols() != p2) {
      Fail(ErrorKind::kDimension, "patch size ", grid.patch_size, " does not match encoder patch size ",
           c.patch_size);
    }
    if (n > c.max_positions) {
      Fail(ErrorKind::kCapacity, "clip has ", n, " patches but the encoder holds ", c.max_positions,
           " positions");
    }
    auto& local = masked_local[b];
    local = clips[b].mask;
    std::sort(local.begin(), local.end());
    local.erase(std::unique(local.begin(), local.end()), local.end());
    for (std::size_t m : local) {
      if (m >= n) Fail(ErrorKind::kIndex, "mask index ", m, " outside [0, ", n, ")");
      masked_global.push_back(total + m);
    }
    inputs.push_back(g.Constant(grid.patches));
    offsets.push_back(total);
    counts.push_back(n);
    for (std::size_t i = 0; i < n; ++i) positions.push_back(i);
    total += n;
  }

  Var x = inputs.size() == 1 ? inputs.front() : ConcatRows(inputs);
  x = AddRow(Matmul(x, params[0]), params[1]);
  if (!masked_global.empty()) x = ReplaceRows(x, params[3], masked_global);
  x = Add(x, GatherRows(params[2], positions));

  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  for (std::size_t layer = 0; layer < c.layers; ++layer) {
    auto p = [&](BlockSlot s) { return params[BlockIndex(layer, s)]; };
    Var h = LayerNorm(x, p(kNorm1Gamma), p(kNorm1Beta), c.norm_eps);
    Var qkv = AddRow(Matmul(h, p(kQkvWeight)), p(kQkvBias));
    std::vector<Var> clip_out;
    for (std::size_t b = 0; b < clips.size(); ++b) {
      Var rows = clips.size() == 1 ? qkv : SliceRows(qkv, offsets[b], counts[b]);
      std::vector<Var> head_out;
      for (std::size_t hd = 0; hd < heads; ++hd) {
        Var q = SliceCols(rows, hd * head_dim, head_dim);
        Var k = SliceCols(rows, d + hd * head_dim, head_dim);
        Var v = SliceCols(rows, 2 * d + hd * head_dim, head_dim);
        Var attn = SoftmaxRows(Scale(MatmulNT(q, k), attn_scale));
        head_out.push_back(Matmul(attn, v));
      }
      clip_out.push_back(heads == 1 ? head_out.front() : ConcatCols(head_out));
    }
    Var attended = clip_out.size() == 1 ? clip_out.front() : ConcatRows(clip_out);
    x = Add(x, AddRow(Matmul(attended, p(kProjWeight)), p(kProjBias)));

    Var h2 = LayerNorm(x, p(kNorm2Gamma), p(kNorm2Beta), c.norm_eps);
    Var mlp = Gelu(AddRow(Matmul(h2, p(kFc1Weight)), p(kFc1Bias)));
    x = Add(x, AddRow(Matmul(mlp, p(kFc2Weight)), p(kFc2Bias)));
  }
  std::size_t tail = TailIndex(c);
  if (c.layers > 0) {
    x = LayerNorm(x, params[tail], params[tail + 1], c.norm_eps);
    tail += 2;
  }
  const Var head_w = params[tail], head_b = params[tail + 1];

  std::vector<ClipForward> out(clips.size());
  for (std::size_t b = 0; b < clips.size(); ++b) {
    ClipForward& cf = out[b];
    cf.patch_outputs = clips.size() == 1 ? x : SliceRows(x, offsets[b], counts[b]);
    cf.sequence = GroupMeanRows(cf.patch_outputs, clips[b].grid->rows_freq);
    cf.masked = std::move(masked_local[b]);
    if (!cf.masked.empty()) {
      cf.logits = AddRow(Matmul(GatherRows(cf.patch_outputs, cf.masked), head_w), head_b);
      cf.has_logits = true;
    }
  }
  return out;
}

EncodeResult Encode(const EncoderWeights& weights, const PatchGrid& grid,
                    std::span<const std::size_t> mask, std::string source_id) {
  Graph g;
  const std::vector<Var> params = BindEncoder(g, weights, /*trainable=*/false);
  ClipInput clip{&grid, std::vector<std::size_t>(mask.begin(), mask.end())};
  const std::vector<ClipForward> fwd = EncoderForward(weights.config, params, {&clip, 1});
  EncodeResult result;
  result.sequence.vectors = fwd[0].sequence.value();
  result.sequence.frame_rate = grid.frame_rate / static_cast<double>(grid.patch_size);
  result.sequence.source_id = std::move(source_id);
  result.patch_outputs = fwd[0].patch_outputs.value();
  result.masked = fwd[0].masked;
  if (fwd[0].has_logits) {
    result.logits = fwd[0].logits.value();
  } else {
    result.logits = Tensor({0, weights.config.codebook_size});
  }
  return result;
}

}  // namespace obeats
