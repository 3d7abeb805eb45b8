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

// Masked token prediction: masking, the per-batch loss, the training loop and
// checkpoints.

#ifndef OBEATS_PRETRAIN_H_
#define OBEATS_PRETRAIN_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "obeats/adam.h"
#include "obeats/encoder.h"
#include "obeats/frontend.h"
#include "obeats/mixture.h"
#include "obeats/rng.h"
#include "obeats/tokenizer.h"

namespace obeats {

struct MaskSpec {
  double mask_ratio = 0.75;
  std::size_t min_masked = 1;

  bool operator==(const MaskSpec&) const = default;
};

// max(min_masked, round(mask_ratio * patch_count)) distinct indices drawn
// uniformly without replacement, returned sorted.
std::vector<std::size_t> MaskPatches(std::size_t patch_count, const MaskSpec& spec, Rng& rng);

// Token for every patch of the clean (unmasked) clip.
std::vector<int> MlmTargets(const Codebook& codebook, const EncoderWeights* teacher,
                            const PatchGrid& clean_grid);

struct MlmItem {
  const PatchGrid* grid = nullptr;      // what the network sees
  std::vector<std::size_t> mask;
  std::vector<int> targets;             // one per patch, from the clean clip
};

struct MlmResult {
  double loss = 0.0;
  std::vector<Tensor> gradients;  // parallel to weights.tensors
};

// Mean over clips of the cross-entropy over each clip's masked positions.
MlmResult MlmStep(const EncoderWeights& weights, std::span<const MlmItem> batch,
                  bool with_gradients = true);

// Convenience form: draws masks from rng and computes targets itself.
MlmResult MlmStep(const EncoderWeights& weights, const Codebook& codebook,
                  const EncoderWeights* teacher, std::span<const PatchGrid> batch,
                  const MaskSpec& spec, Rng& rng);

struct TrainConfig {
  std::string encoder_preset = "base-toy";
  std::string mixture = "balanced";
  std::string within_domain = "hours";  // hours | uniform
  std::size_t steps = 100;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  MaskSpec mask;
  AdamHyper optimizer;
  std::size_t warmup_steps = 0;
  std::size_t checkpoint_every = 0;        // 0: final checkpoint only
  std::size_t refit_tokenizer_every = 0;   // 0: keep the iteration-0 codebook
  std::size_t tokenizer_sample_clips = 64;
  TokenizerConfig tokenizer;
  FrontendConfig frontend;

  bool operator==(const TrainConfig&) const = default;
};

void ValidateTrainConfig(const TrainConfig& config);

struct Checkpoint {
  TrainConfig train_config;
  EncoderWeights weights;
  Codebook codebook;
  std::optional<EncoderWeights> teacher;  // present once the codebook left iteration 0
  AdamState optimizer;
  std::uint64_t step = 0;
  std::vector<double> loss_history;

  bool operator==(const Checkpoint& other) const;
};

inline constexpr char kCheckpointMagic[] = "OBTS";
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string EncodeCheckpoint(const Checkpoint& ckpt);
Checkpoint DecodeCheckpoint(std::string_view bytes);
void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Rounds every stored tensor to float32 precision in place, so the live state
// equals what a save/load round trip yields.
void RoundToStorage(Checkpoint& ckpt);

// Decodes and patchifies clips, caching by path.
class ClipCache {
 public:
  explicit ClipCache(FrontendConfig frontend) : frontend_(std::move(frontend)) {}
  const PatchGrid& Get(const std::string& path);
  // Decodes paths not yet cached; uses worker threads unless deterministic.
  void Preload(std::span<const std::string> paths, bool deterministic);

 private:
  FrontendConfig frontend_;
  std::map<std::string, PatchGrid> grids_;
};

class Trainer {
 public:
  // Fresh run: initializes the encoder from config.seed and fits the
  // iteration-0 codebook on a corpus sample.
  Trainer(TrainConfig config, DatasetManifest manifest, bool deterministic = true);
  // Continues from a checkpoint; its train_config governs the run.
  Trainer(Checkpoint checkpoint, DatasetManifest manifest, bool deterministic = true);

  // One optimizer step. Refits the tokenizer when scheduled.
  double Step();

  // Runs until state().step == config.steps. on_checkpoint fires every
  // checkpoint_every steps and at the end, after RoundToStorage.
  void Run(const std::function<void(const Checkpoint&)>& on_checkpoint = {});

  const Checkpoint& state() const { return state_; }
  const TrainConfig& config() const { return state_.train_config; }

 private:
  void Prepare();
  std::vector<std::string> TokenizerSample(std::uint64_t iteration);
  void Refit();
  const std::vector<int>& TargetsFor(const std::string& path);

  Checkpoint state_;
  DatasetManifest manifest_;
  ClipPool pool_;
  MixtureSpec mixture_;
  WithinDomainWeighting weighting_ = WithinDomainWeighting::kHours;
  bool deterministic_ = true;
  std::unique_ptr<ClipCache> clips_;
  std::map<std::string, std::vector<int>> targets_;
};

}  // namespace obeats

#endif  // OBEATS_PRETRAIN_H_
