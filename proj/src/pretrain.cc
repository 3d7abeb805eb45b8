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


#include "obeats/pretrain.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "obeats/audio.h"
#include "obeats/config.h"
#include "obeats/container.h"
#include "obeats/error.h"

namespace obeats {
namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kMaskStream = 2;
constexpr std::uint64_t kTokenizerSampleStream = 3;
constexpr std::uint64_t kTokenizerFitStream = 4;

void ValidateMaskSpec(const MaskSpec& spec) {
  if (!(spec.mask_ratio > 0.0 && spec.mask_ratio < 1.0)) {
    Fail(ErrorKind::kConfig, "mask_ratio must lie in (0, 1), got ", spec.mask_ratio);
  }
  if (spec.min_masked < 1) Fail(ErrorKind::kConfig, "min_masked must be >= 1");
}

void RoundTensor(Tensor& t) {
  for (double& v : t.storage()) v = static_cast<double>(static_cast<float>(v));
}

void RoundWeights(EncoderWeights& w) {
  for (Tensor& t : w.tensors) RoundTensor(t);
}

EncoderConfig EncoderConfigFor(const TrainConfig& config) {
  EncoderConfig enc = EncoderPreset(config.encoder_preset, config.tokenizer.codebook_size);
  enc.patch_size = config.frontend.patch_size;
  return enc;
}

}  // namespace

std::vector<std::size_t> MaskPatches(std::size_t patch_count, const MaskSpec& spec, Rng& rng) {
  ValidateMaskSpec(spec);
  if (patch_count < 1) Fail(ErrorKind::kClipTooShort, "cannot mask a clip with no patches");
  const auto target = static_cast<std::size_t>(std::llround(spec.mask_ratio * static_cast<double>(patch_count)));
  const std::size_t count = std::max(spec.min_masked, target);
  if (count > patch_count) {
    Fail(ErrorKind::kClipTooShort, "need ", count, " masked patches but the clip has only ", patch_count);
  }
  std::vector<std::size_t> idx(patch_count);
  for (std::size_t i = 0; i < patch_count; ++i) idx[i] = i;
  for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng.Below(patch_count - i)]);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<int> MlmTargets(const Codebook& codebook, const EncoderWeights* teacher,
                            const PatchGrid& clean_grid) {
  return Quantize(codebook, TokenizerFeatures(teacher, clean_grid));
}

MlmResult MlmStep(const EncoderWeights& weights, std::span<const MlmItem> batch, bool with_gradients) {
  if (batch.empty()) Fail(ErrorKind::kEmptyInput, "mlm step over an empty batch");
  Graph graph;
  const std::vector<Var> params = BindEncoder(graph, weights, with_gradients);
  std::vector<ClipInput> inputs;
  for (const MlmItem& item : batch) {
    if (item.grid == nullptr) Fail(ErrorKind::kContract, "mlm item without a patch grid");
    if (item.mask.empty()) Fail(ErrorKind::kContract, "mlm item with an empty mask");
    if (item.targets.size() != item.grid->count()) {
      Fail(ErrorKind::kDimension, "mlm item has ", item.targets.size(), " targets for ", item.grid->count(),
           " patches");
    }
    inputs.push_back({item.grid, item.mask});
  }
  const std::vector<ClipForward> forward = EncoderForward(weights.config, params, inputs);
  std::vector<Var> losses;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    std::vector<int> masked_targets;
    for (std::size_t m : forward[b].masked) masked_targets.push_back(batch[b].targets[m]);
    losses.push_back(CrossEntropyLogits(forward[b].logits, masked_targets));
  }
  Var loss = MeanOf(losses);
  MlmResult result;
  result.loss = loss.value()[0];
  if (with_gradients) {
    graph.Backward(loss);
    for (Var p : params) result.gradients.push_back(graph.Grad(p));
  }
  return result;
}

MlmResult MlmStep(const EncoderWeights& weights, const Codebook& codebook, const EncoderWeights* teacher,
                  std::span<const PatchGrid> batch, const MaskSpec& spec, Rng& rng) {
  std::vector<MlmItem> items;
  for (const PatchGrid& grid : batch) {
    MlmItem item;
    item.grid = &grid;
    item.mask = MaskPatches(grid.count(), spec, rng);
    item.targets = MlmTargets(codebook, teacher, grid);
    items.push_back(std::move(item));
  }
  return MlmStep(weights, items);
}

void ValidateTrainConfig(const TrainConfig& config) {
  if (config.steps < 1) Fail(ErrorKind::kConfig, "steps must be >= 1");
  if (config.batch_size < 1) Fail(ErrorKind::kConfig, "batch_size must be >= 1");
  if (config.within_domain != "hours" && config.within_domain != "uniform") {
    Fail(ErrorKind::kConfig, "within_domain must be 'hours' or 'uniform', got '", config.within_domain, "'");
  }
  if (config.tokenizer_sample_clips < 1) Fail(ErrorKind::kConfig, "tokenizer_sample_clips must be >= 1");
  if (config.tokenizer.max_iters < 1) Fail(ErrorKind::kConfig, "tokenizer max_iters must be >= 1");
  const AdamHyper& o = config.optimizer;
  if (!(o.learning_rate > 0.0)) Fail(ErrorKind::kConfig, "learning_rate must be > 0");
  if (!(o.beta1 >= 0.0 && o.beta1 < 1.0) || !(o.beta2 >= 0.0 && o.beta2 < 1.0)) {
    Fail(ErrorKind::kConfig, "Adam betas must lie in [0, 1)");
  }
  if (!(o.epsilon > 0.0)) Fail(ErrorKind::kConfig, "Adam epsilon must be > 0");
  ValidateMaskSpec(config.mask);
  ValidateFrontend(config.frontend);
  ValidateMixtureSpec(NamedMixture(config.mixture));
  ValidateEncoderConfig(EncoderConfigFor(config));
}

bool Checkpoint::operator==(const Checkpoint& other) const {
  const AdamState& a = optimizer;
  const AdamState& b = other.optimizer;
  return train_config == other.train_config && weights == other.weights && codebook == other.codebook &&
         teacher == other.teacher && step == other.step && loss_history == other.loss_history &&
         a.step == b.step && a.m == b.m && a.v == b.v && a.hyper == b.hyper;
}

std::string EncodeCheckpoint(const Checkpoint& ckpt) {
  Container c;
  c.version = kCheckpointVersion;
  nlohmann::json directory = nlohmann::json::array();
  auto add = [&](const std::string& name, const Tensor& t) {
    directory.push_back({{"name", name}, {"shape", t.shape()}, {"offset", c.payload.size() * sizeof(float)}});
    for (double v : t.data()) c.payload.push_back(static_cast<float>(v));
  };
  for (std::size_t i = 0; i < ckpt.weights.tensors.size(); ++i) {
    add("encoder/" + ckpt.weights.names[i], ckpt.weights.tensors[i]);
  }
  add("codebook/centroids", ckpt.codebook.centroids);
  if (ckpt.teacher) {
    for (std::size_t i = 0; i < ckpt.teacher->tensors.size(); ++i) {
      add("teacher/" + ckpt.teacher->names[i], ckpt.teacher->tensors[i]);
    }
  }
  for (std::size_t i = 0; i < ckpt.optimizer.m.size(); ++i) {
    add("adam/m/" + ckpt.weights.names.at(i), ckpt.optimizer.m[i]);
    add("adam/v/" + ckpt.weights.names.at(i), ckpt.optimizer.v[i]);
  }
  c.header = {{"format", "obeats-checkpoint"},
              {"train_config", ToJson(ckpt.train_config)},
              {"encoder_config", ToJson(ckpt.weights.config)},
              {"step", ckpt.step},
              {"loss_history", ckpt.loss_history},
              {"codebook", {{"iteration", ckpt.codebook.iteration}, {"feature_source", ckpt.codebook.feature_source}}},
              {"has_teacher", ckpt.teacher.has_value()},
              {"optimizer", {{"step", ckpt.optimizer.step}, {"hyper", ToJson(ckpt.optimizer.hyper)}}},
              {"tensors", directory}};
  return EncodeContainer(kCheckpointMagic, c);
}

Checkpoint DecodeCheckpoint(std::string_view bytes) {
  const Container c = DecodeContainer(bytes, kCheckpointMagic, kCheckpointVersion);
  Checkpoint ckpt;
  try {
    const nlohmann::json& h = c.header;
    FromJson(h.at("train_config"), ckpt.train_config, "train_config");
    FromJson(h.at("encoder_config"), ckpt.weights.config, "encoder_config");
    ckpt.step = h.at("step").get<std::uint64_t>();
    ckpt.loss_history = h.at("loss_history").get<std::vector<double>>();
    ckpt.codebook.iteration = h.at("codebook").at("iteration").get<int>();
    ckpt.codebook.feature_source = h.at("codebook").at("feature_source").get<std::string>();
    ckpt.optimizer.step = h.at("optimizer").at("step").get<std::uint64_t>();
    FromJson(h.at("optimizer").at("hyper"), ckpt.optimizer.hyper, "optimizer.hyper");

    std::map<std::string, Tensor> tensors;
    for (const nlohmann::json& entry : h.at("tensors")) {
      const std::string name = entry.at("name").get<std::string>();
      const Shape shape = entry.at("shape").get<Shape>();
      const std::size_t offset = entry.at("offset").get<std::size_t>();
      std::size_t count = 1;
      for (std::size_t d : shape) count *= d;
      if (offset % sizeof(float) != 0 || offset / sizeof(float) + count > c.payload.size()) {
        Fail(ErrorKind::kCorruption, "tensor ", name, " lies outside the payload");
      }
      Tensor t(shape);
      for (std::size_t i = 0; i < count; ++i) t[i] = c.payload[offset / sizeof(float) + i];
      if (!tensors.emplace(name, std::move(t)).second) Fail(ErrorKind::kCorruption, "duplicate tensor ", name);
    }
    auto take = [&](const std::string& name, const Shape* expected) {
      auto it = tensors.find(name);
      if (it == tensors.end()) Fail(ErrorKind::kCorruption, "checkpoint lacks tensor ", name);
      if (expected != nullptr && it->second.shape() != *expected) {
        Fail(ErrorKind::kCorruption, "tensor ", name, " has shape ", ShapeToString(it->second.shape()),
             ", expected ", ShapeToString(*expected));
      }
      Tensor t = std::move(it->second);
      tensors.erase(it);
      return t;
    };
    const auto layout = EncoderTensorLayout(ckpt.weights.config);
    for (const auto& [name, shape] : layout) {
      ckpt.weights.names.push_back(name);
      ckpt.weights.tensors.push_back(take("encoder/" + name, &shape));
    }
    ckpt.codebook.centroids = take("codebook/centroids", nullptr);
    if (h.at("has_teacher").get<bool>()) {
      EncoderWeights teacher;
      teacher.config = ckpt.weights.config;
      for (const auto& [name, shape] : layout) {
        teacher.names.push_back(name);
        teacher.tensors.push_back(take("teacher/" + name, &shape));
      }
      ckpt.teacher = std::move(teacher);
    }
    if (tensors.contains("adam/m/" + layout.front().first)) {
      for (const auto& [name, shape] : layout) {
        ckpt.optimizer.m.push_back(take("adam/m/" + name, &shape));
        ckpt.optimizer.v.push_back(take("adam/v/" + name, &shape));
      }
    }
    if (!tensors.empty()) Fail(ErrorKind::kCorruption, "unexpected tensor ", tensors.begin()->first);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kCorruption, "checkpoint header: ", e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) Fail(ErrorKind::kCorruption, "checkpoint header: ", e.what());
    throw;
  }
  return ckpt;
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  WriteFileBytes(path, EncodeCheckpoint(ckpt));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  try {
    return DecodeCheckpoint(ReadFileBytes(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    Fail(e.kind(), path.string(), ": ", e.what());
  }
}

void RoundToStorage(Checkpoint& ckpt) {
  RoundWeights(ckpt.weights);
  RoundTensor(ckpt.codebook.centroids);
  if (ckpt.teacher) RoundWeights(*ckpt.teacher);
  for (Tensor& t : ckpt.optimizer.m) RoundTensor(t);
  for (Tensor& t : ckpt.optimizer.v) RoundTensor(t);
}

const PatchGrid& ClipCache::Get(const std::string& path) {
  auto it = grids_.find(path);
  if (it != grids_.end()) return it->second;
  try {
    return grids_.emplace(path, WaveformToPatches(LoadWav(path), frontend_)).first->second;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    Fail(e.kind(), path, ": ", e.what());
  }
}

void ClipCache::Preload(std::span<const std::string> paths, bool deterministic) {
  std::vector<std::string> missing;
  for (const std::string& p : paths) {
    if (!grids_.contains(p)) missing.push_back(p);
  }
  std::sort(missing.begin(), missing.end());
  missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
  const std::size_t workers = std::min<std::size_t>(missing.size(), std::thread::hardware_concurrency());
  if (deterministic || workers < 2) {
    for (const std::string& p : missing) Get(p);
    return;
  }
  std::vector<std::optional<PatchGrid>> grids(missing.size());
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < missing.size(); i += workers) {
          grids[i] = WaveformToPatches(LoadWav(missing[i]), frontend_);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : threads) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (std::size_t i = 0; i < missing.size(); ++i) grids_.emplace(missing[i], std::move(*grids[i]));
}

Trainer::Trainer(TrainConfig config, DatasetManifest manifest, bool deterministic)
    : manifest_(std::move(manifest)), deterministic_(deterministic) {
  ValidateTrainConfig(config);
  state_.train_config = std::move(config);
  const TrainConfig& c = state_.train_config;
  state_.weights = InitEncoder(EncoderConfigFor(c), DeriveKey(c.seed, {kInitStream}));
  RoundWeights(state_.weights);
  state_.optimizer = AdamState::ZerosLike(state_.weights.tensors, c.optimizer);
  Prepare();
  std::vector<PatchGrid> sample;
  for (const std::string& p : TokenizerSample(0)) sample.push_back(clips_->Get(p));
  state_.codebook = RefineIteration(nullptr, nullptr, sample, c.tokenizer, DeriveKey(c.seed, {kTokenizerFitStream, 0}));
  RoundTensor(state_.codebook.centroids);
}

Trainer::Trainer(Checkpoint checkpoint, DatasetManifest manifest, bool deterministic)
    : state_(std::move(checkpoint)), manifest_(std::move(manifest)), deterministic_(deterministic) {
  ValidateTrainConfig(state_.train_config);
  if (state_.weights.config != EncoderConfigFor(state_.train_config)) {
    Fail(ErrorKind::kIncompatibleCheckpoint, "checkpoint encoder does not match its training config");
  }
  if (state_.codebook.iteration > 0 && !state_.teacher) {
    Fail(ErrorKind::kIncompatibleCheckpoint, "checkpoint codebook iteration ", state_.codebook.iteration,
         " has no teacher encoder");
  }
  Prepare();
}

void Trainer::Prepare() {
  const TrainConfig& c = state_.train_config;
  pool_ = ResolveClips(manifest_);
  mixture_ = NamedMixture(c.mixture);
  weighting_ = c.within_domain == "uniform" ? WithinDomainWeighting::kUniform : WithinDomainWeighting::kHours;
  clips_ = std::make_unique<ClipCache>(c.frontend);
}

std::vector<std::string> Trainer::TokenizerSample(std::uint64_t iteration) {
  const TrainConfig& c = state_.train_config;
  const std::vector<ClipRef> refs = SampleBatch(manifest_, pool_, mixture_, c.tokenizer_sample_clips,
                                                DeriveKey(c.seed, {kTokenizerSampleStream, iteration}), 0,
                                                weighting_);
  std::set<std::string> unique;
  for (const ClipRef& r : refs) unique.insert(r.path);
  std::vector<std::string> paths(unique.begin(), unique.end());
  clips_->Preload(paths, deterministic_);
  return paths;
}

void Trainer::Refit() {
  const TrainConfig& c = state_.train_config;
  const auto iteration = static_cast<std::uint64_t>(state_.codebook.iteration) + 1;
  EncoderWeights teacher = state_.weights;
  RoundWeights(teacher);
  std::vector<PatchGrid> sample;
  for (const std::string& p : TokenizerSample(iteration)) sample.push_back(clips_->Get(p));
  Codebook next = RefineIteration(&state_.codebook, &teacher, sample, c.tokenizer,
                                  DeriveKey(c.seed, {kTokenizerFitStream, iteration}));
  RoundTensor(next.centroids);
  state_.codebook = std::move(next);
  state_.teacher = std::move(teacher);
  targets_.clear();
}

const std::vector<int>& Trainer::TargetsFor(const std::string& path) {
  auto it = targets_.find(path);
  if (it != targets_.end()) return it->second;
  const EncoderWeights* teacher = state_.teacher ? &*state_.teacher : nullptr;
  return targets_.emplace(path, MlmTargets(state_.codebook, teacher, clips_->Get(path))).first->second;
}

double Trainer::Step() {
  const TrainConfig& c = state_.train_config;
  const std::uint64_t s = state_.step;
  try {
    if (c.refit_tokenizer_every > 0 && s > 0 && s % c.refit_tokenizer_every == 0 &&
        static_cast<std::uint64_t>(state_.codebook.iteration) < s / c.refit_tokenizer_every) {
      Refit();
    }
    const std::vector<ClipRef> refs =
        SampleBatch(manifest_, pool_, mixture_, c.batch_size, c.seed, s * c.batch_size, weighting_);
    std::vector<std::string> paths;
    for (const ClipRef& r : refs) paths.push_back(r.path);
    clips_->Preload(paths, deterministic_);

    std::vector<MlmItem> items;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      MlmItem item;
      item.grid = &clips_->Get(refs[i].path);
      Rng mask_rng(DeriveKey(c.seed, {kMaskStream, s, i}));
      item.mask = MaskPatches(item.grid->count(), c.mask, mask_rng);
      item.targets = TargetsFor(refs[i].path);
      items.push_back(std::move(item));
    }
    MlmResult result = MlmStep(state_.weights, items);
    if (!std::isfinite(result.loss)) Fail(ErrorKind::kInvariant, "non-finite training loss");
    const double lr_scale =
        c.warmup_steps > 0 ? std::min(1.0, static_cast<double>(s + 1) / static_cast<double>(c.warmup_steps)) : 1.0;
    AdamStep(state_.weights.tensors, result.gradients, state_.optimizer, lr_scale);
    state_.step = s + 1;
    state_.loss_history.push_back(result.loss);
    return result.loss;
  } catch (const Error& e) {
    Fail(e.kind(), "training step ", s, ": ", e.what());
  }
}

void Trainer::Run(const std::function<void(const Checkpoint&)>& on_checkpoint) {
  const TrainConfig& c = state_.train_config;
  while (state_.step < c.steps) {
    Step();
    const bool periodic = c.checkpoint_every > 0 && state_.step % c.checkpoint_every == 0;
    if (periodic || state_.step == c.steps) {
      RoundToStorage(state_);
      if (on_checkpoint) on_checkpoint(state_);
    }
  }
}

}  // namespace obeats
