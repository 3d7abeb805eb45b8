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


#include "obeats/config.h"

#include <fstream>
#include <set>
#include <string>
#include <type_traits>

#include "obeats/error.h"

namespace obeats {
namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) Fail(ErrorKind::kConfig, where_, " must be a JSON object");
  }

  template <typename T>
  void Get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& value = j_.at(key);
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!value.is_number_unsigned()) {
        Fail(ErrorKind::kConfig, where_, ".", key, " must be a non-negative integer");
      }
    }
    try {
      out = value.get<T>();
    } catch (const json::exception& e) {
      Fail(ErrorKind::kConfig, where_, ".", key, ": ", e.what());
    }
  }

  template <typename T>
  void Section(const char* key, T& out) {
    seen_.insert(key);
    if (j_.contains(key)) FromJson(j_.at(key), out, where_ + "." + key);
  }

  void Finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) Fail(ErrorKind::kConfig, where_, ": unknown key '", key, "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string, std::less<>> seen_;
};

}  // namespace

json ToJson(const MelParams& v) {
  return {{"n_fft", v.n_fft}, {"hop", v.hop},   {"n_mels", v.n_mels},
          {"fmin", v.fmin},   {"fmax", v.fmax}, {"floor", v.floor}};
}

json ToJson(const FrontendConfig& v) {
  return {{"sample_rate", v.sample_rate}, {"mel", ToJson(v.mel)},     {"patch_size", v.patch_size},
          {"norm_mean", v.norm_mean},     {"norm_std", v.norm_std}};
}

json ToJson(const EncoderConfig& v) {
  return {{"preset", v.preset},   {"layers", v.layers},         {"dim", v.dim},
          {"heads", v.heads},     {"ffn_dim", v.ffn_dim},       {"patch_size", v.patch_size},
          {"codebook_size", v.codebook_size}, {"max_positions", v.max_positions},
          {"norm_eps", v.norm_eps}};
}

json ToJson(const AdamHyper& v) {
  return {{"learning_rate", v.learning_rate}, {"beta1", v.beta1}, {"beta2", v.beta2}, {"epsilon", v.epsilon}};
}

json ToJson(const MaskSpec& v) { return {{"mask_ratio", v.mask_ratio}, {"min_masked", v.min_masked}}; }

json ToJson(const TokenizerConfig& v) {
  return {{"codebook_size", v.codebook_size}, {"max_iters", v.max_iters}};
}

json ToJson(const TrainConfig& v) {
  return {{"encoder_preset", v.encoder_preset},
          {"mixture", v.mixture},
          {"within_domain", v.within_domain},
          {"steps", v.steps},
          {"batch_size", v.batch_size},
          {"seed", v.seed},
          {"mask", ToJson(v.mask)},
          {"optimizer", ToJson(v.optimizer)},
          {"warmup_steps", v.warmup_steps},
          {"checkpoint_every", v.checkpoint_every},
          {"refit_tokenizer_every", v.refit_tokenizer_every},
          {"tokenizer_sample_clips", v.tokenizer_sample_clips},
          {"tokenizer", ToJson(v.tokenizer)},
          {"frontend", ToJson(v.frontend)}};
}

json ToJson(const ProbeConfig& v) {
  return {{"hidden_dim", v.hidden_dim},       {"epochs", v.epochs}, {"batch_size", v.batch_size},
          {"learning_rate", v.learning_rate}, {"seed", v.seed},     {"patience", v.patience}};
}

void FromJson(const json& j, MelParams& v, const std::string& where) {
  Reader r(j, where);
  r.Get("n_fft", v.n_fft);
  r.Get("hop", v.hop);
  r.Get("n_mels", v.n_mels);
  r.Get("fmin", v.fmin);
  r.Get("fmax", v.fmax);
  r.Get("floor", v.floor);
  r.Finish();
}

void FromJson(const json& j, FrontendConfig& v, const std::string& where) {
  Reader r(j, where);
  r.Get("sample_rate", v.sample_rate);
  r.Section("mel", v.mel);
  r.Get("patch_size", v.patch_size);
  r.Get("norm_mean", v.norm_mean);
  r.Get("norm_std", v.norm_std);
  r.Finish();
}

void FromJson(const json& j, EncoderConfig& v, const std::string& where) {
  Reader r(j, where);
  r.Get("preset", v.preset);
  r.Get("layers", v.layers);
  r.Get("dim", v.dim);
  r.Get("heads", v.heads);
  r.Get("ffn_dim", v.ffn_dim);
  r.Get("patch_size", v.patch_size);
  r.Get("codebook_size", v.codebook_size);
  r.Get("max_positions", v.max_positions);
  r.Get("norm_eps", v.norm_eps);
  r.Finish();
}

void FromJson(const json& j, AdamHyper& v, const std::string& where) {
  Reader r(j, where);
  r.Get("learning_rate", v.learning_rate);
  r.Get("beta1", v.beta1);
  r.Get("beta2", v.beta2);
  r.Get("epsilon", v.epsilon);
  r.Finish();
}

void FromJson(const json& j, MaskSpec& v, const std::string& where) {
  Reader r(j, where);
  r.Get("mask_ratio", v.mask_ratio);
  r.Get("min_masked", v.min_masked);
  r.Finish();
}

void FromJson(const json& j, TokenizerConfig& v, const std::string& where) {
  Reader r(j, where);
  r.Get("codebook_size", v.codebook_size);
  r.Get("max_iters", v.max_iters);
  r.Finish();
}

void FromJson(const json& j, TrainConfig& v, const std::string& where) {
  Reader r(j, where);
  r.Get("encoder_preset", v.encoder_preset);
  r.Get("mixture", v.mixture);
  r.Get("within_domain", v.within_domain);
  r.Get("steps", v.steps);
  r.Get("batch_size", v.batch_size);
  r.Get("seed", v.seed);
  r.Section("mask", v.mask);
  r.Section("optimizer", v.optimizer);
  r.Get("warmup_steps", v.warmup_steps);
  r.Get("checkpoint_every", v.checkpoint_every);
  r.Get("refit_tokenizer_every", v.refit_tokenizer_every);
  r.Get("tokenizer_sample_clips", v.tokenizer_sample_clips);
  r.Section("tokenizer", v.tokenizer);
  r.Section("frontend", v.frontend);
  r.Finish();
}

void FromJson(const json& j, ProbeConfig& v, const std::string& where) {
  Reader r(j, where);
  r.Get("hidden_dim", v.hidden_dim);
  r.Get("epochs", v.epochs);
  r.Get("batch_size", v.batch_size);
  r.Get("learning_rate", v.learning_rate);
  r.Get("seed", v.seed);
  r.Get("patience", v.patience);
  r.Finish();
}

json LoadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open ", path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kConfig, path.string(), " is not valid JSON: ", e.what());
  }
}

RunConfig ParseRunConfig(const json& doc) {
  RunConfig config;
  Reader r(doc, "config");
  r.Get("seed", config.seed);
  r.Get("deterministic", config.deterministic);
  r.Section("pretrain", config.pretrain);
  r.Section("probe", config.probe);
  r.Section("frontend", config.frontend);
  r.Finish();
  return config;
}

json ToJson(const RunConfig& v) {
  return {{"seed", v.seed},
          {"deterministic", v.deterministic},
          {"pretrain", ToJson(v.pretrain)},
          {"probe", ToJson(v.probe)},
          {"frontend", ToJson(v.frontend)}};
}

}  // namespace obeats
