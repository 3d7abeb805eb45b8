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


// JSON forms of the run configurations. Readers start from the defaults,
// overlay the keys present and reject unknown keys with kConfig, so a config
// file only needs the settings it changes.

#ifndef OBEATS_CONFIG_H_
#define OBEATS_CONFIG_H_

#include <filesystem>

#include <nlohmann/json.hpp>
#include "obeats/adam.h"
#include "obeats/encoder.h"
#include "obeats/frontend.h"
#include "obeats/pretrain.h"
#include "obeats/probe.h"
#include "obeats/tokenizer.h"

namespace obeats {

nlohmann::json ToJson(const MelParams& v);
nlohmann::json ToJson(const FrontendConfig& v);
nlohmann::json ToJson(const EncoderConfig& v);
nlohmann::json ToJson(const AdamHyper& v);
nlohmann::json ToJson(const MaskSpec& v);
nlohmann::json ToJson(const TokenizerConfig& v);
nlohmann::json ToJson(const TrainConfig& v);
nlohmann::json ToJson(const ProbeConfig& v);

// `where` prefixes error messages, e.g. "pretrain.mask".
void FromJson(const nlohmann::json& j, MelParams& v, const std::string& where = "mel");
void FromJson(const nlohmann::json& j, FrontendConfig& v, const std::string& where = "frontend");
void FromJson(const nlohmann::json& j, EncoderConfig& v, const std::string& where = "encoder");
void FromJson(const nlohmann::json& j, AdamHyper& v, const std::string& where = "optimizer");
void FromJson(const nlohmann::json& j, MaskSpec& v, const std::string& where = "mask");
void FromJson(const nlohmann::json& j, TokenizerConfig& v, const std::string& where = "tokenizer");
void FromJson(const nlohmann::json& j, TrainConfig& v, const std::string& where = "pretrain");
void FromJson(const nlohmann::json& j, ProbeConfig& v, const std::string& where = "probe");

// Reads a whole JSON document; kIo if unreadable, kConfig if malformed.
nlohmann::json LoadJsonFile(const std::filesystem::path& path);

// Per-run configuration file: {"seed", "deterministic", "pretrain": {...},
// "probe": {...}, "frontend": {...}}. Every section is optional.
struct RunConfig {
  std::uint64_t seed = 0;
  bool deterministic = false;
  TrainConfig pretrain;
  ProbeConfig probe;
  FrontendConfig frontend;
};

RunConfig ParseRunConfig(const nlohmann::json& doc);
nlohmann::json ToJson(const RunConfig& v);

}  // namespace obeats

#endif  // OBEATS_CONFIG_H_
