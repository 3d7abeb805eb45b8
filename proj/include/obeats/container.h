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

// Binary container shared by checkpoints (OBTS) and embedding files (OEMB):
//
//   bytes  0..3   magic
//   bytes  4..7   u32 version, little endian
//   bytes  8..15  u64 JSON header length L, little endian
//   bytes 16..    L bytes of UTF-8 JSON
//                 payload: little-endian IEEE-754 float32 values
//   last 32 bytes SHA-256 of every preceding byte

#ifndef OBEATS_CONTAINER_H_
#define OBEATS_CONTAINER_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace obeats {

using Digest = std::array<std::uint8_t, 32>;

Digest Sha256(std::span<const std::uint8_t> bytes);
Digest Sha256(std::string_view bytes);
std::string DigestHex(const Digest& digest);

struct Container {
  std::uint32_t version = 0;
  nlohmann::json header;
  std::vector<float> payload;
};

std::string EncodeContainer(std::string_view magic, const Container& container);

// Throws kIncompatibleCheckpoint on magic/version mismatch and kCorruption on
// truncation, digest mismatch or a malformed header.
Container DecodeContainer(std::string_view bytes, std::string_view magic,
                          std::uint32_t supported_version);

std::string ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace obeats

#endif  // OBEATS_CONTAINER_H_
