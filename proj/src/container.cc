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

#include "obeats/container.h"

#include <openssl/sha.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "obeats/error.h"

namespace obeats {

static_assert(std::endian::native == std::endian::little,
              "container encoding assumes a little-endian host");

Digest Sha256(std::span<const std::uint8_t> bytes) {
  Digest out{};
  SHA256(bytes.data(), bytes.size(), out.data());
  return out;
}

Digest Sha256(std::string_view bytes) {
  return Sha256(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::string DigestHex(const Digest& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (std::uint8_t b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

namespace {

template <typename T>
void PutLE(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T GetLE(std::string_view bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

constexpr std::size_t kPrefix = 4 + 4 + 8;
constexpr std::size_t kDigestSize = 32;

}  // namespace

std::string EncodeContainer(std::string_view magic, const Container& container) {
  if (magic.size() != 4) Fail(ErrorKind::kContract, "container magic must be 4 bytes");
  const std::string header = container.header.dump();
  std::string out;
  out.reserve(kPrefix + header.size() + container.payload.size() * 4 + kDigestSize);
  out.append(magic);
  PutLE<std::uint32_t>(out, container.version);
  PutLE<std::uint64_t>(out, header.size());
  out.append(header);
  const std::size_t payload_offset = out.size();
  out.resize(payload_offset + container.payload.size() * sizeof(float));
  std::memcpy(out.data() + payload_offset, container.payload.data(),
              container.payload.size() * sizeof(float));
  const Digest digest = Sha256(out);
  out.append(reinterpret_cast<const char*>(digest.data()), digest.size());
  return out;
}

Container DecodeContainer(std::string_view bytes, std::string_view magic,
                          std::uint32_t supported_version) {
  if (bytes.size() < kPrefix + kDigestSize) {
    Fail(ErrorKind::kCorruption, "file is truncated (", bytes.size(), " bytes)");
  }
  if (bytes.substr(0, 4) != magic) {
    Fail(ErrorKind::kIncompatibleCheckpoint, "bad magic: expected '", magic, "'");
  }
  Container out;
  out.version = GetLE<std::uint32_t>(bytes, 4);
  if (out.version != supported_version) {
    Fail(ErrorKind::kIncompatibleCheckpoint, "unsupported ", magic, " version ", out.version,
         " (reader supports ", supported_version, ")");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - kDigestSize);
  const Digest actual = Sha256(body);
  if (std::memcmp(actual.data(), bytes.data() + body.size(), kDigestSize) != 0) {
    Fail(ErrorKind::kCorruption, "digest mismatch");
  }
  const std::uint64_t header_len = GetLE<std::uint64_t>(bytes, 8);
  if (header_len > body.size() - kPrefix) {
    Fail(ErrorKind::kCorruption, "header length ", header_len, " exceeds file size");
  }
  const std::size_t payload_bytes = body.size() - kPrefix - header_len;
  if (payload_bytes % sizeof(float) != 0) {
    Fail(ErrorKind::kCorruption, "payload is not a whole number of float32 values");
  }
  try {
    out.header = nlohmann::json::parse(body.substr(kPrefix, header_len));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kCorruption, "malformed header: ", e.what());
  }
  out.payload.resize(payload_bytes / sizeof(float));
  std::memcpy(out.payload.data(), body.data() + kPrefix + header_len, payload_bytes);
  return out;
}

std::string ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open ", path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot write ", path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, "short write to ", path.string());
}

}  // namespace obeats
