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

// Pretraining corpus accounting: dataset manifests, per-domain hours,
// domain ratios, and ratio-targeted clip sampling.

#ifndef OBEATS_MIXTURE_H_
#define OBEATS_MIXTURE_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace obeats {

enum class Domain { kSpeech = 0, kMusic = 1, kSound = 2 };
inline constexpr std::size_t kNumDomains = 3;
inline constexpr std::array<Domain, kNumDomains> kAllDomains = {Domain::kSpeech, Domain::kMusic,
                                                                Domain::kSound};

std::string_view DomainName(Domain domain);
// Throws kValidation for anything outside speech|music|sound.
Domain ParseDomain(std::string_view name);

// Indexed by static_cast<size_t>(Domain).
using DomainMap = std::array<double, kNumDomains>;

struct ManifestEntry {
  std::string id;
  Domain domain = Domain::kSound;
  double hours = 0.0;
  std::string path_glob;
  bool enabled = true;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  // Globs resolve relative to this directory.
  std::filesystem::path base_dir;

  // Throws kValidation if no entry has this id.
  void SetEnabled(std::string_view id, bool enabled);
};

DatasetManifest LoadManifest(const std::filesystem::path& path);
DatasetManifest ParseManifest(const nlohmann::json& doc, std::filesystem::path base_dir = {});
nlohmann::json ManifestToJson(const DatasetManifest& manifest);

// Hours per domain over enabled entries.
DomainMap DomainTotals(const DatasetManifest& manifest);
double TotalHours(const DatasetManifest& manifest);
// Hours / total per domain. Throws kEmptyPool when total is zero.
DomainMap MixtureRatios(const DatasetManifest& manifest);

struct MixtureSpec {
  std::string name;
  DomainMap target_ratios{};
};

// "speech-heavy" (70:15:15) and "balanced" (40:30:30), speech:music:sound.
MixtureSpec NamedMixture(std::string_view name);
void ValidateMixtureSpec(const MixtureSpec& spec);

enum class WithinDomainWeighting { kHours, kUniform };

// Relative weight of each entry inside its domain; zero for disabled entries.
std::vector<double> WithinDomainWeights(const DatasetManifest& manifest,
                                        WithinDomainWeighting weighting);

// Files behind each entry's glob, sorted. Parallel to manifest.entries.
struct ClipPool {
  std::vector<std::vector<std::string>> clips;
};
ClipPool ResolveClips(const DatasetManifest& manifest);

struct ClipRef {
  std::string dataset_id;
  Domain domain = Domain::kSound;
  std::string path;

  bool operator==(const ClipRef&) const = default;
};

// Draw i picks a domain by target ratio, a dataset within the domain by
// weight, then a clip uniformly, each from counter-based uniforms keyed by
// (seed, first_draw + i). Any window of draws can therefore be produced
// independently.
std::vector<ClipRef> SampleBatch(const DatasetManifest& manifest, const ClipPool& pool,
                                 const MixtureSpec& spec, std::size_t batch_size,
                                 std::uint64_t seed, std::uint64_t first_draw = 0,
                                 WithinDomainWeighting weighting = WithinDomainWeighting::kHours);

}  // namespace obeats

#endif  // OBEATS_MIXTURE_H_
