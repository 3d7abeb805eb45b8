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

#include "obeats/mixture.h"

#include <glob.h>

#include <cmath>
#include <fstream>
#include <set>

#include "obeats/error.h"
#include "obeats/rng.h"

namespace obeats {

std::string_view DomainName(Domain domain) {
  switch (domain) {
    case Domain::kSpeech:
      return "speech";
    case Domain::kMusic:
      return "music";
    case Domain::kSound:
      return "sound";
  }
  return "unknown";
}

Domain ParseDomain(std::string_view name) {
  for (Domain d : kAllDomains)
    if (DomainName(d) == name) return d;
  Fail(ErrorKind::kValidation, "unknown domain '", name, "' (expected speech, music or sound)");
}

void DatasetManifest::SetEnabled(std::string_view id, bool enabled) {
  for (ManifestEntry& e : entries) {
    if (e.id == id) {
      e.enabled = enabled;
      return;
    }
  }
  Fail(ErrorKind::kValidation, "manifest has no entry '", id, "'");
}

DatasetManifest ParseManifest(const nlohmann::json& doc, std::filesystem::path base_dir) {
  if (!doc.is_object()) Fail(ErrorKind::kValidation, "manifest: top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "version" && key != "entries") {
      Fail(ErrorKind::kValidation, "manifest: unknown key '", key, "'");
    }
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer() || doc["version"] != 1) {
    Fail(ErrorKind::kValidation, "manifest: version must be 1");
  }
  if (!doc.contains("entries") || !doc["entries"].is_array()) {
    Fail(ErrorKind::kValidation, "manifest: 'entries' must be an array");
  }
  DatasetManifest manifest;
  manifest.base_dir = std::move(base_dir);
  std::set<std::string> seen;
  std::size_t index = 0;
  for (const auto& item : doc["entries"]) {
    const std::string where = "manifest entry " + std::to_string(index++);
    if (!item.is_object()) Fail(ErrorKind::kValidation, where, ": not an object");
    for (const auto& [key, value] : item.items()) {
      if (key != "id" && key != "domain" && key != "hours" && key != "path_glob" && key != "enabled") {
        Fail(ErrorKind::kValidation, where, ": unknown key '", key, "'");
      }
    }
    ManifestEntry e;
    if (!item.contains("id") || !item["id"].is_string() || item["id"].get<std::string>().empty()) {
      Fail(ErrorKind::kValidation, where, ": 'id' must be a non-empty string");
    }
    e.id = item["id"].get<std::string>();
    const std::string named = where + " ('" + e.id + "')";
    if (!seen.insert(e.id).second) Fail(ErrorKind::kValidation, named, ": duplicate id");
    if (!item.contains("domain") || !item["domain"].is_string()) {
      Fail(ErrorKind::kValidation, named, ": 'domain' must be a string");
    }
    try {
      e.domain = ParseDomain(item["domain"].get<std::string>());
    } catch (const Error& err) {
      Fail(ErrorKind::kValidation, named, ": ", err.what());
    }
    if (!item.contains("hours") || !item["hours"].is_number()) {
      Fail(ErrorKind::kValidation, named, ": 'hours' must be a number");
    }
    e.hours = item["hours"].get<double>();
    if (!(e.hours >= 0.0) || !std::isfinite(e.hours)) {
      Fail(ErrorKind::kValidation, named, ": hours must be >= 0, got ", e.hours);
    }
    if (item.contains("path_glob")) {
      if (!item["path_glob"].is_string()) Fail(ErrorKind::kValidation, named, ": 'path_glob' must be a string");
      e.path_glob = item["path_glob"].get<std::string>();
    }
    if (item.contains("enabled")) {
      if (!item["enabled"].is_boolean()) Fail(ErrorKind::kValidation, named, ": 'enabled' must be a boolean");
      e.enabled = item["enabled"].get<bool>();
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

DatasetManifest LoadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open manifest ", path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kValidation, "manifest ", path.string(), " is not valid JSON: ", e.what());
  }
  return ParseManifest(doc, path.parent_path());
}

nlohmann::json ManifestToJson(const DatasetManifest& manifest) {
  nlohmann::json entries = nlohmann::json::array();
  for (const ManifestEntry& e : manifest.entries) {
    entries.push_back({{"id", e.id},
                       {"domain", DomainName(e.domain)},
                       {"hours", e.hours},
                       {"path_glob", e.path_glob},
                       {"enabled", e.enabled}});
  }
  return {{"version", 1}, {"entries", entries}};
}

DomainMap DomainTotals(const DatasetManifest& manifest) {
  DomainMap totals{};
  for (const ManifestEntry& e : manifest.entries)
    if (e.enabled) totals[static_cast<std::size_t>(e.domain)] += e.hours;
  return totals;
}

double TotalHours(const DatasetManifest& manifest) {
  const DomainMap t = DomainTotals(manifest);
  return t[0] + t[1] + t[2];
}

DomainMap MixtureRatios(const DatasetManifest& manifest) {
  const DomainMap totals = DomainTotals(manifest);
  const double total = totals[0] + totals[1] + totals[2];
  if (!(total > 0.0)) Fail(ErrorKind::kEmptyPool, "mixture ratios: enabled entries hold zero hours");
  DomainMap ratios{};
  for (std::size_t i = 0; i < kNumDomains; ++i) ratios[i] = totals[i] / total;
  return ratios;
}

MixtureSpec NamedMixture(std::string_view name) {
  if (name == "speech-heavy") return {"speech-heavy", {0.70, 0.15, 0.15}};
  if (name == "balanced") return {"balanced", {0.40, 0.30, 0.30}};
  Fail(ErrorKind::kConfig, "unknown mixture spec '", name, "' (expected speech-heavy or balanced)");
}

void ValidateMixtureSpec(const MixtureSpec& spec) {
  double sum = 0.0;
  for (double r : spec.target_ratios) {
    if (!(r >= 0.0)) Fail(ErrorKind::kConfig, "mixture '", spec.name, "': negative ratio");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    Fail(ErrorKind::kConfig, "mixture '", spec.name, "': ratios sum to ", sum, ", not 1");
  }
}

std::vector<double> WithinDomainWeights(const DatasetManifest& manifest,
                                        WithinDomainWeighting weighting) {
  std::vector<double> raw(manifest.entries.size(), 0.0);
  DomainMap totals{};
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const ManifestEntry& e = manifest.entries[i];
    if (!e.enabled) continue;
    raw[i] = weighting == WithinDomainWeighting::kHours ? e.hours : 1.0;
    totals[static_cast<std::size_t>(e.domain)] += raw[i];
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double t = totals[static_cast<std::size_t>(manifest.entries[i].domain)];
    raw[i] = t > 0.0 ? raw[i] / t : 0.0;
  }
  return raw;
}

ClipPool ResolveClips(const DatasetManifest& manifest) {
  ClipPool pool;
  for (const ManifestEntry& e : manifest.entries) {
    std::vector<std::string> files;
    if (!e.path_glob.empty()) {
      const std::filesystem::path pattern =
          std::filesystem::path(e.path_glob).is_absolute() ? std::filesystem::path(e.path_glob)
                                                           : manifest.base_dir / e.path_glob;
      glob_t g{};
      const int rc = glob(pattern.string().c_str(), 0, nullptr, &g);
      if (rc == 0) {
        for (std::size_t i = 0; i < g.gl_pathc; ++i) files.emplace_back(g.gl_pathv[i]);
      }
      globfree(&g);
    }
    pool.clips.push_back(std::move(files));
  }
  return pool;
}

std::vector<ClipRef> SampleBatch(const DatasetManifest& manifest, const ClipPool& pool,
                                 const MixtureSpec& spec, std::size_t batch_size,
                                 std::uint64_t seed, std::uint64_t first_draw,
                                 WithinDomainWeighting weighting) {
  ValidateMixtureSpec(spec);
  if (pool.clips.size() != manifest.entries.size()) {
    Fail(ErrorKind::kContract, "clip pool does not match the manifest");
  }
  const std::vector<double> weights = WithinDomainWeights(manifest, weighting);
  std::array<std::vector<std::size_t>, kNumDomains> members;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (weights[i] > 0.0) members[static_cast<std::size_t>(manifest.entries[i].domain)].push_back(i);
  }
  for (Domain d : kAllDomains) {
    const auto di = static_cast<std::size_t>(d);
    if (spec.target_ratios[di] <= 0.0) continue;
    if (members[di].empty()) {
      Fail(ErrorKind::kConfig, "mixture '", spec.name, "' targets ", DomainName(d),
           " but no enabled dataset provides it");
    }
    for (std::size_t i : members[di]) {
      if (pool.clips[i].empty()) {
        Fail(ErrorKind::kData, "dataset '", manifest.entries[i].id, "' glob '",
             manifest.entries[i].path_glob, "' matched no files");
      }
    }
  }

  const CounterRng rng(seed, /*stream=*/0x6d6978);
  std::vector<ClipRef> out;
  out.reserve(batch_size);
  for (std::size_t n = 0; n < batch_size; ++n) {
    const std::uint64_t counter = first_draw + n;
    const double u_domain = rng.Uniform(counter, 0);
    std::size_t domain = kNumDomains;
    double acc = 0.0;
    for (std::size_t di = 0; di < kNumDomains; ++di) {
      if (spec.target_ratios[di] <= 0.0) continue;
      acc += spec.target_ratios[di];
      domain = di;
      if (u_domain < acc) break;
    }
    const auto& cand = members[domain];
    const double u_dataset = rng.Uniform(counter, 1);
    std::size_t entry = cand.back();
    acc = 0.0;
    for (std::size_t i : cand) {
      acc += weights[i];
      if (u_dataset < acc) {
        entry = i;
        break;
      }
    }
    const auto& files = pool.clips[entry];
    const auto pick = std::min(files.size() - 1,
                               static_cast<std::size_t>(rng.Uniform(counter, 2) * static_cast<double>(files.size())));
    out.push_back({manifest.entries[entry].id, manifest.entries[entry].domain, files[pick]});
  }
  return out;
}

}  // namespace obeats
