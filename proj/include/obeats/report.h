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


// Results tables: per-(task, system) scores grouped by domain, rendered as
// markdown with the best value of each row in bold, or as CSV.

#ifndef OBEATS_REPORT_H_
#define OBEATS_REPORT_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace obeats {

struct ResultRecord {
  std::string task;
  std::string domain;  // free text; "sound", "music" and "speech" group first
  std::string system;
  double value = 0.0;
  std::string metric;  // optional

  bool operator==(const ResultRecord&) const = default;
};

// Accepts {"results": [{task, domain?, system, value, metric?}]}, a probe
// metrics file {task, domain?, system, test: {metric, value}} or an ensemble
// study {task, domain?, entries: [{system, test: {metric, value}}]}.
std::vector<ResultRecord> ParseResults(const nlohmann::json& doc, const std::string& origin = "input");
std::vector<ResultRecord> LoadResults(const std::filesystem::path& path);

struct ResultTable {
  std::vector<std::string> systems;  // first-appearance order
  struct Row {
    std::string task;
    std::string domain;  // display form, e.g. "Sound"
    std::vector<std::optional<double>> values;
    std::vector<bool> best;
  };
  std::vector<Row> rows;  // Sound, Music, Speech, then other domains
};

// Fails with kValidation when one (task, system) pair carries two different
// values. Best marks need at least two systems; every tied maximum is marked.
ResultTable BuildTable(std::span<const ResultRecord> records);

std::string RenderMarkdown(const ResultTable& table, int decimals = 3);
std::string RenderCsv(const ResultTable& table);

}  // namespace obeats

#endif  // OBEATS_REPORT_H_
