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


#include "obeats/report.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>

#include "obeats/config.h"
#include "obeats/error.h"

namespace obeats {
namespace {

std::string Lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

int DomainRank(const std::string& domain) {
  const std::string d = Lower(domain);
  if (d == "sound") return 0;
  if (d == "music") return 1;
  if (d == "speech") return 2;
  return 3;
}

std::string DisplayDomain(const std::string& domain) {
  if (domain.empty()) return "Other";
  std::string d = Lower(domain);
  d[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(d[0])));
  return d;
}

std::string FormatValue(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<ResultRecord> ParseResults(const nlohmann::json& doc, const std::string& origin) {
  std::vector<ResultRecord> out;
  try {
    if (!doc.is_object()) Fail(ErrorKind::kValidation, origin, ": expected a JSON object");
    if (doc.contains("results")) {
      for (const auto& r : doc.at("results")) {
        ResultRecord rec;
        rec.task = r.at("task").get<std::string>();
        rec.system = r.at("system").get<std::string>();
        rec.value = r.at("value").get<double>();
        if (r.contains("domain")) rec.domain = r["domain"].get<std::string>();
        if (r.contains("metric")) rec.metric = r["metric"].get<std::string>();
        out.push_back(std::move(rec));
      }
      return out;
    }
    const std::string task = doc.at("task").get<std::string>();
    const std::string domain = doc.contains("domain") ? doc["domain"].get<std::string>() : "";
    auto add = [&](const std::string& system, const nlohmann::json& test) {
      if (test.at("value").is_null()) return;
      out.push_back({task, domain, system, test.at("value").get<double>(),
                     test.contains("metric") ? test["metric"].get<std::string>() : ""});
    };
    if (doc.contains("entries")) {
      for (const auto& e : doc.at("entries")) add(e.at("system").get<std::string>(), e.at("test"));
    } else {
      add(doc.at("system").get<std::string>(), doc.at("test"));
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kValidation, origin, ": not a results file (", e.what(), ")");
  }
  return out;
}

std::vector<ResultRecord> LoadResults(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = LoadJsonFile(path);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) Fail(ErrorKind::kValidation, e.what());
    throw;
  }
  return ParseResults(doc, path.string());
}

ResultTable BuildTable(std::span<const ResultRecord> records) {
  ResultTable table;
  std::map<std::string, std::size_t> system_index;
  std::vector<std::string> task_order;
  std::map<std::string, std::string> task_domain;
  std::map<std::pair<std::string, std::string>, double> cells;
  for (const ResultRecord& r : records) {
    if (system_index.emplace(r.system, table.systems.size()).second) table.systems.push_back(r.system);
    auto [it, inserted] = task_domain.emplace(r.task, r.domain);
    if (inserted) {
      task_order.push_back(r.task);
    } else if (it->second.empty()) {
      it->second = r.domain;
    } else if (!r.domain.empty() && Lower(r.domain) != Lower(it->second)) {
      Fail(ErrorKind::kValidation, "task '", r.task, "' is listed under domains '", it->second, "' and '",
           r.domain, "'");
    }
    auto [cell, fresh] = cells.emplace(std::make_pair(r.task, r.system), r.value);
    if (!fresh && cell->second != r.value) {
      Fail(ErrorKind::kValidation, "conflicting results for task '", r.task, "', system '", r.system, "': ",
           cell->second, " vs ", r.value);
    }
  }
  std::stable_sort(task_order.begin(), task_order.end(), [&](const std::string& a, const std::string& b) {
    return DomainRank(task_domain[a]) < DomainRank(task_domain[b]);
  });
  for (const std::string& task : task_order) {
    ResultTable::Row row;
    row.task = task;
    row.domain = DisplayDomain(task_domain[task]);
    double best = 0.0;
    bool any = false;
    for (const std::string& system : table.systems) {
      auto it = cells.find({task, system});
      if (it == cells.end()) {
        row.values.push_back(std::nullopt);
        continue;
      }
      row.values.push_back(it->second);
      if (!any || it->second > best) best = it->second;
      any = true;
    }
    for (const auto& v : row.values) row.best.push_back(table.systems.size() >= 2 && v && *v == best);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string RenderMarkdown(const ResultTable& table, int decimals) {
  std::ostringstream out;
  out << "| Task | Domain |";
  for (const std::string& s : table.systems) out << ' ' << s << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < table.systems.size(); ++i) out << "---:|";
  out << '\n';
  for (const ResultTable::Row& row : table.rows) {
    out << "| " << row.task << " | " << row.domain << " |";
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      if (!row.values[i]) {
        out << " - |";
      } else if (row.best[i]) {
        out << " **" << FormatValue(*row.values[i], decimals) << "** |";
      } else {
        out << ' ' << FormatValue(*row.values[i], decimals) << " |";
      }
    }
    out << '\n';
  }
  out << "\nBest value per row in bold. mAP is the macro mean over classes with at least one "
         "positive label.\n";
  return out.str();
}

std::string RenderCsv(const ResultTable& table) {
  std::ostringstream out;
  out << "task,domain";
  for (const std::string& s : table.systems) out << ',' << CsvField(s);
  out << '\n';
  for (const ResultTable::Row& row : table.rows) {
    out << CsvField(row.task) << ',' << CsvField(row.domain);
    for (const auto& v : row.values) {
      out << ',';
      if (v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.10g", *v);
        out << buf;
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace obeats
