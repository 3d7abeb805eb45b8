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

#include "obeats/probe.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "obeats/adam.h"
#include "obeats/autodiff.h"
#include "obeats/error.h"
#include "obeats/rng.h"

namespace obeats {

std::string_view TaskKindName(TaskKind kind) {
  return kind == TaskKind::kMulticlass ? "multiclass" : "multilabel";
}

TaskKind ParseTaskKind(std::string_view name) {
  if (name == "multiclass") return TaskKind::kMulticlass;
  if (name == "multilabel") return TaskKind::kMultilabel;
  Fail(ErrorKind::kValidation, "unknown task kind '", name, "' (expected multiclass or multilabel)");
}

void ValidateTask(const TaskSpec& task) {
  if (task.num_classes < 1) Fail(ErrorKind::kValidation, "task '", task.name, "': num_classes must be >= 1");
  std::set<std::string> seen;
  auto check_split = [&](const std::vector<LabeledClip>& split, const char* name) {
    for (const LabeledClip& c : split) {
      const std::string key = c.oemb_path.empty() ? c.clip_path : c.oemb_path;
      if (key.empty()) Fail(ErrorKind::kValidation, "task '", task.name, "' ", name, ": item without a path");
      if (!seen.insert(key).second) {
        Fail(ErrorKind::kValidation, "task '", task.name, "': ", key, " appears in more than one split slot");
      }
      if (task.kind == TaskKind::kMulticlass && c.labels.size() != 1) {
        Fail(ErrorKind::kValidation, "task '", task.name, "' ", name, ": ", key,
             " needs exactly one label for a multiclass task");
      }
      for (int l : c.labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= task.num_classes) {
          Fail(ErrorKind::kValidation, "task '", task.name, "' ", name, ": label ", l, " of ", key,
               " outside [0, ", task.num_classes, ")");
        }
      }
    }
  };
  check_split(task.train, "train");
  check_split(task.valid, "valid");
  check_split(task.test, "test");
}

TaskSpec ParseTask(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  TaskSpec task;
  auto resolve = [&](const std::string& p) {
    if (p.empty() || std::filesystem::path(p).is_absolute() || base_dir.empty()) return p;
    return (base_dir / p).string();
  };
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key != "name" && key != "kind" && key != "num_classes" && key != "splits" && key != "domain") {
        Fail(ErrorKind::kValidation, "task: unknown key '", key, "'");
      }
    }
    task.name = doc.at("name").get<std::string>();
    task.kind = ParseTaskKind(doc.at("kind").get<std::string>());
    task.num_classes = doc.at("num_classes").get<std::size_t>();
    if (doc.contains("domain")) task.domain = doc["domain"].get<std::string>();
    const auto& splits = doc.at("splits");
    for (const auto& [key, value] : splits.items()) {
      if (key != "train" && key != "valid" && key != "test") {
        Fail(ErrorKind::kValidation, "task: unknown split '", key, "'");
      }
    }
    auto read_split = [&](const char* name, std::vector<LabeledClip>& out) {
      if (!splits.contains(name)) return;
      for (const auto& item : splits.at(name)) {
        LabeledClip c;
        if (item.contains("clip_path")) c.clip_path = resolve(item["clip_path"].get<std::string>());
        if (item.contains("oemb_path")) c.oemb_path = resolve(item["oemb_path"].get<std::string>());
        if (item.contains("label")) c.labels.push_back(item["label"].get<int>());
        if (item.contains("labels")) {
          for (const auto& l : item["labels"]) c.labels.push_back(l.get<int>());
        }
        out.push_back(std::move(c));
      }
    };
    read_split("train", task.train);
    read_split("valid", task.valid);
    read_split("test", task.test);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kValidation, "task file: ", e.what());
  }
  ValidateTask(task);
  return task;
}

TaskSpec LoadTask(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open task file ", path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kValidation, "task file ", path.string(), " is not valid JSON: ", e.what());
  }
  return ParseTask(doc, path.parent_path());
}

nlohmann::json TaskToJson(const TaskSpec& task) {
  auto split = [&](const std::vector<LabeledClip>& clips) {
    nlohmann::json arr = nlohmann::json::array();
    for (const LabeledClip& c : clips) {
      nlohmann::json item;
      if (!c.clip_path.empty()) item["clip_path"] = c.clip_path;
      if (!c.oemb_path.empty()) item["oemb_path"] = c.oemb_path;
      if (task.kind == TaskKind::kMulticlass) {
        item["label"] = c.labels.at(0);
      } else {
        item["labels"] = c.labels;
      }
      arr.push_back(std::move(item));
    }
    return arr;
  };
  nlohmann::json doc = {{"name", task.name},
                        {"kind", TaskKindName(task.kind)},
                        {"num_classes", task.num_classes},
                        {"splits", {{"train", split(task.train)}, {"valid", split(task.valid)}, {"test", split(task.test)}}}};
  if (!task.domain.empty()) doc["domain"] = task.domain;
  return doc;
}

Tensor PoolClip(const EmbeddingSequence& seq) {
  const std::size_t n = seq.length(), h = seq.dim();
  if (n == 0) Fail(ErrorKind::kEmptyInput, "pool of an empty sequence");
  Tensor out({h});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < h; ++c) out[c] += seq.vectors.at(i, c);
  for (double& v : out.storage()) v /= static_cast<double>(n);
  return out;
}

void ValidateProbeConfig(const ProbeConfig& config) {
  if (config.epochs < 1) Fail(ErrorKind::kValidation, "probe epochs must be >= 1");
  if (config.batch_size < 1) Fail(ErrorKind::kValidation, "probe batch_size must be >= 1");
  if (!(config.learning_rate > 0.0)) Fail(ErrorKind::kValidation, "probe learning_rate must be > 0");
}

ProbeData MakeProbeData(std::span<const Tensor> pooled, std::vector<std::vector<int>> labels) {
  if (pooled.size() != labels.size()) {
    Fail(ErrorKind::kDimension, pooled.size(), " pooled vectors but ", labels.size(), " label sets");
  }
  ProbeData data;
  const std::size_t h = pooled.empty() ? 0 : pooled.front().size();
  data.features = Tensor({pooled.size(), h});
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    if (pooled[i].size() != h) {
      Fail(ErrorKind::kDimension, "clip ", i, " has embedding dim ", pooled[i].size(), ", expected ", h);
    }
    std::copy(pooled[i].data().begin(), pooled[i].data().end(), data.features.row(i).begin());
  }
  data.labels = std::move(labels);
  return data;
}

namespace {

Tensor StandardizeWith(const Tensor& x, const Tensor& mean, const Tensor& scale) {
  Tensor out = x;
  const std::size_t h = x.cols();
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < h; ++c) out.at(i, c) = (x.at(i, c) - mean[c]) * scale[c];
  return out;
}

Tensor LabelMatrix(std::span<const std::vector<int>> labels, std::size_t num_classes) {
  Tensor y({labels.size(), num_classes});
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (int l : labels[i]) y.at(i, static_cast<std::size_t>(l)) = 1.0;
  return y;
}

Var ProbeForward(std::span<const Var> p, Var x) {
  if (p.size() == 2) return AddRow(Matmul(x, p[0]), p[1]);
  Var hidden = Gelu(AddRow(Matmul(x, p[0]), p[1]));
  return AddRow(Matmul(hidden, p[2]), p[3]);
}

Tensor XavierUniform(std::size_t in, std::size_t out, Rng& rng) {
  Tensor w({in, out});
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& v : w.storage()) v = rng.Uniform(-bound, bound);
  return w;
}

}  // namespace

Tensor ProbeWeights::Logits(const Tensor& features) const {
  if (features.cols() != feature_mean.size()) {
    Fail(ErrorKind::kDimension, "probe expects dim ", feature_mean.size(), ", got ", features.cols());
  }
  Graph g;
  std::vector<Var> p;
  for (const Tensor& t : tensors) p.push_back(g.Constant(t));
  return ProbeForward(p, g.Constant(StandardizeWith(features, feature_mean, feature_scale))).value();
}

ProbeWeights TrainProbe(const ProbeData& train, const ProbeData& valid, TaskKind kind,
                        std::size_t num_classes, const ProbeConfig& config) {
  ValidateProbeConfig(config);
  if (train.size() == 0) Fail(ErrorKind::kData, "probe training split is empty");
  const std::size_t n = train.size(), h = train.features.cols();
  if (valid.size() > 0 && valid.features.cols() != h) {
    Fail(ErrorKind::kDimension, "validation dim ", valid.features.cols(), " vs train dim ", h);
  }

  ProbeWeights probe;
  probe.kind = kind;
  probe.num_classes = num_classes;
  probe.hidden_dim = config.hidden_dim;
  probe.feature_mean = Tensor({h});
  probe.feature_scale = Tensor({h});
  for (std::size_t c = 0; c < h; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += train.features.at(i, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (train.features.at(i, c) - mean) * (train.features.at(i, c) - mean);
    var /= static_cast<double>(n);
    probe.feature_mean[c] = mean;
    probe.feature_scale[c] = 1.0 / std::sqrt(var + 1e-8);
  }
  const Tensor x_train = StandardizeWith(train.features, probe.feature_mean, probe.feature_scale);
  const Tensor y_train = LabelMatrix(train.labels, num_classes);

  Rng init(DeriveKey(config.seed, {0x70726f6265}));
  if (config.hidden_dim == 0) {
    probe.tensors = {XavierUniform(h, num_classes, init), Tensor({num_classes})};
  } else {
    probe.tensors = {XavierUniform(h, config.hidden_dim, init), Tensor({config.hidden_dim}),
                     XavierUniform(config.hidden_dim, num_classes, init), Tensor({num_classes})};
  }
  AdamState adam;
  adam.hyper.learning_rate = config.learning_rate;

  const ProbeData& monitor = valid.size() > 0 ? valid : train;
  ProbeWeights best = probe;
  double best_metric = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle(DeriveKey(config.seed, {epoch + 1}));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.Below(i)]);

    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, n - start);
      Tensor xb({count, h});
      Tensor yb({count, num_classes});
      std::vector<int> targets(count);
      for (std::size_t r = 0; r < count; ++r) {
        const std::size_t src = order[start + r];
        std::copy(x_train.row(src).begin(), x_train.row(src).end(), xb.row(r).begin());
        std::copy(y_train.row(src).begin(), y_train.row(src).end(), yb.row(r).begin());
        targets[r] = train.labels[src].empty() ? 0 : train.labels[src][0];
      }
      Graph g;
      std::vector<Var> params;
      for (const Tensor& t : probe.tensors) params.push_back(g.Param(t));
      Var logits = ProbeForward(params, g.Constant(std::move(xb)));
      Var loss = kind == TaskKind::kMulticlass ? CrossEntropyLogits(logits, targets)
                                               : BinaryCrossEntropyLogits(logits, yb);
      g.Backward(loss);
      std::vector<Tensor> grads;
      for (Var p : params) grads.push_back(g.Grad(p));
      AdamStep(probe.tensors, grads, adam);
    }

    const double metric = Evaluate(probe, monitor).value;
    if (metric > best_metric) {
      best_metric = metric;
      best = probe;
      best.best_epoch = epoch + 1;
      best.best_validation = metric;
      since_best = 0;
    } else if (++since_best >= config.patience && config.patience > 0) {
      break;
    }
  }
  return best;
}

nlohmann::json MetricsToJson(const Metrics& m) {
  nlohmann::json per_class = nlohmann::json::array();
  for (double v : m.per_class) {
    if (std::isnan(v)) {
      per_class.push_back(nullptr);
    } else {
      per_class.push_back(v);
    }
  }
  return {{"metric", m.metric}, {"value", m.value}, {"per_class", per_class}, {"count", m.count}};
}

double AveragePrecision(std::span<const double> scores, std::span<const int> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double hits = 0.0, total = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] != 0) {
      hits += 1.0;
      total += hits / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return total / hits;
}

double MapScore(const Tensor& scores, const Tensor& labels, std::vector<double>* per_class) {
  if (scores.shape() != labels.shape()) {
    Fail(ErrorKind::kDimension, "map_score: scores ", ShapeToString(scores.shape()), " vs labels ",
         ShapeToString(labels.shape()));
  }
  const std::size_t n = scores.rows(), classes = scores.cols();
  std::vector<double> ap(classes);
  std::vector<double> col(n);
  std::vector<int> lab(n);
  double sum = 0.0;
  std::size_t included = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      col[i] = scores.at(i, c);
      lab[i] = labels.at(i, c) != 0.0 ? 1 : 0;
    }
    ap[c] = AveragePrecision(col, lab);
    if (!std::isnan(ap[c])) {
      sum += ap[c];
      ++included;
    }
  }
  if (per_class != nullptr) *per_class = ap;
  if (included == 0) Fail(ErrorKind::kData, "map_score: no class has a positive label");
  return sum / static_cast<double>(included);
}

Metrics EvaluateScores(const Tensor& scores, std::span<const std::vector<int>> labels, TaskKind kind,
                       std::size_t num_classes) {
  if (scores.rows() != labels.size() || scores.cols() != num_classes) {
    Fail(ErrorKind::kDimension, "evaluate: scores ", ShapeToString(scores.shape()), " for ", labels.size(),
         " clips and ", num_classes, " classes");
  }
  Metrics m;
  m.count = labels.size();
  if (kind == TaskKind::kMultilabel) {
    m.metric = "mAP";
    m.value = MapScore(scores, LabelMatrix(labels, num_classes), &m.per_class);
    return m;
  }
  m.metric = "accuracy";
  std::vector<double> correct(num_classes, 0.0), seen(num_classes, 0.0);
  double hits = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto row = scores.row(i);
    const auto pred = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    const auto truth = static_cast<std::size_t>(labels[i].at(0));
    seen[truth] += 1.0;
    if (pred == truth) {
      hits += 1.0;
      correct[truth] += 1.0;
    }
  }
  m.value = labels.empty() ? 0.0 : hits / static_cast<double>(labels.size());
  m.per_class.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    m.per_class[c] = seen[c] > 0.0 ? correct[c] / seen[c] : std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

Metrics Evaluate(const ProbeWeights& probe, const ProbeData& data) {
  return EvaluateScores(probe.Logits(data.features), data.labels, probe.kind, probe.num_classes);
}

nlohmann::json StudyReport::ToJson() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const StudyEntry& e : entries) {
    rows.push_back({{"system", e.system},
                    {"combiner", e.combiner},
                    {"valid", MetricsToJson(e.valid)},
                    {"test", MetricsToJson(e.test)}});
  }
  nlohmann::json doc = {{"task", task},
                        {"entries", rows},
                        {"best_single", best_single},
                        {"concat", concat},
                        {"delta_concat_vs_best_single", concat - best_single},
                        {"notes", notes}};
  if (std::isnan(average)) {
    doc["average"] = nullptr;
  } else {
    doc["average"] = average;
    doc["delta_concat_vs_average"] = concat - average;
  }
  return doc;
}

namespace {

std::vector<std::vector<int>> LabelsOf(const std::vector<LabeledClip>& clips) {
  std::vector<std::vector<int>> out;
  for (const LabeledClip& c : clips) out.push_back(c.labels);
  return out;
}

ProbeData PoolSplit(std::span<const EmbeddingSequence> seqs, const std::vector<LabeledClip>& clips) {
  std::vector<Tensor> pooled;
  for (const EmbeddingSequence& s : seqs) pooled.push_back(PoolClip(s));
  return MakeProbeData(pooled, LabelsOf(clips));
}

}  // namespace

StudyReport RunEnsembleStudy(std::span<const StudySource> sources, const TaskSpec& task,
                             const ProbeConfig& config, UpsampleMode upsample, bool standardize) {
  if (sources.size() < 2) Fail(ErrorKind::kConfig, "an ensemble study needs at least two sources");
  for (const StudySource& s : sources) {
    if (s.train.size() != task.train.size() || s.valid.size() != task.valid.size() ||
        s.test.size() != task.test.size()) {
      Fail(ErrorKind::kDimension, "source '", s.name, "' does not cover every clip of task '", task.name, "'");
    }
  }
  StudyReport report;
  report.task = task.name;
  report.average = std::numeric_limits<double>::quiet_NaN();

  auto run = [&](const std::string& system, const std::string& combiner,
                 std::span<const EmbeddingSequence> tr, std::span<const EmbeddingSequence> va,
                 std::span<const EmbeddingSequence> te) {
    const ProbeData train = PoolSplit(tr, task.train);
    const ProbeData valid = PoolSplit(va, task.valid);
    const ProbeData test = PoolSplit(te, task.test);
    const ProbeWeights probe = TrainProbe(train, valid, task.kind, task.num_classes, config);
    StudyEntry e{system, combiner, valid.size() > 0 ? Evaluate(probe, valid) : Metrics{}, Evaluate(probe, test)};
    report.entries.push_back(e);
    return e.test.value;
  };

  report.best_single = -std::numeric_limits<double>::infinity();
  for (const StudySource& s : sources) {
    report.best_single = std::max(report.best_single, run(s.name, "single", s.train, s.valid, s.test));
  }

  bool equal_widths = true;
  const std::size_t h0 = sources.front().train.empty() ? 0 : sources.front().train.front().dim();
  for (const StudySource& s : sources)
    if (!s.train.empty() && s.train.front().dim() != h0) equal_widths = false;

  auto fuse = [&](CombinerMode mode, auto member) {
    std::vector<EmbeddingSequence> out;
    const std::size_t count = (sources.front().*member).size();
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<EmbeddingSequence> per_clip;
      for (const StudySource& s : sources) per_clip.push_back((s.*member)[i]);
      out.push_back(EnsembleSequences(per_clip, {mode, upsample, standardize}));
    }
    return out;
  };
  std::string names;
  for (const StudySource& s : sources) names += (names.empty() ? "" : "+") + s.name;

  report.concat = run("concat(" + names + ")", "concat", fuse(CombinerMode::kConcatenate, &StudySource::train),
                      fuse(CombinerMode::kConcatenate, &StudySource::valid),
                      fuse(CombinerMode::kConcatenate, &StudySource::test));
  if (equal_widths) {
    report.average = run("average(" + names + ")", "average", fuse(CombinerMode::kAverage, &StudySource::train),
                         fuse(CombinerMode::kAverage, &StudySource::valid),
                         fuse(CombinerMode::kAverage, &StudySource::test));
  } else {
    report.notes.push_back("average combiner skipped: sources have different embedding widths");
  }
  report.notes.push_back(task.kind == TaskKind::kMultilabel
                             ? "mAP is the macro mean over classes with at least one positive test label"
                             : "accuracy is top-1 with ties resolved to the lowest class index");
  return report;
}

}  // namespace obeats
