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

// Frozen-encoder evaluation: clip pooling, MLP/linear probes, accuracy and
// macro mAP, and the single-source vs ensemble comparison study.

#ifndef OBEATS_PROBE_H_
#define OBEATS_PROBE_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "obeats/encoder.h"
#include "obeats/ensemble.h"
#include "obeats/tensor.h"

namespace obeats {

enum class TaskKind { kMulticlass, kMultilabel };

std::string_view TaskKindName(TaskKind kind);
TaskKind ParseTaskKind(std::string_view name);

struct LabeledClip {
  std::string clip_path;
  std::string oemb_path;
  std::vector<int> labels;  // exactly one for multiclass
};

struct TaskSpec {
  std::string name;
  TaskKind kind = TaskKind::kMulticlass;
  std::size_t num_classes = 0;
  std::string domain;  // optional: speech | music | sound, used by reports
  std::vector<LabeledClip> train;
  std::vector<LabeledClip> valid;
  std::vector<LabeledClip> test;
};

// Checks label ranges, label arity and split disjointness (kValidation).
void ValidateTask(const TaskSpec& task);
// Relative clip/oemb paths resolve against base_dir.
TaskSpec ParseTask(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
TaskSpec LoadTask(const std::filesystem::path& path);
nlohmann::json TaskToJson(const TaskSpec& task);

// Mean over the N positions; a length-h vector.
Tensor PoolClip(const EmbeddingSequence& seq);

struct ProbeConfig {
  std::size_t hidden_dim = 256;  // 0: linear probe
  std::size_t epochs = 40;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::size_t patience = 5;

  bool operator==(const ProbeConfig&) const = default;
};

void ValidateProbeConfig(const ProbeConfig& config);

struct ProbeData {
  Tensor features;                      // n x h
  std::vector<std::vector<int>> labels;  // n entries

  std::size_t size() const { return labels.size(); }
};

// Stacks pooled vectors; kDimension if widths differ.
ProbeData MakeProbeData(std::span<const Tensor> pooled, std::vector<std::vector<int>> labels);

struct ProbeWeights {
  TaskKind kind = TaskKind::kMulticlass;
  std::size_t num_classes = 0;
  std::size_t hidden_dim = 0;
  Tensor feature_mean;  // train-split standardization
  Tensor feature_scale;
  std::vector<Tensor> tensors;  // {w1, b1, w2, b2} or {w, b}
  std::size_t best_epoch = 0;
  double best_validation = 0.0;

  Tensor Logits(const Tensor& features) const;
  bool operator==(const ProbeWeights&) const = default;
};

// Adam on cross-entropy (multiclass) or per-class binary cross-entropy
// (multilabel). Returns the weights of the best validation epoch; training
// stops after `patience` epochs without improvement. Inputs are not modified.
ProbeWeights TrainProbe(const ProbeData& train, const ProbeData& valid, TaskKind kind,
                        std::size_t num_classes, const ProbeConfig& config);

struct Metrics {
  std::string metric;             // "accuracy" or "mAP"
  double value = 0.0;
  std::vector<double> per_class;  // recall per class, or AP; NaN when undefined
  std::size_t count = 0;
};

nlohmann::json MetricsToJson(const Metrics& m);

// Top-1 accuracy with lowest-index tie breaking, or macro mAP.
Metrics EvaluateScores(const Tensor& scores, std::span<const std::vector<int>> labels,
                       TaskKind kind, std::size_t num_classes);
Metrics Evaluate(const ProbeWeights& probe, const ProbeData& data);

// Precision averaged over each positive's rank in the score-descending list
// (ties keep input order). NaN when there are no positives.
double AveragePrecision(std::span<const double> scores, std::span<const int> labels);

// Macro mean of per-class AP over classes with at least one positive.
// scores and labels are n x C; labels binary.
double MapScore(const Tensor& scores, const Tensor& labels, std::vector<double>* per_class = nullptr);

// One embedding source: a sequence per clip, per split, in task order.
struct StudySource {
  std::string name;
  std::vector<EmbeddingSequence> train;
  std::vector<EmbeddingSequence> valid;
  std::vector<EmbeddingSequence> test;
};

struct StudyEntry {
  std::string system;
  std::string combiner;  // "single", "concat" or "average"
  Metrics valid;
  Metrics test;
};

struct StudyReport {
  std::string task;
  std::vector<StudyEntry> entries;
  std::vector<std::string> notes;
  double best_single = 0.0;
  double concat = 0.0;
  double average = 0.0;  // NaN when widths differ
  nlohmann::json ToJson() const;
};

// Probes each source alone, the concatenated ensemble, and (when all widths
// match) the averaged ensemble. Every probe uses the same config.
StudyReport RunEnsembleStudy(std::span<const StudySource> sources, const TaskSpec& task,
                             const ProbeConfig& config, UpsampleMode upsample = UpsampleMode::kNearest,
                             bool standardize = false);

}  // namespace obeats

#endif  // OBEATS_PROBE_H_
