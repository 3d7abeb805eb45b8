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

// Discrete targets for masked prediction. A k-means codebook over per-patch
// features plays the tokenizer role: iteration 0 clusters raw patches, later
// iterations cluster the per-patch outputs of the previous (teacher) encoder.

#ifndef OBEATS_TOKENIZER_H_
#define OBEATS_TOKENIZER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "obeats/encoder.h"
#include "obeats/frontend.h"
#include "obeats/tensor.h"

namespace obeats {

inline constexpr char kFeatureSourcePatch[] = "patch";
inline constexpr char kFeatureSourceEncoder[] = "encoder-layer-output";

struct Codebook {
  Tensor centroids;  // K x d
  int iteration = 0;
  std::string feature_source = kFeatureSourcePatch;

  std::size_t size() const { return centroids.rows(); }
  std::size_t dim() const { return centroids.cols(); }
  bool operator==(const Codebook&) const = default;
};

struct FitReport {
  // Inertia after each assignment pass, then after the single-point
  // refinement. Non-increasing.
  std::vector<double> inertia_history;
  std::size_t lloyd_iterations = 0;
  std::size_t refinement_moves = 0;
};

// k-means++ seeding, Lloyd iterations until the assignment is stable or
// max_iters passes ran (empty clusters are reseeded to the point farthest from
// its centroid), then single-point transfers until no move lowers inertia.
// Fails with kDataInsufficient when fewer than K distinct rows exist.
Codebook FitCodebook(const Tensor& features, std::size_t k, std::size_t max_iters,
                     std::uint64_t seed, FitReport* report = nullptr);

// Nearest centroid by squared Euclidean distance, lowest index on ties.
std::vector<int> Quantize(const Codebook& codebook, const Tensor& features);

double Inertia(const Tensor& features, const Tensor& centroids, std::span<const int> assignment);

struct TokenizerConfig {
  std::size_t codebook_size = 64;
  std::size_t max_iters = 50;

  bool operator==(const TokenizerConfig&) const = default;
};

// Per-patch tokenizer features: raw flattened patches when teacher is null,
// otherwise the teacher's final per-patch outputs (no masking, no pooling).
Tensor TokenizerFeatures(const EncoderWeights* teacher, const PatchGrid& grid);

// Refits the codebook. Without a previous codebook this is iteration 0 over
// raw patches; otherwise iteration previous->iteration + 1 over teacher
// features, and teacher must be non-null.
Codebook RefineIteration(const Codebook* previous, const EncoderWeights* teacher,
                         std::span<const PatchGrid> corpus_sample, const TokenizerConfig& config,
                         std::uint64_t seed);

}  // namespace obeats

#endif  // OBEATS_TOKENIZER_H_
