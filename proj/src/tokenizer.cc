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

#include "obeats/tokenizer.h"

#include <algorithm>
#include <limits>
#include <numeric>

#include "obeats/error.h"
#include "obeats/rng.h"

namespace obeats {
namespace {

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

std::size_t CountDistinctRows(const Tensor& x) {
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    auto ra = x.row(a), rb = x.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::sort(order.begin(), order.end(), less);
  std::size_t distinct = order.empty() ? 0 : 1;
  for (std::size_t i = 1; i < order.size(); ++i) {
    auto ra = x.row(order[i - 1]), rb = x.row(order[i]);
    if (!std::equal(ra.begin(), ra.end(), rb.begin())) ++distinct;
  }
  return distinct;
}

// Returns true if any assignment changed.
bool Assign(const Tensor& x, const Tensor& centroids, std::vector<int>& assignment,
            std::vector<double>& dist) {
  bool changed = false;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = SquaredDistance(x.row(i), centroids.row(c));
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    if (assignment[i] != best) changed = true;
    assignment[i] = best;
    dist[i] = best_d;
  }
  return changed;
}

std::vector<std::size_t> RecomputeMeans(const Tensor& x, std::span<const int> assignment,
                                        Tensor& centroids) {
  const std::size_t k = centroids.rows(), d = x.cols();
  std::vector<std::size_t> counts(k, 0);
  Tensor sums({k, d});
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto c = static_cast<std::size_t>(assignment[i]);
    ++counts[c];
    auto row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += row[j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < d; ++j) {
      centroids[c * d + j] = sums[c * d + j] / static_cast<double>(counts[c]);
    }
  }
  return counts;
}

}  // namespace

double Inertia(const Tensor& features, const Tensor& centroids, std::span<const int> assignment) {
  double total = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    total += SquaredDistance(features.row(i), centroids.row(static_cast<std::size_t>(assignment[i])));
  }
  return total;
}

Codebook FitCodebook(const Tensor& features, std::size_t k, std::size_t max_iters,
                     std::uint64_t seed, FitReport* report) {
  const std::size_t n = features.rows(), d = features.cols();
  if (k < 1) Fail(ErrorKind::kConfig, "codebook size must be >= 1");
  if (n < k) Fail(ErrorKind::kDataInsufficient, "need at least K = ", k, " features, got ", n);
  if (!features.AllFinite()) Fail(ErrorKind::kData, "tokenizer features contain non-finite values");
  const std::size_t distinct = CountDistinctRows(features);
  if (distinct < k) {
    Fail(ErrorKind::kDataInsufficient, "only ", distinct, " distinct feature vectors for K = ", k,
         " centroids");
  }

  Rng rng(seed);
  Tensor centroids({k, d});
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(rng.Below(n));
  std::copy(features.row(first).begin(), features.row(first).end(), centroids.row(0).begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], SquaredDistance(features.row(i), centroids.row(c - 1)));
      total += nearest[i];
    }
    const double target = rng.Uniform() * total;
    double acc = 0.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (nearest[i] <= 0.0) continue;
      acc += nearest[i];
      pick = i;
      if (acc >= target) break;
    }
    std::copy(features.row(pick).begin(), features.row(pick).end(), centroids.row(c).begin());
  }

  FitReport local;
  FitReport& rep = report ? *report : local;
  rep = FitReport{};
  std::vector<int> assignment(n, -1);
  std::vector<double> dist(n, 0.0);
  Assign(features, centroids, assignment, dist);
  rep.inertia_history.push_back(std::accumulate(dist.begin(), dist.end(), 0.0));
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    std::vector<std::size_t> counts = RecomputeMeans(features, assignment, centroids);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      // Reseed to the point currently worst served by its own centroid.
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (dist[i] > dist[far]) far = i;
      std::copy(features.row(far).begin(), features.row(far).end(), centroids.row(c).begin());
      --counts[static_cast<std::size_t>(assignment[far])];
      assignment[far] = static_cast<int>(c);
      counts[c] = 1;
      dist[far] = 0.0;
    }
    ++rep.lloyd_iterations;
    const bool changed = Assign(features, centroids, assignment, dist);
    rep.inertia_history.push_back(std::accumulate(dist.begin(), dist.end(), 0.0));
    if (!changed) break;
  }
  std::vector<std::size_t> counts = RecomputeMeans(features, assignment, centroids);

  // Single-point transfers (Hartigan). Moving x from a to b changes inertia by
  // n_b/(n_b+1)|x-c_b|^2 - n_a/(n_a-1)|x-c_a|^2.
  constexpr std::size_t kMaxPasses = 200;
  for (std::size_t pass = 0; pass < kMaxPasses; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = static_cast<std::size_t>(assignment[i]);
      if (counts[a] <= 1) continue;
      auto x = features.row(i);
      const double na = static_cast<double>(counts[a]);
      const double remove_gain = na / (na - 1.0) * SquaredDistance(x, centroids.row(a));
      std::size_t best = a;
      double best_cost = remove_gain;
      for (std::size_t b = 0; b < k; ++b) {
        if (b == a) continue;
        const double nb = static_cast<double>(counts[b]);
        const double cost = nb / (nb + 1.0) * SquaredDistance(x, centroids.row(b));
        if (cost < best_cost) {
          best_cost = cost;
          best = b;
        }
      }
      if (best == a || best_cost >= remove_gain * (1.0 - 1e-12)) continue;
      const double nb = static_cast<double>(counts[best]);
      auto ca = centroids.row(a);
      auto cb = centroids.row(best);
      for (std::size_t j = 0; j < d; ++j) {
        ca[j] = (na * ca[j] - x[j]) / (na - 1.0);
        cb[j] = (nb * cb[j] + x[j]) / (nb + 1.0);
      }
      --counts[a];
      ++counts[best];
      assignment[i] = static_cast<int>(best);
      ++rep.refinement_moves;
      moved = true;
    }
    if (!moved) break;
  }
  RecomputeMeans(features, assignment, centroids);
  rep.inertia_history.push_back(Inertia(features, centroids, assignment));

  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      if (SquaredDistance(centroids.row(a), centroids.row(b)) <= 1e-24) {
        Fail(ErrorKind::kDataInsufficient, "centroids ", a, " and ", b, " coincide");
      }
    }
  }

  Codebook cb;
  cb.centroids = std::move(centroids);
  return cb;
}

std::vector<int> Quantize(const Codebook& codebook, const Tensor& features) {
  if (features.cols() != codebook.dim()) {
    Fail(ErrorKind::kDimension, "quantize: feature dim ", features.cols(), " vs codebook dim ",
         codebook.dim());
  }
  std::vector<int> tokens(features.rows(), 0);
  std::vector<double> dist(features.rows());
  Assign(features, codebook.centroids, tokens, dist);
  return tokens;
}

Tensor TokenizerFeatures(const EncoderWeights* teacher, const PatchGrid& grid) {
  if (teacher == nullptr) return grid.patches;
  return Encode(*teacher, grid).patch_outputs;
}

Codebook RefineIteration(const Codebook* previous, const EncoderWeights* teacher,
                         std::span<const PatchGrid> corpus_sample, const TokenizerConfig& config,
                         std::uint64_t seed) {
  if (corpus_sample.empty()) Fail(ErrorKind::kData, "tokenizer refit on an empty corpus sample");
  if (previous != nullptr && teacher == nullptr) {
    Fail(ErrorKind::kContract, "iterations after 0 need a teacher encoder");
  }
  const EncoderWeights* source = previous == nullptr ? nullptr : teacher;
  std::vector<Tensor> parts;
  std::size_t rows = 0;
  for (const PatchGrid& grid : corpus_sample) {
    parts.push_back(TokenizerFeatures(source, grid));
    rows += parts.back().rows();
  }
  const std::size_t dim = parts.front().cols();
  Tensor features({rows, dim});
  std::size_t offset = 0;
  for (const Tensor& part : parts) {
    std::copy(part.data().begin(), part.data().end(), features.data().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += part.size();
  }
  Codebook cb = FitCodebook(features, config.codebook_size, config.max_iters, seed);
  cb.iteration = previous == nullptr ? 0 : previous->iteration + 1;
  cb.feature_source = previous == nullptr ? kFeatureSourcePatch : kFeatureSourceEncoder;
  return cb;
}

}  // namespace obeats
