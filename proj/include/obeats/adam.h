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

#ifndef OBEATS_ADAM_H_
#define OBEATS_ADAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "obeats/tensor.h"

namespace obeats {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamHyper&) const = default;
};

struct AdamState {
  std::uint64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  AdamHyper hyper;

  // Zero moments shaped like params.
  static AdamState ZerosLike(std::span<const Tensor> params, AdamHyper hyper = {});
};

// One bias-corrected Adam update applied in place. Moments are created on the
// first call if state is empty. lr_scale multiplies hyper.learning_rate for
// this step only (used by warmup).
void AdamStep(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state,
              double lr_scale = 1.0);

}  // namespace obeats

#endif  // OBEATS_ADAM_H_
