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

#include "obeats/adam.h"

#include <cmath>

#include "obeats/error.h"

namespace obeats {

AdamState AdamState::ZerosLike(std::span<const Tensor> params, AdamHyper hyper) {
  AdamState state;
  state.hyper = hyper;
  for (const Tensor& p : params) {
    state.m.emplace_back(p.shape(), 0.0);
    state.v.emplace_back(p.shape(), 0.0);
  }
  return state;
}

void AdamStep(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state,
              double lr_scale) {
  if (params.size() != grads.size()) {
    Fail(ErrorKind::kDimension, "adam: ", params.size(), " params but ", grads.size(),
         " gradients");
  }
  if (state.m.empty() && state.v.empty()) {
    AdamHyper hyper = state.hyper;
    state = AdamState::ZerosLike(params, hyper);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    Fail(ErrorKind::kDimension, "adam: state holds ", state.m.size(), " moments for ",
         params.size(), " params");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape() || state.m[i].shape() != params[i].shape() ||
        state.v[i].shape() != params[i].shape()) {
      Fail(ErrorKind::kDimension, "adam: param ", i, " shape ", ShapeToString(params[i].shape()),
           " vs grad ", ShapeToString(grads[i].shape()), " vs moment ",
           ShapeToString(state.m[i].shape()));
    }
  }

  state.step += 1;
  const AdamHyper& h = state.hyper;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  const double lr = h.learning_rate * lr_scale;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    const Tensor& g = grads[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
      v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
  }
}

}  // namespace obeats
