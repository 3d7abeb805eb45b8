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


#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "obeats/adam.h"
#include "testing.h"

namespace obeats {
namespace {

using testing::KindName;
using testing::RaisedKind;

// Independent scalar Adam with bias correction.
struct ScalarAdam {
  double lr, b1, b2, eps;
  double m = 0.0, v = 0.0;
  int t = 0;
  double Step(double param, double grad) {
    ++t;
    m = b1 * m + (1 - b1) * grad;
    v = b2 * v + (1 - b2) * grad * grad;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    return param - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

TEST(AdamTest, ZeroGradientLeavesParametersAndDecaysMoments) {
  std::vector<Tensor> params = {Tensor::Vector({1.0, -2.0})};
  AdamState state = AdamState::ZerosLike(params);
  state.m[0] = Tensor::Vector({0.5, 0.5});
  state.v[0] = Tensor::Vector({0.25, 0.25});
  state.step = 3;
  const std::vector<Tensor> grads = {Tensor({2}, 0.0)};
  const Tensor before = params[0];
  AdamStep(params, grads, state);
  EXPECT_NEAR(state.m[0][0], 0.45, 1e-15);
  EXPECT_NEAR(state.v[0][0], 0.25 * 0.999, 1e-15);
  EXPECT_EQ(state.step, 4u);
  // The decayed first moment still moves the parameters; with zero moments
  // nothing moves at all.
  std::vector<Tensor> fresh = {before};
  AdamState zero = AdamState::ZerosLike(fresh);
  AdamStep(fresh, grads, zero);
  EXPECT_EQ(fresh[0], before);
  EXPECT_EQ(zero.m[0], Tensor({2}, 0.0));
}

TEST(AdamTest, FirstStepMovesByLearningRateAgainstGradientSign) {
  std::vector<Tensor> params = {Tensor::Vector({0.0, 1.0, -1.0})};
  const std::vector<Tensor> grads = {Tensor::Vector({3.0, -0.02, 1e-3})};
  AdamState state;
  state.hyper.learning_rate = 0.01;
  AdamStep(params, grads, state);
  const double lr = 0.01, eps = 1e-8;
  EXPECT_NEAR(params[0][0], -lr, lr * eps / 3.0 + 1e-15);
  EXPECT_NEAR(params[0][1], 1.0 + lr, lr * eps / 0.02 + 1e-15);
  EXPECT_NEAR(params[0][2], -1.0 - lr, lr * eps / 1e-3 + 1e-15);
}

TEST(AdamTest, TwoStepsMatchClosedForm) {
  std::vector<Tensor> params = {Tensor::Vector({0.5})};
  AdamState state;
  state.hyper.learning_rate = 0.1;
  ScalarAdam oracle{0.1, 0.9, 0.999, 1e-8};
  double p = 0.5;
  for (double g : {2.0, -0.5}) {
    AdamStep(params, std::vector<Tensor>{Tensor::Vector({g})}, state);
    p = oracle.Step(p, g);
  }
  EXPECT_NEAR(params[0][0], p, 1e-14);
  EXPECT_EQ(state.step, 2u);
}

TEST(AdamTest, TwoStepsDifferFromOneDoubledStep) {
  auto run_two = [](double g1, double g2) {
    std::vector<Tensor> params = {Tensor::Vector({0.0})};
    AdamState state;
    AdamStep(params, std::vector<Tensor>{Tensor::Vector({g1})}, state);
    AdamStep(params, std::vector<Tensor>{Tensor::Vector({g2})}, state);
    return params[0][0];
  };
  auto run_doubled = [](double g) {
    std::vector<Tensor> params = {Tensor::Vector({0.0})};
    AdamState state;
    state.hyper.learning_rate *= 2.0;
    AdamStep(params, std::vector<Tensor>{Tensor::Vector({g})}, state);
    return params[0][0];
  };
  // With bias correction a repeated gradient reproduces the first step
  // exactly, so only the epsilon term separates the two schedules.
  EXPECT_NEAR(run_two(1.0, 1.0), run_doubled(1.0), 1e-10);
  // A changed gradient exposes the corrected second-step moments.
  const double two = run_two(1.0, 0.25);
  ScalarAdam oracle{1e-3, 0.9, 0.999, 1e-8};
  const double expected = oracle.Step(oracle.Step(0.0, 1.0), 0.25);
  EXPECT_NEAR(two, expected, 1e-15);
  EXPECT_GT(std::abs(two - run_doubled(1.0)), 1e-5);
}

TEST(AdamTest, ShapeMismatchIsDimensionError) {
  std::vector<Tensor> params = {Tensor({2, 2})};
  AdamState state;
  const std::vector<Tensor> grads = {Tensor({4})};
  EXPECT_EQ(RaisedKind([&] { AdamStep(params, grads, state); }), KindName(ErrorKind::kDimension));
  const std::vector<Tensor> none;
  EXPECT_EQ(RaisedKind([&] { AdamStep(params, none, state); }), KindName(ErrorKind::kDimension));
}

TEST(AdamTest, LearningRateScaleMultipliesStep) {
  std::vector<Tensor> a = {Tensor::Vector({0.0})};
  std::vector<Tensor> b = a;
  AdamState sa, sb;
  sb.hyper.learning_rate = 0.5e-3;
  AdamStep(a, std::vector<Tensor>{Tensor::Vector({1.0})}, sa, 0.5);
  AdamStep(b, std::vector<Tensor>{Tensor::Vector({1.0})}, sb);
  EXPECT_DOUBLE_EQ(a[0][0], b[0][0]);
}

}  // namespace
}  // namespace obeats
