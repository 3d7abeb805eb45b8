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

#include "obeats/tensor.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "obeats/error.h"

namespace obeats {

std::string ShapeToString(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t ShapeNumel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(ShapeNumel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (ShapeNumel(shape_) != data_.size()) {
    Fail(ErrorKind::kDimension, "tensor shape ", ShapeToString(shape_),
         " does not match ", data_.size(), " values");
  }
}

Tensor Tensor::Matrix(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) Fail(ErrorKind::kDimension, "ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::Vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 1) return 1;
  return shape_.empty() ? 1 : shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.empty()) return 1;
  return shape_.back();
}

void Tensor::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

namespace {

void RequireMatrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    Fail(ErrorKind::kDimension, what, " expects a matrix, got shape ",
         ShapeToString(t.shape()));
  }
}

}  // namespace

void GemmNN(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = pc + i * n;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = pa[i * k + t];
      if (av == 0.0) continue;
      const double* brow = pb + t * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void GemmNT(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = pb + j * k;
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += arow[t] * brow[t];
      pc[i * n + j] += acc;
    }
  }
}

void GemmTN(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t t = 0; t < k; ++t) {
    const double* arow = pa + t * m;
    const double* brow = pb + t * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

Tensor Matmul(const Tensor& a, const Tensor& b) {
  RequireMatrix(a, "matmul");
  RequireMatrix(b, "matmul");
  if (a.cols() != b.rows()) {
    Fail(ErrorKind::kDimension, "matmul shape mismatch: ",
         ShapeToString(a.shape()), " . ", ShapeToString(b.shape()));
  }
  Tensor c({a.rows(), b.cols()});
  GemmNN(a, b, c);
  return c;
}

Tensor MatmulNT(const Tensor& a, const Tensor& b) {
  RequireMatrix(a, "matmul_nt");
  RequireMatrix(b, "matmul_nt");
  if (a.cols() != b.cols()) {
    Fail(ErrorKind::kDimension, "matmul_nt shape mismatch: ",
         ShapeToString(a.shape()), " . ", ShapeToString(b.shape()), "^T");
  }
  Tensor c({a.rows(), b.rows()});
  GemmNT(a, b, c);
  return c;
}

Tensor MatmulTN(const Tensor& a, const Tensor& b) {
  RequireMatrix(a, "matmul_tn");
  RequireMatrix(b, "matmul_tn");
  if (a.rows() != b.rows()) {
    Fail(ErrorKind::kDimension, "matmul_tn shape mismatch: ",
         ShapeToString(a.shape()), "^T . ", ShapeToString(b.shape()));
  }
  Tensor c({a.cols(), b.cols()});
  GemmTN(a, b, c);
  return c;
}

Tensor SoftmaxRows(const Tensor& x) {
  Tensor y(x.shape());
  const std::size_t m = x.rows(), n = x.cols();
  for (std::size_t i = 0; i < m; ++i) {
    auto in = x.row(i);
    auto out = y.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[j] = std::exp(in[j] - mx);
      total += out[j];
    }
    for (std::size_t j = 0; j < n; ++j) out[j] /= total;
  }
  return y;
}

Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps) {
  const std::size_t m = x.rows(), d = x.cols();
  if (gamma.size() != d || beta.size() != d) {
    Fail(ErrorKind::kDimension, "layer_norm: input ", ShapeToString(x.shape()),
         " vs gamma ", ShapeToString(gamma.shape()), " beta ",
         ShapeToString(beta.shape()));
  }
  if (!(eps > 0.0)) Fail(ErrorKind::kConfig, "layer_norm: eps must be > 0");
  Tensor y(x.shape());
  for (std::size_t i = 0; i < m; ++i) {
    auto in = x.row(i);
    auto out = y.row(i);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      out[j] = (in[j] - mean) * inv * gamma[j] + beta[j];
    }
  }
  return y;
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;
}  // namespace

double GeluScalar(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double GeluDerivative(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  const double t = std::tanh(u);
  const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

Tensor Gelu(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = GeluScalar(x[i]);
  return y;
}

double CrossEntropyLogits(const Tensor& logits, std::span<const int> targets) {
  const std::size_t m = logits.rows(), k = logits.cols();
  if (targets.size() != m) {
    Fail(ErrorKind::kDimension, "cross_entropy: ", m, " rows but ",
         targets.size(), " targets");
  }
  if (m == 0) Fail(ErrorKind::kContract, "cross_entropy over zero rows");
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const int t = targets[i];
    if (t < 0 || static_cast<std::size_t>(t) >= k) {
      Fail(ErrorKind::kIndex, "cross_entropy: target ", t, " outside [0, ", k,
           ")");
    }
    auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row) s += std::exp(v - mx);
    total += std::log(s) + mx - row[static_cast<std::size_t>(t)];
  }
  return total / static_cast<double>(m);
}

Tensor Transpose(const Tensor& x) {
  const std::size_t m = x.rows(), n = x.cols();
  Tensor y({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y.at(j, i) = x.at(i, j);
  return y;
}

}  // namespace obeats
