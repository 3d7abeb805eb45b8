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

// Dense row-major float64 tensors and the forward kernels shared by the
// autodiff graph (autodiff.h) and by plain inference code.

#ifndef OBEATS_TENSOR_H_
#define OBEATS_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace obeats {

using Shape = std::vector<std::size_t>;

std::string ShapeToString(const Shape& shape);
std::size_t ShapeNumel(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  // Builds a rows x cols matrix from nested initializer lists.
  static Tensor Matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor Vector(std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Matrix view. Rank-1 tensors are treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  void Fill(double value);
  bool AllFinite() const;

  bool operator==(const Tensor& other) const = default;

  // Leaf tensors flagged here are registered as trainable when bound to a
  // Graph (see Graph::Leaf).
  bool requires_grad = false;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// c = a . b for a (m x k) and b (k x n).
Tensor Matmul(const Tensor& a, const Tensor& b);
// c = a . b^T for a (m x k) and b (n x k).
Tensor MatmulNT(const Tensor& a, const Tensor& b);
// c = a^T . b for a (k x m) and b (k x n).
Tensor MatmulTN(const Tensor& a, const Tensor& b);

// Accumulating variants: c += op(a, b). Shapes are not re-checked.
void GemmNN(const Tensor& a, const Tensor& b, Tensor& c);
void GemmNT(const Tensor& a, const Tensor& b, Tensor& c);
void GemmTN(const Tensor& a, const Tensor& b, Tensor& c);

// Row-wise softmax with per-row max subtraction.
Tensor SoftmaxRows(const Tensor& x);

// Per-row normalization using the biased variance, then gamma * x + beta.
Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps);

// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
double GeluScalar(double x);
double GeluDerivative(double x);
Tensor Gelu(const Tensor& x);

// Mean over rows of -log softmax(logits)[target].
double CrossEntropyLogits(const Tensor& logits, std::span<const int> targets);

Tensor Transpose(const Tensor& x);

}  // namespace obeats

#endif  // OBEATS_TENSOR_H_
