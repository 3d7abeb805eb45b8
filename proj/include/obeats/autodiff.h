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

// Reverse-mode automatic differentiation over Tensor.
//
// A Graph is an append-only tape. Every op appends one node holding its
// forward value and, when any input requires a gradient, a closure that
// scatters the node's gradient into its inputs. Append order is a valid
// topological order, so Backward() is a single reverse sweep.
//
//   Graph g;
//   Var w = g.Leaf(weights);          // weights.requires_grad == true
//   Var x = g.Constant(inputs);
//   Var loss = CrossEntropyLogits(Matmul(x, w), targets);
//   g.Backward(loss);
//   const Tensor& dw = g.Grad(w);
//
// A Graph is not thread-safe. Independent graphs may be used concurrently.

#ifndef OBEATS_AUTODIFF_H_
#define OBEATS_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "obeats/tensor.h"

namespace obeats {

class Graph;

// Handle to a graph node.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Registers a leaf. It receives a gradient iff tensor.requires_grad.
  Var Leaf(Tensor tensor);
  Var Constant(Tensor tensor);
  Var Param(Tensor tensor);

  const Tensor& Value(Var v) const { return nodes_[v.id].value; }
  // Gradient of the last Backward() loss; zeros if the node was unreached.
  const Tensor& Grad(Var v);
  bool RequiresGrad(Var v) const { return nodes_[v.id].requires_grad; }

  // Populates gradients for every requires_grad node reachable from loss.
  // loss must hold exactly one element.
  void Backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;
  Var Push(std::string op, Tensor value, std::vector<std::size_t> inputs,
           BackwardFn backward);
  Tensor& GradBuffer(std::size_t id);
  const Tensor& ValueOf(std::size_t id) const { return nodes_[id].value; }
  bool NeedsGrad(std::size_t id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

// Differentiable ops. Inputs must live on the same graph.
Var Matmul(Var a, Var b);
Var MatmulNT(Var a, Var b);
Var Add(Var a, Var b);
// x (m x n) + bias (n) broadcast over rows.
Var AddRow(Var x, Var bias);
Var Scale(Var x, double factor);
Var SoftmaxRows(Var x);
Var LayerNorm(Var x, Var gamma, Var beta, double eps);
Var Gelu(Var x);
// Scalar mean cross-entropy; see CrossEntropyLogits(const Tensor&, ...).
Var CrossEntropyLogits(Var logits, std::span<const int> targets);
// Scalar mean of per-element binary cross-entropy with logits.
Var BinaryCrossEntropyLogits(Var logits, const Tensor& labels);
Var Sum(Var x);
Var Mean(Var x);
// Scalar mean of scalar nodes.
Var MeanOf(std::span<const Var> scalars);
Var SliceRows(Var x, std::size_t begin, std::size_t count);
Var SliceCols(Var x, std::size_t begin, std::size_t count);
Var ConcatRows(std::span<const Var> parts);
Var ConcatCols(std::span<const Var> parts);
Var GatherRows(Var x, std::span<const std::size_t> rows);
// Copy of x with the listed rows overwritten by row_vector (length cols(x)).
Var ReplaceRows(Var x, Var row_vector, std::span<const std::size_t> rows);
// Mean over consecutive groups of group_size rows: (g*group_size x n) -> (g x n).
Var GroupMeanRows(Var x, std::size_t group_size);

}  // namespace obeats

#endif  // OBEATS_AUTODIFF_H_
