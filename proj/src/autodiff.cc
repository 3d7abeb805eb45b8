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

#include "obeats/autodiff.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "obeats/error.h"

namespace obeats {

const Tensor& Var::value() const { return graph->Value(*this); }

Var Graph::Leaf(Tensor tensor) {
  Node node;
  node.op = "leaf";
  node.requires_grad = tensor.requires_grad;
  node.value = std::move(tensor);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Graph::Constant(Tensor tensor) {
  tensor.requires_grad = false;
  return Leaf(std::move(tensor));
}

Var Graph::Param(Tensor tensor) {
  tensor.requires_grad = true;
  return Leaf(std::move(tensor));
}

Var Graph::Push(std::string op, Tensor value, std::vector<std::size_t> inputs,
                BackwardFn backward) {
  Node node;
  node.op = std::move(op);
  node.value = std::move(value);
  node.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                   [&](std::size_t i) { return nodes_[i].requires_grad; });
  if (node.requires_grad) node.backward = std::move(backward);
  node.inputs = std::move(inputs);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Tensor& Graph::GradBuffer(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.size() != node.value.size() || node.grad.shape() != node.value.shape()) {
    node.grad = Tensor(node.value.shape(), 0.0);
  }
  return node.grad;
}

const Tensor& Graph::Grad(Var v) { return GradBuffer(v.id); }

void Graph::Backward(Var loss) {
  if (loss.graph != this) Fail(ErrorKind::kContract, "loss belongs to another graph");
  if (nodes_[loss.id].value.size() != 1) {
    Fail(ErrorKind::kContract, "backward needs a scalar loss, got shape ",
         ShapeToString(nodes_[loss.id].value.shape()));
  }
  for (Node& node : nodes_) node.grad = Tensor();
  GradBuffer(loss.id)[0] = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || !node.backward || node.grad.empty()) continue;
    node.backward(*this, id);
  }
}

namespace {

void SameGraph(Var a, Var b) {
  if (a.graph != b.graph) Fail(ErrorKind::kContract, "vars from different graphs");
}

void AddInto(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Var Matmul(Var a, Var b) {
  SameGraph(a, b);
  Graph& g = *a.graph;
  Tensor out = obeats::Matmul(a.value(), b.value());
  const std::size_t ia = a.id, ib = b.id;
  return g.Push("matmul", std::move(out), {ia, ib}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& gout = g.GradBuffer(self);
    if (g.NeedsGrad(ia)) GemmNT(gout, g.ValueOf(ib), g.GradBuffer(ia));
    if (g.NeedsGrad(ib)) GemmTN(g.ValueOf(ia), gout, g.GradBuffer(ib));
  });
}

Var MatmulNT(Var a, Var b) {
  SameGraph(a, b);
  Graph& g = *a.graph;
  Tensor out = obeats::MatmulNT(a.value(), b.value());
  const std::size_t ia = a.id, ib = b.id;
  return g.Push("matmul_nt", std::move(out), {ia, ib}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& gout = g.GradBuffer(self);
    // c = a b^T: da = gout b, db = gout^T a.
    if (g.NeedsGrad(ia)) GemmNN(gout, g.ValueOf(ib), g.GradBuffer(ia));
    if (g.NeedsGrad(ib)) GemmTN(gout, g.ValueOf(ia), g.GradBuffer(ib));
  });
}

Var Add(Var a, Var b) {
  SameGraph(a, b);
  if (a.value().shape() != b.value().shape()) {
    Fail(ErrorKind::kDimension, "add shape mismatch: ", ShapeToString(a.value().shape()),
         " vs ", ShapeToString(b.value().shape()));
  }
  Tensor out = a.value();
  AddInto(out, b.value());
  const std::size_t ia = a.id, ib = b.id;
  return a.graph->Push("add", std::move(out), {ia, ib}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& gout = g.GradBuffer(self);
    if (g.NeedsGrad(ia)) AddInto(g.GradBuffer(ia), gout);
    if (g.NeedsGrad(ib)) AddInto(g.GradBuffer(ib), gout);
  });
}

Var AddRow(Var x, Var bias) {
  SameGraph(x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (bv.size() != xv.cols()) {
    Fail(ErrorKind::kDimension, "add_row: ", ShapeToString(xv.shape()), " + ",
         ShapeToString(bv.shape()));
  }
  Tensor out = xv;
  const std::size_t m = xv.rows(), n = xv.cols();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  const std::size_t ix = x.id, ib = bias.id;
  return x.graph->Push("add_row", std::move(out), {ix, ib}, [ix, ib, m, n](Graph& g, std::size_t self) {
    const Tensor& gout = g.GradBuffer(self);
    if (g.NeedsGrad(ix)) AddInto(g.GradBuffer(ix), gout);
    if (g.NeedsGrad(ib)) {
      Tensor& gb = g.GradBuffer(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += gout[i * n + j];
    }
  });
}

Var Scale(Var x, double factor) {
  Tensor out = x.value();
  for (double& v : out.storage()) v *= factor;
  const std::size_t ix = x.id;
  return x.graph->Push("scale", std::move(out), {ix}, [ix, factor](Graph& g, std::size_t self) {
    const Tensor& gout = g.GradBuffer(self);
    Tensor& gx = g.GradBuffer(ix);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * gout[i];
  });
}

Var SoftmaxRows(Var x) {
  Tensor out = obeats::SoftmaxRows(x.value());
  const std::size_t ix = x.id;
  return x.graph->Push("softmax_rows", std::move(out), {ix}, [ix](Graph& g, std::size_t self) {
    const Tensor& y = g.ValueOf(self);
    const Tensor& gout = g.GradBuffer(self);
    Tensor& gx = g.GradBuffer(ix);
    const std::size_t m = y.rows(), n = y.cols();
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += gout[i * n + j] * y[i * n + j];
      for (std::size_t j = 0; j < n; ++j)
        gx[i * n + j] += y[i * n + j] * (gout[i * n + j] - dot);
    }
  });
}

Var LayerNorm(Var x, Var gamma, Var beta, double eps) {
  SameGraph(x, gamma);
  SameGraph(x, beta);
  Tensor out = obeats::LayerNorm(x.value(), gamma.value(), beta.value(), eps);
  const std::size_t ix = x.id, ig = gamma.id, ib = beta.id;
  return x.graph->Push(
      "layer_norm", std::move(out), {ix, ig, ib}, [ix, ig, ib, eps](Graph& g, std::size_t self) {
        const Tensor& xv = g.ValueOf(ix);
        const Tensor& gam = g.ValueOf(ig);
        const Tensor& gout = g.GradBuffer(self);
        const std::size_t m = xv.rows(), d = xv.cols();
        const bool need_x = g.NeedsGrad(ix), need_g = g.NeedsGrad(ig), need_b = g.NeedsGrad(ib);
        std::vector<double> xhat(d), dxhat(d);
        for (std::size_t i = 0; i < m; ++i) {
          auto row = xv.row(i);
          double mean = 0.0;
          for (double v : row) mean += v;
          mean /= static_cast<double>(d);
          double var = 0.0;
          for (double v : row) var += (v - mean) * (v - mean);
          var /= static_cast<double>(d);
          const double inv = 1.0 / std::sqrt(var + eps);
          for (std::size_t j = 0; j < d; ++j) xhat[j] = (row[j] - mean) * inv;
          const double* go = gout.data().data() + i * d;
          if (need_g) {
            Tensor& gg = g.GradBuffer(ig);
            for (std::size_t j = 0; j < d; ++j) gg[j] += go[j] * xhat[j];
          }
          if (need_b) {
            Tensor& gb = g.GradBuffer(ib);
            for (std::size_t j = 0; j < d; ++j) gb[j] += go[j];
          }
          if (need_x) {
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              dxhat[j] = go[j] * gam[j];
              sum_dxhat += dxhat[j];
              sum_dxhat_xhat += dxhat[j] * xhat[j];
            }
            Tensor& gx = g.GradBuffer(ix);
            const double dn = static_cast<double>(d);
            for (std::size_t j = 0; j < d; ++j) {
              gx[i * d + j] += inv / dn * (dn * dxhat[j] - sum_dxhat - xhat[j] * sum_dxhat_xhat);
            }
          }
        }
      });
}

Var Gelu(Var x) {
  Tensor out = obeats::Gelu(x.value());
  const std::size_t ix = x.id;
  return x.graph->Push("gelu", std::move(out), {ix}, [ix](Graph& g, std::size_t self) {
    const Tensor& xv = g.ValueOf(ix);
    const Tensor& gout = g.GradBuffer(self);
    Tensor& gx = g.GradBuffer(ix);
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += gout[i] * GeluDerivative(xv[i]);
  });
}

Var CrossEntropyLogits(Var logits, std::span<const int> targets) {
  const double loss = obeats::CrossEntropyLogits(logits.value(), targets);
  std::vector<int> saved(targets.begin(), targets.end());
  const std::size_t il = logits.id;
  return logits.graph->Push(
      "cross_entropy", Tensor({1}, {loss}), {il}, [il, saved = std::move(saved)](Graph& g, std::size_t self) {
        const double scale = g.GradBuffer(self)[0] / static_cast<double>(saved.size());
        Tensor probs = obeats::SoftmaxRows(g.ValueOf(il));
        const std::size_t k = probs.cols();
        Tensor& gl = g.GradBuffer(il);
        for (std::size_t i = 0; i < saved.size(); ++i) {
          probs[i * k + static_cast<std::size_t>(saved[i])] -= 1.0;
          for (std::size_t j = 0; j < k; ++j) gl[i * k + j] += scale * probs[i * k + j];
        }
      });
}

Var BinaryCrossEntropyLogits(Var logits, const Tensor& labels) {
  const Tensor& z = logits.value();
  if (z.shape() != labels.shape()) {
    Fail(ErrorKind::kDimension, "binary_cross_entropy: logits ", ShapeToString(z.shape()),
         " vs labels ", ShapeToString(labels.shape()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    // log(1 + exp(-|z|)) + max(z, 0) - y z
    total += std::log1p(std::exp(-std::abs(z[i]))) + std::max(z[i], 0.0) - labels[i] * z[i];
  }
  const double n = static_cast<double>(z.size());
  const std::size_t il = logits.id;
  return logits.graph->Push(
      "binary_cross_entropy", Tensor({1}, {total / n}), {il}, [il, labels, n](Graph& g, std::size_t self) {
        const double scale = g.GradBuffer(self)[0] / n;
        const Tensor& zv = g.ValueOf(il);
        Tensor& gl = g.GradBuffer(il);
        for (std::size_t i = 0; i < zv.size(); ++i) {
          const double p = 1.0 / (1.0 + std::exp(-zv[i]));
          gl[i] += scale * (p - labels[i]);
        }
      });
}

Var Sum(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  const std::size_t ix = x.id;
  return x.graph->Push("sum", Tensor({1}, {total}), {ix}, [ix](Graph& g, std::size_t self) {
    const double go = g.GradBuffer(self)[0];
    Tensor& gx = g.GradBuffer(ix);
    for (double& v : gx.storage()) v += go;
  });
}

Var Mean(Var x) { return Scale(Sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var MeanOf(std::span<const Var> scalars) {
  if (scalars.empty()) Fail(ErrorKind::kContract, "mean of zero scalars");
  Graph& g = *scalars.front().graph;
  double total = 0.0;
  std::vector<std::size_t> ids;
  for (Var s : scalars) {
    SameGraph(scalars.front(), s);
    if (s.value().size() != 1) Fail(ErrorKind::kContract, "mean_of expects scalars");
    total += s.value()[0];
    ids.push_back(s.id);
  }
  const double n = static_cast<double>(ids.size());
  std::vector<std::size_t> inputs = ids;
  return g.Push("mean_of", Tensor({1}, {total / n}), std::move(inputs),
                [ids = std::move(ids), n](Graph& g, std::size_t self) {
                  const double go = g.GradBuffer(self)[0] / n;
                  for (std::size_t id : ids)
                    if (g.NeedsGrad(id)) g.GradBuffer(id)[0] += go;
                });
}

Var SliceRows(Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.cols();
  if (begin + count > xv.rows()) {
    Fail(ErrorKind::kIndex, "slice_rows [", begin, ", ", begin + count, ") of ",
         ShapeToString(xv.shape()));
  }
  std::vector<double> data(xv.data().begin() + static_cast<std::ptrdiff_t>(begin * n),
                           xv.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * n));
  const std::size_t ix = x.id;
  return x.graph->Push("slice_rows", Tensor({count, n}, std::move(data)), {ix},
                       [ix, begin, count, n](Graph& g, std::size_t self) {
                         const Tensor& gout = g.GradBuffer(self);
                         Tensor& gx = g.GradBuffer(ix);
                         for (std::size_t i = 0; i < count * n; ++i) gx[begin * n + i] += gout[i];
                       });
}

Var SliceCols(Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  if (begin + count > n) {
    Fail(ErrorKind::kIndex, "slice_cols [", begin, ", ", begin + count, ") of ",
         ShapeToString(xv.shape()));
  }
  Tensor out({m, count});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = xv[i * n + begin + j];
  const std::size_t ix = x.id;
  return x.graph->Push("slice_cols", std::move(out), {ix},
                       [ix, begin, count, m, n](Graph& g, std::size_t self) {
                         const Tensor& gout = g.GradBuffer(self);
                         Tensor& gx = g.GradBuffer(ix);
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < count; ++j)
                             gx[i * n + begin + j] += gout[i * count + j];
                       });
}

Var ConcatRows(std::span<const Var> parts) {
  if (parts.empty()) Fail(ErrorKind::kContract, "concat_rows of nothing");
  Graph& g = *parts.front().graph;
  const std::size_t n = parts.front().value().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids;
  for (Var p : parts) {
    SameGraph(parts.front(), p);
    if (p.value().cols() != n) {
      Fail(ErrorKind::kDimension, "concat_rows column mismatch: ", n, " vs ", p.value().cols());
    }
    rows += p.value().rows();
    ids.push_back(p.id);
  }
  std::vector<double> data;
  data.reserve(rows * n);
  for (Var p : parts) data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  std::vector<std::size_t> inputs = ids;
  return g.Push("concat_rows", Tensor({rows, n}, std::move(data)), std::move(inputs),
                [ids = std::move(ids)](Graph& g, std::size_t self) {
                  const Tensor& gout = g.GradBuffer(self);
                  std::size_t offset = 0;
                  for (std::size_t id : ids) {
                    const std::size_t len = g.ValueOf(id).size();
                    if (g.NeedsGrad(id)) {
                      Tensor& gi = g.GradBuffer(id);
                      for (std::size_t i = 0; i < len; ++i) gi[i] += gout[offset + i];
                    }
                    offset += len;
                  }
                });
}

Var ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) Fail(ErrorKind::kContract, "concat_cols of nothing");
  Graph& g = *parts.front().graph;
  const std::size_t m = parts.front().value().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids;
  for (Var p : parts) {
    SameGraph(parts.front(), p);
    if (p.value().rows() != m) {
      Fail(ErrorKind::kDimension, "concat_cols row mismatch: ", m, " vs ", p.value().rows());
    }
    cols += p.value().cols();
    ids.push_back(p.id);
  }
  Tensor out({m, cols});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& pv = p.value();
    const std::size_t w = pv.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * cols + offset + j] = pv[i * w + j];
    offset += w;
  }
  std::vector<std::size_t> inputs = ids;
  return g.Push("concat_cols", std::move(out), std::move(inputs),
                [ids = std::move(ids), m, cols](Graph& g, std::size_t self) {
                  const Tensor& gout = g.GradBuffer(self);
                  std::size_t offset = 0;
                  for (std::size_t id : ids) {
                    const std::size_t w = g.ValueOf(id).cols();
                    if (g.NeedsGrad(id)) {
                      Tensor& gi = g.GradBuffer(id);
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < w; ++j)
                          gi[i * w + j] += gout[i * cols + offset + j];
                    }
                    offset += w;
                  }
                });
}

Var GatherRows(Var x, std::span<const std::size_t> rows) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.cols();
  Tensor out({rows.size(), n});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= xv.rows()) {
      Fail(ErrorKind::kIndex, "gather_rows: row ", rows[i], " of ", xv.rows());
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[rows[i] * n + j];
  }
  std::vector<std::size_t> saved(rows.begin(), rows.end());
  const std::size_t ix = x.id;
  return x.graph->Push("gather_rows", std::move(out), {ix},
                       [ix, n, saved = std::move(saved)](Graph& g, std::size_t self) {
                         const Tensor& gout = g.GradBuffer(self);
                         Tensor& gx = g.GradBuffer(ix);
                         for (std::size_t i = 0; i < saved.size(); ++i)
                           for (std::size_t j = 0; j < n; ++j) gx[saved[i] * n + j] += gout[i * n + j];
                       });
}

Var ReplaceRows(Var x, Var row_vector, std::span<const std::size_t> rows) {
  SameGraph(x, row_vector);
  const Tensor& xv = x.value();
  const Tensor& rv = row_vector.value();
  const std::size_t n = xv.cols();
  if (rv.size() != n) {
    Fail(ErrorKind::kDimension, "replace_rows: row of ", rv.size(), " into ",
         ShapeToString(xv.shape()));
  }
  std::vector<char> replaced(xv.rows(), 0);
  for (std::size_t r : rows) {
    if (r >= xv.rows()) Fail(ErrorKind::kIndex, "replace_rows: row ", r, " of ", xv.rows());
    replaced[r] = 1;
  }
  Tensor out = xv;
  for (std::size_t r = 0; r < xv.rows(); ++r)
    if (replaced[r])
      for (std::size_t j = 0; j < n; ++j) out[r * n + j] = rv[j];
  const std::size_t ix = x.id, iv = row_vector.id;
  return x.graph->Push("replace_rows", std::move(out), {ix, iv},
                       [ix, iv, n, replaced = std::move(replaced)](Graph& g, std::size_t self) {
                         const Tensor& gout = g.GradBuffer(self);
                         const bool need_x = g.NeedsGrad(ix), need_v = g.NeedsGrad(iv);
                         for (std::size_t r = 0; r < replaced.size(); ++r) {
                           if (replaced[r]) {
                             if (need_v) {
                               Tensor& gv = g.GradBuffer(iv);
                               for (std::size_t j = 0; j < n; ++j) gv[j] += gout[r * n + j];
                             }
                           } else if (need_x) {
                             Tensor& gx = g.GradBuffer(ix);
                             for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += gout[r * n + j];
                           }
                         }
                       });
}

Var GroupMeanRows(Var x, std::size_t group_size) {
  const Tensor& xv = x.value();
  if (group_size == 0 || xv.rows() % group_size != 0) {
    Fail(ErrorKind::kDimension, "group_mean_rows: ", xv.rows(), " rows not divisible by ",
         group_size);
  }
  const std::size_t groups = xv.rows() / group_size, n = xv.cols();
  const double inv = 1.0 / static_cast<double>(group_size);
  Tensor out({groups, n});
  for (std::size_t gi = 0; gi < groups; ++gi)
    for (std::size_t r = 0; r < group_size; ++r)
      for (std::size_t j = 0; j < n; ++j) out[gi * n + j] += xv[(gi * group_size + r) * n + j];
  for (double& v : out.storage()) v *= inv;
  const std::size_t ix = x.id;
  return x.graph->Push("group_mean_rows", std::move(out), {ix},
                       [ix, groups, group_size, n, inv](Graph& g, std::size_t self) {
                         const Tensor& gout = g.GradBuffer(self);
                         Tensor& gx = g.GradBuffer(ix);
                         for (std::size_t gi = 0; gi < groups; ++gi)
                           for (std::size_t r = 0; r < group_size; ++r)
                             for (std::size_t j = 0; j < n; ++j)
                               gx[(gi * group_size + r) * n + j] += inv * gout[gi * n + j];
                       });
}

}  // namespace obeats
