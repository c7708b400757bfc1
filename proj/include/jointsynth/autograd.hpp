// Copyright 2026 The JointSynth Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Tape-free reverse-mode automatic differentiation.
//
// A Var is a handle to a graph node holding a value, an (on-demand) gradient
// and a closure that pushes the node's gradient into its parents. Calling
// backward() on a scalar walks the graph in reverse topological order.
// Gradients accumulate; parameters keep theirs until zero_grad().

#ifndef JOINTSYNTH_AUTOGRAD_HPP_
#define JOINTSYNTH_AUTOGRAD_HPP_

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "jointsynth/tensor.hpp"

namespace jsyn::ag {

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  // Gradient buffer, allocated as zeros on first use.
  Tensor& grad_ref();
  bool has_grad() const { return !grad.data.empty() || value.data.empty(); }
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  const Shape& shape() const { return node_->value.shape; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }
  static Var from_node(std::shared_ptr<Node> n);

 private:
  std::shared_ptr<Node> node_;
};

// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every reachable
// node that requires them. `loss` must hold a single element.
void backward(const Var& loss);

bool grad_enabled();

// While alive, ops build no graph (inference and sampling).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

Var constant(Tensor t);
Var detach(const Var& x);

// Elementwise.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var square(const Var& a);
Var relu(const Var& a);
Var silu(const Var& a);
Var mish(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var softplus(const Var& a);

// Broadcasting: `b` has shape [C] where C is the last dim of `a`.
Var add_bias(const Var& a, const Var& b);
Var mul_lastdim(const Var& a, const Var& g);
// Broadcasting: `b` has shape [C] where C is the first dim of `a` [C x ...].
Var add_channel(const Var& a, const Var& b);
// Row mask: a [T x C], mask [T] constant.
Var mul_rows(const Var& a, std::span<const double> mask);

// Linear algebra on 2D tensors.
Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);  // a * b^T
Var linear(const Var& x, const Var& w, const Var& b);  // x [N x In], w [In x Out], b [Out] (may be undefined)
Var transpose(const Var& a);

// Convolutions ("same" zero padding, odd kernels). Bias may be undefined.
Var conv1d(const Var& x, const Var& w, const Var& b);            // x [T x Cin], w [K x Cin x Cout]
Var depthwise_conv1d(const Var& x, const Var& w, const Var& b);  // x [T x C], w [K x C]
Var conv2d(const Var& x, const Var& w, const Var& b);            // x [Cin x H x W], w [Cout x Cin x K x K]

// Resolution changes by a factor of two.
Var avgpool_time(const Var& x);     // [T x C] -> [T/2 x C]
Var upsample_time(const Var& x);    // [T x C] -> [2T x C]
Var avgpool2d(const Var& x);        // [C x H x W] -> [C x H/2 x W/2]
Var upsample2d(const Var& x);       // [C x H x W] -> [C x 2H x 2W]

// Normalization and attention helpers.
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
// Row softmax of [T x S]; key_mask (optional, length S) zeroes masked columns.
Var softmax_rows(const Var& x, std::span<const double> key_mask = {});
// out[i][j] = table[clamp(j - i, -w, w) + w], table has 2w+1 entries.
Var relative_bias(const Var& table, std::int64_t t);

// Indexing and shape.
Var embedding(const Var& table, std::span<const std::int64_t> ids);
Var slice_rows(const Var& x, std::int64_t begin, std::int64_t end);
Var slice_cols(const Var& x, std::int64_t begin, std::int64_t end);
Var concat_rows(const std::vector<Var>& xs);  // along dim 0 (also channel concat for [C x H x W])
Var concat_cols(const std::vector<Var>& xs);  // along the last dim of 2D tensors
Var repeat_rows(const Var& x, std::span<const std::int64_t> counts);
Var reshape(const Var& x, Shape s);
Var glu_cols(const Var& x);  // [T x 2C] -> [T x C], first half * sigmoid(second half)

// Reductions to a scalar [1].
Var sum(const Var& x);
Var mean(const Var& x);

}  // namespace jsyn::ag

#endif  // JOINTSYNTH_AUTOGRAD_HPP_
