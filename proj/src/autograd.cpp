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

#include "jointsynth/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "jointsynth/kernels.hpp"

namespace jsyn::ag {

namespace kp = kernels::parallel;
using idx = std::int64_t;

namespace {

thread_local bool g_grad_enabled = true;

// Builds a result node. The backward closure only runs when at least one
// defined parent requires a gradient and grad mode is on.
Var make(Tensor value, std::vector<Var> parents, std::function<void(Node&)> bw) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& p : parents) any = any || p.requires_grad();
    if (any) {
      n->requires_grad = true;
      n->parents.reserve(parents.size());
      for (const auto& p : parents) n->parents.push_back(p.defined() ? p.node() : nullptr);
      n->backward = std::move(bw);
    }
  }
  return Var::from_node(std::move(n));
}

// Gradient buffer of parent i, or nullptr if it does not want one.
Tensor* pg(Node& self, std::size_t i) {
  auto& p = self.parents[i];
  if (!p || !p->requires_grad) return nullptr;
  return &p->grad_ref();
}

const Tensor& pv(Node& self, std::size_t i) { return self.parents[i]->value; }

void require_2d(const Var& x, const char* op) {
  if (x.value().dim() != 2) throw Error(std::string(op) + ": expected a 2D tensor, got " + shape_str(x.shape()));
}

void require_same(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw Error(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

template <typename F, typename D>
Var unary(const Var& a, F f, D df) {
  Tensor out(a.shape());
  const auto& x = a.value().data;
  for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = f(x[i]);
  return make(std::move(out), {a}, [df](Node& self) {
    Tensor* g = pg(self, 0);
    if (!g) return;
    const auto& x = pv(self, 0).data;
    for (std::size_t i = 0; i < x.size(); ++i) g->data[i] += self.grad.data[i] * df(x[i]);
  });
}

inline double sigm(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus_fn(double x) { return x > 20.0 ? x : std::log1p(std::exp(x)); }

}  // namespace

Tensor& Node::grad_ref() {
  if (grad.shape != value.shape) grad = Tensor(value.shape);
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Var Var::from_node(std::shared_ptr<Node> n) {
  Var v;
  v.node_ = std::move(n);
  return v;
}

void Var::zero_grad() {
  if (node_ && !node_->grad.data.empty()) std::fill(node_->grad.data.begin(), node_->grad.data.end(), 0.0);
}

void backward(const Var& loss) {
  if (loss.value().size() != 1) throw Error("backward: loss must be a scalar, got " + shape_str(loss.shape()));
  if (!loss.requires_grad()) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p && p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  loss.node()->grad_ref().data[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.data.empty()) n->backward(*n);
  }
  // Interior gradients are dead once propagated; release them.
  for (Node* n : order) {
    if (n->backward) n->grad = Tensor();
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Var constant(Tensor t) { return Var(std::move(t), false); }

Var detach(const Var& x) { return Var(x.value(), false); }

Var add(const Var& a, const Var& b) {
  require_same(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.value().data[i];
  return make(std::move(out), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (Tensor* g = pg(self, k)) {
        for (std::size_t i = 0; i < g->data.size(); ++i) g->data[i] += self.grad.data[i];
      }
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.value().data[i];
  return make(std::move(out), {a, b}, [](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (std::size_t i = 0; i < g->data.size(); ++i) g->data[i] += self.grad.data[i];
    }
    if (Tensor* g = pg(self, 1)) {
      for (std::size_t i = 0; i < g->data.size(); ++i) g->data[i] -= self.grad.data[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.value().data[i];
  return make(std::move(out), {a, b}, [](Node& self) {
    const auto& av = pv(self, 0).data;
    const auto& bv = pv(self, 1).data;
    if (Tensor* g = pg(self, 0)) {
      for (std::size_t i = 0; i < g->data.size(); ++i) g->data[i] += self.grad.data[i] * bv[i];
    }
    if (Tensor* g = pg(self, 1)) {
      for (std::size_t i = 0; i < g->data.size(); ++i) g->data[i] += self.grad.data[i] * av[i];
    }
  });
}

Var scale(const Var& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double) { return s; });
}

Var add_scalar(const Var& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double) { return 1.0; });
}

Var square(const Var& a) {
  return unary(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var relu(const Var& a) {
  return unary(a, [](double x) { return x > 0 ? x : 0.0; }, [](double x) { return x > 0 ? 1.0 : 0.0; });
}

Var silu(const Var& a) {
  return unary(
      a, [](double x) { return x * sigm(x); },
      [](double x) {
        double s = sigm(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Var mish(const Var& a) {
  return unary(
      a, [](double x) { return x * std::tanh(softplus_fn(x)); },
      [](double x) {
        double t = std::tanh(softplus_fn(x));
        return t + x * (1.0 - t * t) * sigm(x);
      });
}

Var sigmoid(const Var& a) {
  return unary(
      a, [](double x) { return sigm(x); },
      [](double x) {
        double s = sigm(x);
        return s * (1.0 - s);
      });
}

Var tanh(const Var& a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double x) {
        double t = std::tanh(x);
        return 1.0 - t * t;
      });
}

Var softplus(const Var& a) {
  return unary(a, [](double x) { return softplus_fn(x); }, [](double x) { return sigm(x); });
}

Var add_bias(const Var& a, const Var& b) {
  const idx c = b.value().size();
  if (a.value().dim() < 1 || a.shape().back() != c) {
    throw Error("add_bias: bias " + shape_str(b.shape()) + " does not match last dim of " + shape_str(a.shape()));
  }
  Tensor out = a.value();
  const idx rows = out.size() / std::max<idx>(c, 1);
  for (idx r = 0; r < rows; ++r)
    for (idx j = 0; j < c; ++j) out.data[r * c + j] += b.value().data[j];
  return make(std::move(out), {a, b}, [rows, c](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (std::size_t i = 0; i < g->data.size(); ++i) g->data[i] += self.grad.data[i];
    }
    if (Tensor* g = pg(self, 1)) {
      for (idx r = 0; r < rows; ++r)
        for (idx j = 0; j < c; ++j) g->data[j] += self.grad.data[r * c + j];
    }
  });
}

Var mul_lastdim(const Var& a, const Var& gm) {
  const idx c = gm.value().size();
  if (a.value().dim() < 1 || a.shape().back() != c) {
    throw Error("mul_lastdim: scale " + shape_str(gm.shape()) + " does not match last dim of " + shape_str(a.shape()));
  }
  Tensor out = a.value();
  const idx rows = out.size() / std::max<idx>(c, 1);
  for (idx r = 0; r < rows; ++r)
    for (idx j = 0; j < c; ++j) out.data[r * c + j] *= gm.value().data[j];
  return make(std::move(out), {a, gm}, [rows, c](Node& self) {
    const auto& av = pv(self, 0).data;
    const auto& gv = pv(self, 1).data;
    if (Tensor* g = pg(self, 0)) {
      for (idx r = 0; r < rows; ++r)
        for (idx j = 0; j < c; ++j) g->data[r * c + j] += self.grad.data[r * c + j] * gv[j];
    }
    if (Tensor* g = pg(self, 1)) {
      for (idx r = 0; r < rows; ++r)
        for (idx j = 0; j < c; ++j) g->data[j] += self.grad.data[r * c + j] * av[r * c + j];
    }
  });
}

Var add_channel(const Var& a, const Var& b) {
  const idx c = b.value().size();
  if (a.value().dim() < 1 || a.shape().front() != c) {
    throw Error("add_channel: bias " + shape_str(b.shape()) + " does not match first dim of " + shape_str(a.shape()));
  }
  Tensor out = a.value();
  const idx inner = out.size() / std::max<idx>(c, 1);
  for (idx ch = 0; ch < c; ++ch)
    for (idx i = 0; i < inner; ++i) out.data[ch * inner + i] += b.value().data[ch];
  return make(std::move(out), {a, b}, [inner, c](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (std::size_t i = 0; i < g->data.size(); ++i) g->data[i] += self.grad.data[i];
    }
    if (Tensor* g = pg(self, 1)) {
      for (idx ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (idx i = 0; i < inner; ++i) s += self.grad.data[ch * inner + i];
        g->data[ch] += s;
      }
    }
  });
}

Var mul_rows(const Var& a, std::span<const double> mask) {
  require_2d(a, "mul_rows");
  const idx t = a.value().rows(), c = a.value().cols();
  if (static_cast<idx>(mask.size()) != t) throw Error("mul_rows: mask length does not match row count");
  std::vector<double> m(mask.begin(), mask.end());
  Tensor out = a.value();
  for (idx r = 0; r < t; ++r)
    for (idx j = 0; j < c; ++j) out.data[r * c + j] *= m[r];
  return make(std::move(out), {a}, [m = std::move(m), c](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (std::size_t r = 0; r < m.size(); ++r)
        for (idx j = 0; j < c; ++j) g->data[r * c + j] += self.grad.data[r * c + j] * m[r];
    }
  });
}

Var matmul(const Var& a, const Var& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const idx m = a.value().rows(), k = a.value().cols(), n = b.value().cols();
  if (b.value().rows() != k) throw Error("matmul: inner dims differ " + shape_str(a.shape()) + " * " + shape_str(b.shape()));
  Tensor out({m, n});
  kp::gemm({m, n, k}, a.value().data, b.value().data, out.data);
  return make(std::move(out), {a, b}, [m, n, k](Node& self) {
    if (Tensor* g = pg(self, 0)) kp::gemm({m, k, n, false, true}, self.grad.data, pv(self, 1).data, g->data);
    if (Tensor* g = pg(self, 1)) kp::gemm({k, n, m, true, false}, pv(self, 0).data, self.grad.data, g->data);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require_2d(a, "matmul_nt");
  require_2d(b, "matmul_nt");
  const idx m = a.value().rows(), k = a.value().cols(), n = b.value().rows();
  if (b.value().cols() != k) throw Error("matmul_nt: inner dims differ");
  Tensor out({m, n});
  kp::gemm({m, n, k, false, true}, a.value().data, b.value().data, out.data);
  return make(std::move(out), {a, b}, [m, n, k](Node& self) {
    if (Tensor* g = pg(self, 0)) kp::gemm({m, k, n}, self.grad.data, pv(self, 1).data, g->data);
    if (Tensor* g = pg(self, 1)) kp::gemm({n, k, m, true, false}, self.grad.data, pv(self, 0).data, g->data);
  });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  require_2d(x, "linear");
  require_2d(w, "linear");
  const idx m = x.value().rows(), k = x.value().cols(), n = w.value().cols();
  if (w.value().rows() != k) throw Error("linear: input width " + std::to_string(k) + " vs weight " + shape_str(w.shape()));
  if (b.defined() && b.value().size() != n) throw Error("linear: bias size mismatch");
  Tensor out({m, n});
  if (b.defined()) {
    for (idx r = 0; r < m; ++r) std::copy(b.value().data.begin(), b.value().data.end(), out.data.begin() + r * n);
  }
  kp::gemm({m, n, k}, x.value().data, w.value().data, out.data);
  return make(std::move(out), {x, w, b}, [m, n, k](Node& self) {
    if (Tensor* g = pg(self, 0)) kp::gemm({m, k, n, false, true}, self.grad.data, pv(self, 1).data, g->data);
    if (Tensor* g = pg(self, 1)) kp::gemm({k, n, m, true, false}, pv(self, 0).data, self.grad.data, g->data);
    if (Tensor* g = pg(self, 2)) {
      for (idx r = 0; r < m; ++r)
        for (idx j = 0; j < n; ++j) g->data[j] += self.grad.data[r * n + j];
    }
  });
}

Var transpose(const Var& a) {
  require_2d(a, "transpose");
  const idx r = a.value().rows(), c = a.value().cols();
  Tensor out({c, r});
  for (idx i = 0; i < r; ++i)
    for (idx j = 0; j < c; ++j) out.data[j * r + i] = a.value().data[i * c + j];
  return make(std::move(out), {a}, [r, c](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (idx i = 0; i < r; ++i)
        for (idx j = 0; j < c; ++j) g->data[i * c + j] += self.grad.data[j * r + i];
    }
  });
}

Var conv1d(const Var& x, const Var& w, const Var& b) {
  require_2d(x, "conv1d");
  if (w.value().dim() != 3) throw Error("conv1d: weight must be [K x Cin x Cout]");
  const kernels::Conv1dDims d{x.value().rows(), x.value().cols(), w.shape()[2], w.shape()[0]};
  if (w.shape()[1] != d.cin) {
    throw Error("conv1d: input channels " + std::to_string(d.cin) + " vs weight " + shape_str(w.shape()));
  }
  if (d.ksize % 2 == 0) throw Error("conv1d: kernel size must be odd");
  if (b.defined() && b.value().size() != d.cout) throw Error("conv1d: bias size mismatch");
  Tensor out({d.t, d.cout});
  if (b.defined()) {
    for (idx r = 0; r < d.t; ++r) std::copy(b.value().data.begin(), b.value().data.end(), out.data.begin() + r * d.cout);
  }
  kp::conv1d(d, x.value().data, w.value().data, out.data);
  return make(std::move(out), {x, w, b}, [d](Node& self) {
    if (Tensor* g = pg(self, 0)) kp::conv1d_grad_input(d, self.grad.data, pv(self, 1).data, g->data);
    if (Tensor* g = pg(self, 1)) kp::conv1d_grad_weight(d, pv(self, 0).data, self.grad.data, g->data);
    if (Tensor* g = pg(self, 2)) {
      for (idx r = 0; r < d.t; ++r)
        for (idx j = 0; j < d.cout; ++j) g->data[j] += self.grad.data[r * d.cout + j];
    }
  });
}

Var depthwise_conv1d(const Var& x, const Var& w, const Var& b) {
  require_2d(x, "depthwise_conv1d");
  require_2d(w, "depthwise_conv1d");
  const kernels::DepthwiseDims d{x.value().rows(), x.value().cols(), w.value().rows()};
  if (w.value().cols() != d.c) throw Error("depthwise_conv1d: channel mismatch");
  if (d.ksize % 2 == 0) throw Error("depthwise_conv1d: kernel size must be odd");
  Tensor out({d.t, d.c});
  if (b.defined()) {
    for (idx r = 0; r < d.t; ++r) std::copy(b.value().data.begin(), b.value().data.end(), out.data.begin() + r * d.c);
  }
  kp::depthwise1d(d, x.value().data, w.value().data, out.data);
  return make(std::move(out), {x, w, b}, [d](Node& self) {
    if (Tensor* g = pg(self, 0)) kp::depthwise1d_grad_input(d, self.grad.data, pv(self, 1).data, g->data);
    if (Tensor* g = pg(self, 1)) kp::depthwise1d_grad_weight(d, pv(self, 0).data, self.grad.data, g->data);
    if (Tensor* g = pg(self, 2)) {
      for (idx r = 0; r < d.t; ++r)
        for (idx j = 0; j < d.c; ++j) g->data[j] += self.grad.data[r * d.c + j];
    }
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b) {
  if (x.value().dim() != 3 || w.value().dim() != 4) throw Error("conv2d: expected x [C x H x W], w [Co x Ci x K x K]");
  const kernels::Conv2dDims d{x.shape()[0], w.shape()[0], x.shape()[1], x.shape()[2], w.shape()[2]};
  if (w.shape()[1] != d.cin || w.shape()[3] != d.ksize) {
    throw Error("conv2d: weight " + shape_str(w.shape()) + " incompatible with input " + shape_str(x.shape()));
  }
  if (d.ksize % 2 == 0) throw Error("conv2d: kernel size must be odd");
  const idx plane = d.h * d.w;
  Tensor out({d.cout, d.h, d.w});
  if (b.defined()) {
    for (idx c = 0; c < d.cout; ++c) std::fill_n(out.data.begin() + c * plane, plane, b.value().data[c]);
  }
  kp::conv2d(d, x.value().data, w.value().data, out.data);
  return make(std::move(out), {x, w, b}, [d, plane](Node& self) {
    if (Tensor* g = pg(self, 0)) kp::conv2d_grad_input(d, self.grad.data, pv(self, 1).data, g->data);
    if (Tensor* g = pg(self, 1)) kp::conv2d_grad_weight(d, pv(self, 0).data, self.grad.data, g->data);
    if (Tensor* g = pg(self, 2)) {
      for (idx c = 0; c < d.cout; ++c) {
        double s = 0.0;
        for (idx i = 0; i < plane; ++i) s += self.grad.data[c * plane + i];
        g->data[c] += s;
      }
    }
  });
}

Var avgpool_time(const Var& x) {
  require_2d(x, "avgpool_time");
  const idx t = x.value().rows(), c = x.value().cols();
  if (t % 2) throw Error("avgpool_time: odd length " + std::to_string(t));
  Tensor out({t / 2, c});
  for (idx i = 0; i < t / 2; ++i)
    for (idx j = 0; j < c; ++j) out.data[i * c + j] = 0.5 * (x.value().data[2 * i * c + j] + x.value().data[(2 * i + 1) * c + j]);
  return make(std::move(out), {x}, [t, c](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (idx i = 0; i < t; ++i)
        for (idx j = 0; j < c; ++j) g->data[i * c + j] += 0.5 * self.grad.data[(i / 2) * c + j];
    }
  });
}

Var upsample_time(const Var& x) {
  require_2d(x, "upsample_time");
  const idx t = x.value().rows(), c = x.value().cols();
  Tensor out({2 * t, c});
  for (idx i = 0; i < 2 * t; ++i)
    for (idx j = 0; j < c; ++j) out.data[i * c + j] = x.value().data[(i / 2) * c + j];
  return make(std::move(out), {x}, [t, c](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (idx i = 0; i < 2 * t; ++i)
        for (idx j = 0; j < c; ++j) g->data[(i / 2) * c + j] += self.grad.data[i * c + j];
    }
  });
}

Var avgpool2d(const Var& x) {
  if (x.value().dim() != 3) throw Error("avgpool2d: expected [C x H x W]");
  const idx c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  if (h % 2 || w % 2) throw Error("avgpool2d: odd spatial size " + shape_str(x.shape()));
  const idx ho = h / 2, wo = w / 2;
  Tensor out({c, ho, wo});
  const auto& in = x.value().data;
  for (idx ch = 0; ch < c; ++ch)
    for (idx i = 0; i < ho; ++i)
      for (idx j = 0; j < wo; ++j) {
        const idx base = (ch * h + 2 * i) * w + 2 * j;
        out.data[(ch * ho + i) * wo + j] = 0.25 * (in[base] + in[base + 1] + in[base + w] + in[base + w + 1]);
      }
  return make(std::move(out), {x}, [c, h, w](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      const idx ho = h / 2, wo = w / 2;
      for (idx ch = 0; ch < c; ++ch)
        for (idx i = 0; i < h; ++i)
          for (idx j = 0; j < w; ++j) g->data[(ch * h + i) * w + j] += 0.25 * self.grad.data[(ch * ho + i / 2) * wo + j / 2];
    }
  });
}

Var upsample2d(const Var& x) {
  if (x.value().dim() != 3) throw Error("upsample2d: expected [C x H x W]");
  const idx c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  Tensor out({c, 2 * h, 2 * w});
  for (idx ch = 0; ch < c; ++ch)
    for (idx i = 0; i < 2 * h; ++i)
      for (idx j = 0; j < 2 * w; ++j) out.data[(ch * 2 * h + i) * 2 * w + j] = x.value().data[(ch * h + i / 2) * w + j / 2];
  return make(std::move(out), {x}, [c, h, w](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (idx ch = 0; ch < c; ++ch)
        for (idx i = 0; i < 2 * h; ++i)
          for (idx j = 0; j < 2 * w; ++j) g->data[(ch * h + i / 2) * w + j / 2] += self.grad.data[(ch * 2 * h + i) * 2 * w + j];
    }
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const idx c = x.shape().back();
  if (gamma.value().size() != c || beta.value().size() != c) throw Error("layer_norm: parameter size mismatch");
  const idx rows = x.value().size() / c;
  Tensor out(x.shape());
  std::vector<double> xhat(static_cast<std::size_t>(rows * c));
  std::vector<double> rstd(static_cast<std::size_t>(rows));
  const auto& in = x.value().data;
  for (idx r = 0; r < rows; ++r) {
    double mu = 0.0;
    for (idx j = 0; j < c; ++j) mu += in[r * c + j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (idx j = 0; j < c; ++j) {
      double dv = in[r * c + j] - mu;
      var += dv * dv;
    }
    var /= static_cast<double>(c);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (idx j = 0; j < c; ++j) {
      xhat[r * c + j] = (in[r * c + j] - mu) * rstd[r];
      out.data[r * c + j] = xhat[r * c + j] * gamma.value().data[j] + beta.value().data[j];
    }
  }
  return make(std::move(out), {x, gamma, beta}, [xhat = std::move(xhat), rstd = std::move(rstd), rows, c](Node& self) {
    const auto& gm = pv(self, 1).data;
    const auto& gy = self.grad.data;
    if (Tensor* g = pg(self, 1)) {
      for (idx r = 0; r < rows; ++r)
        for (idx j = 0; j < c; ++j) g->data[j] += gy[r * c + j] * xhat[r * c + j];
    }
    if (Tensor* g = pg(self, 2)) {
      for (idx r = 0; r < rows; ++r)
        for (idx j = 0; j < c; ++j) g->data[j] += gy[r * c + j];
    }
    if (Tensor* g = pg(self, 0)) {
      for (idx r = 0; r < rows; ++r) {
        double m1 = 0.0, m2 = 0.0;
        for (idx j = 0; j < c; ++j) {
          double gh = gy[r * c + j] * gm[j];
          m1 += gh;
          m2 += gh * xhat[r * c + j];
        }
        m1 /= static_cast<double>(c);
        m2 /= static_cast<double>(c);
        for (idx j = 0; j < c; ++j) {
          double gh = gy[r * c + j] * gm[j];
          g->data[r * c + j] += rstd[r] * (gh - m1 - xhat[r * c + j] * m2);
        }
      }
    }
  });
}

Var softmax_rows(const Var& x, std::span<const double> key_mask) {
  require_2d(x, "softmax_rows");
  const idx t = x.value().rows(), s = x.value().cols();
  if (!key_mask.empty() && static_cast<idx>(key_mask.size()) != s) throw Error("softmax_rows: mask length mismatch");
  Tensor out({t, s});
  for (idx i = 0; i < t; ++i) {
    double mx = -INFINITY;
    for (idx j = 0; j < s; ++j) {
      if (!key_mask.empty() && key_mask[j] == 0.0) continue;
      mx = std::max(mx, x.value().data[i * s + j]);
    }
    if (mx == -INFINITY) continue;
    double z = 0.0;
    for (idx j = 0; j < s; ++j) {
      if (!key_mask.empty() && key_mask[j] == 0.0) continue;
      double e = std::exp(x.value().data[i * s + j] - mx);
      out.data[i * s + j] = e;
      z += e;
    }
    for (idx j = 0; j < s; ++j) out.data[i * s + j] /= z;
  }
  Tensor probs = out;
  return make(std::move(out), {x}, [p = std::move(probs), t, s](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (idx i = 0; i < t; ++i) {
        double dot = 0.0;
        for (idx j = 0; j < s; ++j) dot += self.grad.data[i * s + j] * p.data[i * s + j];
        for (idx j = 0; j < s; ++j) g->data[i * s + j] += p.data[i * s + j] * (self.grad.data[i * s + j] - dot);
      }
    }
  });
}

Var relative_bias(const Var& table, idx t) {
  const idx n = table.value().size();
  if (n % 2 == 0) throw Error("relative_bias: table must have odd length");
  const idx w = n / 2;
  auto slot = [w](idx i, idx j) { return std::clamp<idx>(j - i, -w, w) + w; };
  Tensor out({t, t});
  for (idx i = 0; i < t; ++i)
    for (idx j = 0; j < t; ++j) out.data[i * t + j] = table.value().data[slot(i, j)];
  return make(std::move(out), {table}, [t, slot](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (idx i = 0; i < t; ++i)
        for (idx j = 0; j < t; ++j) g->data[slot(i, j)] += self.grad.data[i * t + j];
    }
  });
}

Var embedding(const Var& table, std::span<const idx> ids) {
  require_2d(table, "embedding");
  const idx v = table.value().rows(), h = table.value().cols();
  const idx p = static_cast<idx>(ids.size());
  Tensor out({p, h});
  for (idx i = 0; i < p; ++i) {
    if (ids[i] < 0 || ids[i] >= v) throw Error("embedding: id " + std::to_string(ids[i]) + " out of range [0, " + std::to_string(v) + ")");
    std::copy_n(table.value().data.begin() + ids[i] * h, h, out.data.begin() + i * h);
  }
  std::vector<idx> saved(ids.begin(), ids.end());
  return make(std::move(out), {table}, [saved = std::move(saved), h](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (std::size_t i = 0; i < saved.size(); ++i)
        for (idx j = 0; j < h; ++j) g->data[saved[i] * h + j] += self.grad.data[i * h + j];
    }
  });
}

Var slice_rows(const Var& x, idx begin, idx end) {
  const idx t = x.shape().at(0);
  if (begin < 0 || end > t || begin > end) throw Error("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of " + shape_str(x.shape()));
  const idx inner = t ? x.value().size() / t : 0;
  Shape s = x.shape();
  s[0] = end - begin;
  Tensor out(s);
  std::copy_n(x.value().data.begin() + begin * inner, (end - begin) * inner, out.data.begin());
  return make(std::move(out), {x}, [begin, inner](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (std::size_t i = 0; i < self.grad.data.size(); ++i) g->data[begin * inner + static_cast<idx>(i)] += self.grad.data[i];
    }
  });
}

Var slice_cols(const Var& x, idx begin, idx end) {
  require_2d(x, "slice_cols");
  const idx t = x.value().rows(), c = x.value().cols();
  if (begin < 0 || end > c || begin > end) throw Error("slice_cols: range out of bounds");
  const idx w = end - begin;
  Tensor out({t, w});
  for (idx r = 0; r < t; ++r)
    for (idx j = 0; j < w; ++j) out.data[r * w + j] = x.value().data[r * c + begin + j];
  return make(std::move(out), {x}, [t, c, w, begin](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (idx r = 0; r < t; ++r)
        for (idx j = 0; j < w; ++j) g->data[r * c + begin + j] += self.grad.data[r * w + j];
    }
  });
}

Var concat_rows(const std::vector<Var>& xs) {
  if (xs.empty()) throw Error("concat_rows: no inputs");
  Shape s = xs[0].shape();
  idx inner = s[0] ? xs[0].value().size() / s[0] : 0;
  if (s[0] == 0) {
    inner = 1;
    for (std::size_t i = 1; i < s.size(); ++i) inner *= s[i];
  }
  idx total = 0;
  std::vector<idx> offsets;
  for (const auto& x : xs) {
    Shape xs_ = x.shape();
    if (xs_.size() != s.size() || !std::equal(xs_.begin() + 1, xs_.end(), s.begin() + 1)) {
      throw Error("concat_rows: trailing dims differ " + shape_str(xs_) + " vs " + shape_str(s));
    }
    offsets.push_back(total);
    total += xs_[0];
  }
  s[0] = total;
  Tensor out(s);
  for (std::size_t k = 0; k < xs.size(); ++k) std::copy(xs[k].value().data.begin(), xs[k].value().data.end(), out.data.begin() + offsets[k] * inner);
  return make(std::move(out), xs, [offsets, inner](Node& self) {
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      if (Tensor* g = pg(self, k)) {
        for (std::size_t i = 0; i < g->data.size(); ++i) g->data[i] += self.grad.data[offsets[k] * inner + static_cast<idx>(i)];
      }
    }
  });
}

Var concat_cols(const std::vector<Var>& xs) {
  if (xs.empty()) throw Error("concat_cols: no inputs");
  const idx t = xs[0].value().rows();
  std::vector<idx> widths, offsets;
  idx total = 0;
  for (const auto& x : xs) {
    require_2d(x, "concat_cols");
    if (x.value().rows() != t) throw Error("concat_cols: row counts differ");
    offsets.push_back(total);
    widths.push_back(x.value().cols());
    total += x.value().cols();
  }
  Tensor out({t, total});
  for (std::size_t k = 0; k < xs.size(); ++k)
    for (idx r = 0; r < t; ++r)
      std::copy_n(xs[k].value().data.begin() + r * widths[k], widths[k], out.data.begin() + r * total + offsets[k]);
  return make(std::move(out), xs, [widths, offsets, t, total](Node& self) {
    for (std::size_t k = 0; k < widths.size(); ++k) {
      if (Tensor* g = pg(self, k)) {
        for (idx r = 0; r < t; ++r)
          for (idx j = 0; j < widths[k]; ++j) g->data[r * widths[k] + j] += self.grad.data[r * total + offsets[k] + j];
      }
    }
  });
}

Var repeat_rows(const Var& x, std::span<const idx> counts) {
  require_2d(x, "repeat_rows");
  const idx p = x.value().rows(), c = x.value().cols();
  if (static_cast<idx>(counts.size()) != p) throw Error("repeat_rows: counts length does not match rows");
  idx total = 0;
  for (idx n : counts) {
    if (n < 0) throw Error("repeat_rows: negative count");
    total += n;
  }
  Tensor out({total, c});
  std::vector<idx> src;
  src.reserve(static_cast<std::size_t>(total));
  for (idx i = 0; i < p; ++i)
    for (idx k = 0; k < counts[i]; ++k) src.push_back(i);
  for (idx r = 0; r < total; ++r) std::copy_n(x.value().data.begin() + src[r] * c, c, out.data.begin() + r * c);
  return make(std::move(out), {x}, [src = std::move(src), c](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (std::size_t r = 0; r < src.size(); ++r)
        for (idx j = 0; j < c; ++j) g->data[src[r] * c + j] += self.grad.data[static_cast<idx>(r) * c + j];
    }
  });
}

Var reshape(const Var& x, Shape s) {
  if (numel(s) != x.value().size()) throw Error("reshape: " + shape_str(x.shape()) + " -> " + shape_str(s));
  Tensor out(std::move(s), x.value().data);
  return make(std::move(out), {x}, [](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (std::size_t i = 0; i < g->data.size(); ++i) g->data[i] += self.grad.data[i];
    }
  });
}

Var glu_cols(const Var& x) {
  require_2d(x, "glu_cols");
  const idx t = x.value().rows(), c2 = x.value().cols();
  if (c2 % 2) throw Error("glu_cols: odd width");
  const idx c = c2 / 2;
  Tensor out({t, c});
  for (idx r = 0; r < t; ++r)
    for (idx j = 0; j < c; ++j) out.data[r * c + j] = x.value().data[r * c2 + j] * sigm(x.value().data[r * c2 + c + j]);
  return make(std::move(out), {x}, [t, c, c2](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      const auto& in = pv(self, 0).data;
      for (idx r = 0; r < t; ++r)
        for (idx j = 0; j < c; ++j) {
          const double a = in[r * c2 + j], s = sigm(in[r * c2 + c + j]);
          const double gy = self.grad.data[r * c + j];
          g->data[r * c2 + j] += gy * s;
          g->data[r * c2 + c + j] += gy * a * s * (1.0 - s);
        }
    }
  });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data) s += v;
  return make(Tensor({1}, {s}), {x}, [](Node& self) {
    if (Tensor* g = pg(self, 0)) {
      for (auto& v : g->data) v += self.grad.data[0];
    }
  });
}

Var mean(const Var& x) {
  const double n = static_cast<double>(std::max<idx>(1, x.value().size()));
  return scale(sum(x), 1.0 / n);
}

}  // namespace jsyn::ag
