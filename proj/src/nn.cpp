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

#include "jointsynth/nn.hpp"

#include <cmath>

namespace jsyn::nn {

using idx = std::int64_t;

Var ParamStore::create(const std::string& name, Tensor init) {
  if (contains(name)) throw Error("duplicate parameter name: " + name);
  Var v(std::move(init), true);
  index_[name] = entries_.size();
  entries_.emplace_back(name, v);
  return v;
}

const Var& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter: " + name);
  return entries_[it->second].second;
}

std::vector<Var> ParamStore::with_prefix(const std::string& prefix) const {
  std::vector<Var> out;
  for (const auto& [name, v] : entries_) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.push_back(v);
  }
  return out;
}

idx ParamStore::parameter_count() const {
  idx n = 0;
  for (const auto& e : entries_) n += e.second.value().size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

namespace {

Tensor init_tensor(Shape s, idx fan_in, Init init, std::mt19937_64& rng) {
  if (init == Init::kZero) return Tensor::zeros(std::move(s));
  return Tensor::randn(std::move(s), rng, 1.0 / std::sqrt(static_cast<double>(std::max<idx>(1, fan_in))));
}

}  // namespace

Linear::Linear(ParamStore& ps, const std::string& name, idx in, idx out, std::mt19937_64& rng, Init init, bool bias)
    : w_(ps.create(name + ".w", init_tensor({in, out}, in, init, rng))) {
  if (bias) b_ = ps.create(name + ".b", Tensor::zeros({out}));
}

Conv1d::Conv1d(ParamStore& ps, const std::string& name, idx cin, idx cout, idx ksize, std::mt19937_64& rng, Init init)
    : w_(ps.create(name + ".w", init_tensor({ksize, cin, cout}, cin * ksize, init, rng))),
      b_(ps.create(name + ".b", Tensor::zeros({cout}))) {}

DepthwiseConv1d::DepthwiseConv1d(ParamStore& ps, const std::string& name, idx channels, idx ksize,
                                 std::mt19937_64& rng)
    : w_(ps.create(name + ".w", init_tensor({ksize, channels}, ksize, Init::kFanIn, rng))),
      b_(ps.create(name + ".b", Tensor::zeros({channels}))) {}

Conv2d::Conv2d(ParamStore& ps, const std::string& name, idx cin, idx cout, idx ksize, std::mt19937_64& rng, Init init)
    : w_(ps.create(name + ".w", init_tensor({cout, cin, ksize, ksize}, cin * ksize * ksize, init, rng))),
      b_(ps.create(name + ".b", Tensor::zeros({cout}))) {}

LayerNorm::LayerNorm(ParamStore& ps, const std::string& name, idx channels)
    : gamma_(ps.create(name + ".gamma", Tensor({channels}, 1.0))),
      beta_(ps.create(name + ".beta", Tensor::zeros({channels}))) {}

Tensor sinusoidal_embedding(double value, idx dim) {
  Tensor out({1, dim});
  const idx half = dim / 2;
  const double denom = static_cast<double>(std::max<idx>(1, half - 1));
  for (idx i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / denom);
    out.data[i] = std::sin(value * freq);
    out.data[half + i] = std::cos(value * freq);
  }
  return out;
}

Tensor position_table(idx t, idx dim) {
  Tensor out({t, dim});
  for (idx p = 0; p < t; ++p) {
    Tensor row = sinusoidal_embedding(static_cast<double>(p), dim);
    std::copy(row.data.begin(), row.data.end(), out.data.begin() + p * dim);
  }
  return out;
}

SelfAttention::SelfAttention(ParamStore& ps, const std::string& name, idx channels, idx heads, idx rel_window,
                             std::mt19937_64& rng)
    : channels_(channels),
      heads_(heads),
      q_(ps, name + ".q", channels, channels, rng),
      k_(ps, name + ".k", channels, channels, rng),
      v_(ps, name + ".v", channels, channels, rng),
      o_(ps, name + ".o", channels, channels, rng) {
  if (heads <= 0 || channels % heads) throw Error("SelfAttention: channels must divide evenly into heads");
  if (rel_window > 0) {
    for (idx h = 0; h < heads; ++h) {
      rel_.push_back(ps.create(name + ".rel" + std::to_string(h), Tensor::zeros({2 * rel_window + 1})));
    }
  }
}

Var SelfAttention::operator()(const Var& x, std::span<const double> key_mask) const {
  const idx t = x.value().rows();
  const idx dh = channels_ / heads_;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  Var q = q_(x), k = k_(x), v = v_(x);
  std::vector<Var> outs;
  outs.reserve(static_cast<std::size_t>(heads_));
  for (idx h = 0; h < heads_; ++h) {
    Var qh = ag::slice_cols(q, h * dh, (h + 1) * dh);
    Var kh = ag::slice_cols(k, h * dh, (h + 1) * dh);
    Var vh = ag::slice_cols(v, h * dh, (h + 1) * dh);
    Var scores = ag::scale(ag::matmul_nt(qh, kh), inv);
    if (!rel_.empty()) scores = ag::add(scores, ag::relative_bias(rel_[h], t));
    outs.push_back(ag::matmul(ag::softmax_rows(scores, key_mask), vh));
  }
  return o_(heads_ == 1 ? outs[0] : ag::concat_cols(outs));
}

}  // namespace jsyn::nn
