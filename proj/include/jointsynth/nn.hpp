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

#ifndef JOINTSYNTH_NN_HPP_
#define JOINTSYNTH_NN_HPP_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "jointsynth/autograd.hpp"

namespace jsyn::nn {

using ag::Var;

// Named trainable tensors. Modules hold shared handles into the store, so
// updating a value in place is visible to every module using it.
class ParamStore {
 public:
  Var create(const std::string& name, Tensor init);
  const Var& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
  std::vector<Var> with_prefix(const std::string& prefix) const;
  std::int64_t parameter_count() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Var>> entries_;
  std::map<std::string, std::size_t> index_;
};

enum class Init { kFanIn, kZero };

class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& ps, const std::string& name, std::int64_t in, std::int64_t out, std::mt19937_64& rng,
         Init init = Init::kFanIn, bool bias = true);
  Var operator()(const Var& x) const { return ag::linear(x, w_, b_); }
  const Var& weight() const { return w_; }
  const Var& bias() const { return b_; }

 private:
  Var w_, b_;
};

class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ParamStore& ps, const std::string& name, std::int64_t cin, std::int64_t cout, std::int64_t ksize,
         std::mt19937_64& rng, Init init = Init::kFanIn);
  Var operator()(const Var& x) const { return ag::conv1d(x, w_, b_); }

 private:
  Var w_, b_;
};

class DepthwiseConv1d {
 public:
  DepthwiseConv1d() = default;
  DepthwiseConv1d(ParamStore& ps, const std::string& name, std::int64_t channels, std::int64_t ksize,
                  std::mt19937_64& rng);
  Var operator()(const Var& x) const { return ag::depthwise_conv1d(x, w_, b_); }

 private:
  Var w_, b_;
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamStore& ps, const std::string& name, std::int64_t cin, std::int64_t cout, std::int64_t ksize,
         std::mt19937_64& rng, Init init = Init::kFanIn);
  Var operator()(const Var& x) const { return ag::conv2d(x, w_, b_); }

 private:
  Var w_, b_;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamStore& ps, const std::string& name, std::int64_t channels);
  Var operator()(const Var& x) const { return ag::layer_norm(x, gamma_, beta_); }

 private:
  Var gamma_, beta_;
};

// Sinusoidal embedding of a scalar (diffusion time scaled by 1000, or a
// position index) into `dim` channels, returned as a [1 x dim] constant.
Tensor sinusoidal_embedding(double value, std::int64_t dim);
// Absolute sinusoidal position table [t x dim].
Tensor position_table(std::int64_t t, std::int64_t dim);

// Multi-head self-attention over a [T x C] sequence. With `rel_window` > 0
// each head adds a learned bias indexed by clipped relative offset.
class SelfAttention {
 public:
  SelfAttention() = default;
  SelfAttention(ParamStore& ps, const std::string& name, std::int64_t channels, std::int64_t heads,
                std::int64_t rel_window, std::mt19937_64& rng);
  // key_mask: length T, 1 for valid positions, 0 for padding (may be empty).
  Var operator()(const Var& x, std::span<const double> key_mask = {}) const;

 private:
  std::int64_t channels_ = 0, heads_ = 0;
  Linear q_, k_, v_, o_;
  std::vector<Var> rel_;
};

}  // namespace jsyn::nn

#endif  // JOINTSYNTH_NN_HPP_
