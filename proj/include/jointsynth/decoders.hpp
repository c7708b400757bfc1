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


// Denoising networks: a 2D U-Net over mel frames, and the gesture path (a
// Conformer pre-net mapping mel means to pose means, plus a 1D U-Net).

#ifndef JOINTSYNTH_DECODERS_HPP_
#define JOINTSYNTH_DECODERS_HPP_

#include <random>
#include <vector>

#include "jointsynth/nn.hpp"

namespace jsyn::decoders {

using ag::Var;

struct AcousticConfig {
  std::int64_t n_mel = 80;
  // Channel width per resolution level; depth = widths.size() - 1.
  std::vector<std::int64_t> widths = {8, 16, 16};
  std::int64_t time_dim = 32;
  // The first input plane is x_t - mu (scaled), so padding frames are zero
  // rather than copies of mu.
  bool centered_input = false;
};

struct ConformerConfig {
  std::int64_t in_channels = 80;
  std::int64_t dim = 96;
  std::int64_t layers = 2;
  std::int64_t heads = 2;
  std::int64_t ff_mult = 4;
  std::int64_t conv_kernel = 21;
  std::int64_t out_channels = 45;
};

struct GestureConfig {
  std::int64_t channels = 45;
  std::vector<std::int64_t> widths = {64, 96, 128};
  std::int64_t kernel = 5;
  std::int64_t time_dim = 32;
  bool centered_input = false;
};

// Pads [T x C] to a multiple of `multiple` frames by repeating the last row of
// `fill`. Returns x unchanged when no padding is needed.
Var pad_time(const Var& x, const Var& fill, std::int64_t multiple);
std::int64_t padded_length(std::int64_t t, std::int64_t multiple);

class TimeEmbedding {
 public:
  TimeEmbedding() = default;
  TimeEmbedding(nn::ParamStore& ps, const std::string& name, std::int64_t dim, std::mt19937_64& rng);
  // [1 x dim] features of 1000 t.
  Var operator()(double t) const;

 private:
  std::int64_t dim_ = 0;
  nn::Linear l1_, l2_;
};

class AcousticUNet {
 public:
  AcousticUNet(nn::ParamStore& ps, const AcousticConfig& cfg, std::mt19937_64& rng, const std::string& prefix = "mel");
  // x_t, mu: [T x n_mel] -> [T x n_mel].
  Var operator()(const Var& x_t, const Var& mu, double t) const;
  std::int64_t depth() const { return static_cast<std::int64_t>(cfg_.widths.size()) - 1; }
  const AcousticConfig& config() const { return cfg_; }

 private:
  struct Res {
    nn::Conv2d c1, c2, skip;
    nn::Linear temb;
    bool has_skip = false;
  };
  Res make_res(nn::ParamStore& ps, const std::string& name, std::int64_t cin, std::int64_t cout, std::mt19937_64& rng);
  Var res(const Res& r, const Var& x, const Var& temb) const;

  AcousticConfig cfg_;
  TimeEmbedding time_;
  nn::Conv2d in_;
  std::vector<Res> down_, up_;
  Res mid_;
  nn::Conv2d out_;
};

class ConformerPrenet {
 public:
  ConformerPrenet(nn::ParamStore& ps, const ConformerConfig& cfg, std::mt19937_64& rng,
                  const std::string& prefix = "prenet");
  // mu: [T x in_channels] -> mu': [T x out_channels].
  Var operator()(const Var& mu) const;
  const ConformerConfig& config() const { return cfg_; }

 private:
  struct FeedForward {
    nn::LayerNorm norm;
    nn::Linear l1, l2;
  };
  struct Block {
    FeedForward ff1, ff2;
    nn::LayerNorm attn_norm;
    nn::SelfAttention attn;
    nn::LayerNorm conv_norm;
    nn::Linear pw1, pw2;
    nn::DepthwiseConv1d dw;
    nn::LayerNorm dw_norm, out_norm;
  };
  static Var feed_forward(const FeedForward& f, const Var& x);

  ConformerConfig cfg_;
  nn::Linear in_;
  std::vector<Block> blocks_;
  nn::Linear head_;
};

class GestureUNet {
 public:
  GestureUNet(nn::ParamStore& ps, const GestureConfig& cfg, std::mt19937_64& rng, const std::string& prefix = "pose");
  // g_t, mu_prime: [T x channels] -> [T x channels].
  Var operator()(const Var& g_t, const Var& mu_prime, double t) const;
  std::int64_t depth() const { return static_cast<std::int64_t>(cfg_.widths.size()) - 1; }
  const GestureConfig& config() const { return cfg_; }

 private:
  struct Res {
    nn::Conv1d c1, c2, skip;
    nn::Linear temb;
    bool has_skip = false;
  };
  Res make_res(nn::ParamStore& ps, const std::string& name, std::int64_t cin, std::int64_t cout, std::mt19937_64& rng);
  Var res(const Res& r, const Var& x, const Var& temb) const;

  GestureConfig cfg_;
  TimeEmbedding time_;
  nn::Conv1d in_;
  std::vector<Res> down_, up_;
  Res mid_;
  nn::Conv1d out_;
};

}  // namespace jsyn::decoders

#endif  // JOINTSYNTH_DECODERS_HPP_
