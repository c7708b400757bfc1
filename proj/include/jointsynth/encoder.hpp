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

// Text encoder (symbols -> per-symbol mel means) and log-duration predictor.

#ifndef JOINTSYNTH_ENCODER_HPP_
#define JOINTSYNTH_ENCODER_HPP_

#include <span>
#include <vector>

#include "jointsynth/aligner.hpp"
#include "jointsynth/nn.hpp"

namespace jsyn::encoder {

using ag::Var;

struct EncoderConfig {
  std::int64_t n_symbols = 68;
  std::int64_t n_mel = 80;
  std::int64_t hidden = 96;
  std::int64_t heads = 2;
  std::int64_t layers = 2;
  std::int64_t ffn_hidden = 192;
  std::int64_t ffn_kernel = 3;
  std::int64_t prenet_kernel = 5;
  std::int64_t rel_window = 4;
  std::int64_t max_len = 512;
  std::int64_t dp_hidden = 64;
  std::int64_t dp_kernel = 3;
};

struct EncoderOutput {
  Var mu_tilde;  // [P x n_mel]
  Var hidden;    // [P x hidden]
};

class TextEncoder {
 public:
  TextEncoder(nn::ParamStore& ps, const EncoderConfig& cfg, std::mt19937_64& rng);

  // `valid` (optional) marks real symbols with 1 and padding with 0; padded
  // positions never influence valid ones.
  EncoderOutput encode(std::span<const std::int64_t> ids, std::span<const double> valid = {}) const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  struct Block {
    nn::SelfAttention attn;
    nn::LayerNorm norm1, norm2;
    nn::Conv1d ffn1, ffn2;
  };
  EncoderConfig cfg_;
  Var embedding_;
  nn::Conv1d prenet_conv_;
  nn::LayerNorm prenet_norm_;
  nn::Linear prenet_proj_;
  std::vector<Block> blocks_;
  nn::Linear head_;
};

// Log-duration head. Reads the per-symbol means through a stop-gradient, so
// its loss never reaches the encoder.
class DurationPredictor {
 public:
  DurationPredictor(nn::ParamStore& ps, const EncoderConfig& cfg, std::mt19937_64& rng);

  // Returns log d_hat as a [P x 1] tensor.
  Var predict(const EncoderOutput& enc, std::span<const double> valid = {}) const;

 private:
  nn::Conv1d conv1_, conv2_;
  nn::LayerNorm norm1_, norm2_;
  nn::Linear proj_;
};

// d_p = max(1, round(scale * exp(log_d_hat_p))). Throws when any d_p > 10^4.
align::DurationAlignment durations_to_frames(std::span<const double> log_d_hat, double scale);

// Mean over elements of 1/2 ((y - mu)^2 + log 2 pi).
Var prior_loss(const Var& mu, const Tensor& y);

// Mean over symbols of (log_d_hat - log d)^2.
Var duration_loss(const Var& log_d_hat, const align::DurationAlignment& target);

}  // namespace jsyn::encoder

#endif  // JOINTSYNTH_ENCODER_HPP_
