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

#include "jointsynth/encoder.hpp"

#include <cmath>
#include <numbers>

namespace jsyn::encoder {

using idx = std::int64_t;

namespace {

Var masked(const Var& x, std::span<const double> valid) { return valid.empty() ? x : ag::mul_rows(x, valid); }

}  // namespace

TextEncoder::TextEncoder(nn::ParamStore& ps, const EncoderConfig& cfg, std::mt19937_64& rng)
    : cfg_(cfg),
      embedding_(ps.create("enc.embedding", Tensor::randn({cfg.n_symbols, cfg.hidden}, rng, 1.0))),
      prenet_conv_(ps, "enc.prenet.conv", cfg.hidden, cfg.hidden, cfg.prenet_kernel, rng),
      prenet_norm_(ps, "enc.prenet.norm", cfg.hidden),
      prenet_proj_(ps, "enc.prenet.proj", cfg.hidden, cfg.hidden, rng, nn::Init::kZero),
      head_(ps, "enc.head", cfg.hidden, cfg.n_mel, rng) {
  for (idx l = 0; l < cfg.layers; ++l) {
    const std::string p = "enc.block" + std::to_string(l);
    blocks_.push_back(Block{nn::SelfAttention(ps, p + ".attn", cfg.hidden, cfg.heads, cfg.rel_window, rng),
                            nn::LayerNorm(ps, p + ".norm1", cfg.hidden), nn::LayerNorm(ps, p + ".norm2", cfg.hidden),
                            nn::Conv1d(ps, p + ".ffn1", cfg.hidden, cfg.ffn_hidden, cfg.ffn_kernel, rng),
                            nn::Conv1d(ps, p + ".ffn2", cfg.ffn_hidden, cfg.hidden, cfg.ffn_kernel, rng)});
  }
}

EncoderOutput TextEncoder::encode(std::span<const idx> ids, std::span<const double> valid) const {
  const idx p = static_cast<idx>(ids.size());
  if (p < 1) throw Error("encode: empty symbol sequence");
  if (p > cfg_.max_len) throw Error("encode: " + std::to_string(p) + " symbols exceed max length " + std::to_string(cfg_.max_len));
  if (!valid.empty() && static_cast<idx>(valid.size()) != p) throw Error("encode: mask length mismatch");

  Var x = masked(ag::embedding(embedding_, ids), valid);
  x = ag::add(x, prenet_proj_(ag::relu(prenet_norm_(prenet_conv_(x)))));
  x = masked(x, valid);
  for (const auto& b : blocks_) {
    x = b.norm1(ag::add(x, b.attn(x, valid)));
    x = masked(x, valid);
    Var y = b.ffn2(masked(ag::relu(b.ffn1(x)), valid));
    x = masked(b.norm2(ag::add(x, y)), valid);
  }
  return {masked(head_(x), valid), x};
}

DurationPredictor::DurationPredictor(nn::ParamStore& ps, const EncoderConfig& cfg, std::mt19937_64& rng)
    : conv1_(ps, "dp.conv1", cfg.n_mel, cfg.dp_hidden, cfg.dp_kernel, rng),
      conv2_(ps, "dp.conv2", cfg.dp_hidden, cfg.dp_hidden, cfg.dp_kernel, rng),
      norm1_(ps, "dp.norm1", cfg.dp_hidden),
      norm2_(ps, "dp.norm2", cfg.dp_hidden),
      proj_(ps, "dp.proj", cfg.dp_hidden, 1, rng) {}

Var DurationPredictor::predict(const EncoderOutput& enc, std::span<const double> valid) const {
  Var x = masked(ag::detach(enc.mu_tilde), valid);
  x = masked(norm1_(ag::relu(conv1_(x))), valid);
  x = masked(norm2_(ag::relu(conv2_(x))), valid);
  return masked(proj_(x), valid);
}

align::DurationAlignment durations_to_frames(std::span<const double> log_d_hat, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error("durations_to_frames: scale must be positive");
  std::vector<idx> d;
  d.reserve(log_d_hat.size());
  for (double l : log_d_hat) {
    const double v = scale * std::exp(l);
    if (!(v <= 1e4)) throw Error("durations_to_frames: predicted duration exceeds 10^4 frames");
    d.push_back(std::max<idx>(1, static_cast<idx>(std::llround(v))));
  }
  return align::DurationAlignment::from_durations(std::move(d));
}

Var prior_loss(const Var& mu, const Tensor& y) {
  require_shape(y, mu.shape(), "prior_loss target");
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return ag::add_scalar(ag::scale(ag::mean(ag::square(ag::sub(mu, ag::constant(y)))), 0.5), half_log_2pi);
}

Var duration_loss(const Var& log_d_hat, const align::DurationAlignment& target) {
  const idx p = log_d_hat.value().size();
  if (static_cast<idx>(target.durations.size()) != p) throw Error("duration_loss: symbol count mismatch");
  Tensor logd(log_d_hat.shape());
  for (idx i = 0; i < p; ++i) logd.data[i] = std::log(static_cast<double>(target.durations[i]));
  return ag::mean(ag::square(ag::sub(log_d_hat, ag::constant(std::move(logd)))));
}

}  // namespace jsyn::encoder
