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


#include "jointsynth/decoders.hpp"

namespace jsyn::decoders {

using idx = std::int64_t;

idx padded_length(idx t, idx multiple) { return (t + multiple - 1) / multiple * multiple; }

Var pad_time(const Var& x, const Var& fill, idx multiple) {
  const idx t = x.value().rows();
  const idx extra = padded_length(t, multiple) - t;
  if (extra == 0) return x;
  const idx count[1] = {extra};
  Var last = ag::slice_rows(fill, fill.value().rows() - 1, fill.value().rows());
  return ag::concat_rows({x, ag::repeat_rows(last, count)});
}

TimeEmbedding::TimeEmbedding(nn::ParamStore& ps, const std::string& name, idx dim, std::mt19937_64& rng)
    : dim_(dim), l1_(ps, name + ".l1", dim, 2 * dim, rng), l2_(ps, name + ".l2", 2 * dim, dim, rng) {}

Var TimeEmbedding::operator()(double t) const {
  return l2_(ag::mish(l1_(ag::constant(nn::sinusoidal_embedding(1000.0 * t, dim_)))));
}

namespace {

void check_pair(const Var& a, const Var& b, idx channels, const char* what) {
  const auto& s = a.shape();
  if (s.size() != 2 || s[1] != channels || s[0] < 1) {
    throw Error(std::string(what) + ": expected [T x " + std::to_string(channels) + "], got " + shape_str(s));
  }
  if (b.shape() != s) throw Error(std::string(what) + ": conditioning " + shape_str(b.shape()) + " vs " + shape_str(s));
}

// [T x C] <-> [1 x C x T] image with frequency as height and time as width.
Var to_plane(const Var& x) {
  const auto& s = x.shape();
  return ag::reshape(ag::transpose(x), {1, s[1], s[0]});
}

Var from_plane(const Var& x) {
  const auto& s = x.shape();
  return ag::transpose(ag::reshape(x, {s[1], s[2]}));
}

// Padding source for the noisy-state plane: mu itself, or zeros when the
// plane is already centred on mu.
Var state_fill(const Var& mu, bool centered) {
  return centered ? ag::constant(Tensor::zeros({1, mu.shape()[1]})) : mu;
}

}  // namespace

AcousticUNet::Res AcousticUNet::make_res(nn::ParamStore& ps, const std::string& name, idx cin, idx cout,
                                         std::mt19937_64& rng) {
  Res r;
  r.c1 = nn::Conv2d(ps, name + ".c1", cin, cout, 3, rng);
  r.c2 = nn::Conv2d(ps, name + ".c2", cout, cout, 3, rng);
  r.temb = nn::Linear(ps, name + ".temb", cfg_.time_dim, cout, rng);
  r.has_skip = cin != cout;
  if (r.has_skip) r.skip = nn::Conv2d(ps, name + ".skip", cin, cout, 1, rng);
  return r;
}

Var AcousticUNet::res(const Res& r, const Var& x, const Var& temb) const {
  Var h = ag::mish(r.c1(x));
  h = ag::add_channel(h, ag::reshape(r.temb(temb), {h.shape()[0]}));
  h = ag::mish(r.c2(h));
  return ag::add(h, r.has_skip ? r.skip(x) : x);
}

AcousticUNet::AcousticUNet(nn::ParamStore& ps, const AcousticConfig& cfg, std::mt19937_64& rng,
                           const std::string& prefix)
    : cfg_(cfg) {
  const idx d = depth();
  if (d < 0) throw Error("AcousticUNet: need at least one width");
  if (cfg.n_mel % (idx{1} << d)) {
    throw Error("AcousticUNet: " + std::to_string(cfg.n_mel) + " mel bins not divisible by 2^" + std::to_string(d));
  }
  const auto& w = cfg.widths;
  time_ = TimeEmbedding(ps, prefix + ".time", cfg.time_dim, rng);
  in_ = nn::Conv2d(ps, prefix + ".in", 2, w[0], 3, rng);
  idx cur = w[0];
  for (idx l = 0; l < d; ++l) {
    down_.push_back(make_res(ps, prefix + ".down" + std::to_string(l), cur, w[l], rng));
    cur = w[l];
  }
  mid_ = make_res(ps, prefix + ".mid", cur, w[d], rng);
  cur = w[d];
  for (idx l = d - 1; l >= 0; --l) {
    up_.push_back(make_res(ps, prefix + ".up" + std::to_string(l), cur + w[l], w[l], rng));
    cur = w[l];
  }
  out_ = nn::Conv2d(ps, prefix + ".out", cur, 1, 3, rng, nn::Init::kZero);
}

Var AcousticUNet::operator()(const Var& x_t, const Var& mu, double t) const {
  check_pair(x_t, mu, cfg_.n_mel, "AcousticUNet");
  const idx frames = x_t.shape()[0];
  const idx mult = idx{1} << depth();
  Var temb = time_(t);
  Var h = in_(ag::concat_rows({to_plane(pad_time(x_t, state_fill(mu, cfg_.centered_input), mult)), to_plane(pad_time(mu, mu, mult))}));
  std::vector<Var> skips;
  for (const auto& r : down_) {
    h = res(r, h, temb);
    skips.push_back(h);
    h = ag::avgpool2d(h);
  }
  h = res(mid_, h, temb);
  for (const auto& r : up_) {
    h = ag::concat_rows({ag::upsample2d(h), skips.back()});
    skips.pop_back();
    h = res(r, h, temb);
  }
  Var out = from_plane(out_(h));
  return out.shape()[0] == frames ? out : ag::slice_rows(out, 0, frames);
}

ConformerPrenet::ConformerPrenet(nn::ParamStore& ps, const ConformerConfig& cfg, std::mt19937_64& rng,
                                 const std::string& prefix)
    : cfg_(cfg),
      in_(ps, prefix + ".in", cfg.in_channels, cfg.dim, rng),
      head_(ps, prefix + ".head", cfg.dim, cfg.out_channels, rng) {
  const idx d = cfg.dim, hid = cfg.dim * cfg.ff_mult;
  auto ff = [&](const std::string& n) {
    return FeedForward{nn::LayerNorm(ps, n + ".norm", d), nn::Linear(ps, n + ".l1", d, hid, rng),
                       nn::Linear(ps, n + ".l2", hid, d, rng)};
  };
  for (idx l = 0; l < cfg.layers; ++l) {
    const std::string p = prefix + ".block" + std::to_string(l);
    Block b{ff(p + ".ff1"),
            ff(p + ".ff2"),
            nn::LayerNorm(ps, p + ".attn_norm", d),
            nn::SelfAttention(ps, p + ".attn", d, cfg.heads, 0, rng),
            nn::LayerNorm(ps, p + ".conv_norm", d),
            nn::Linear(ps, p + ".pw1", d, 2 * d, rng),
            nn::Linear(ps, p + ".pw2", d, d, rng),
            nn::DepthwiseConv1d(ps, p + ".dw", d, cfg.conv_kernel, rng),
            nn::LayerNorm(ps, p + ".dw_norm", d),
            nn::LayerNorm(ps, p + ".out_norm", d)};
    blocks_.push_back(std::move(b));
  }
}

Var ConformerPrenet::feed_forward(const FeedForward& f, const Var& x) { return f.l2(ag::silu(f.l1(f.norm(x)))); }

Var ConformerPrenet::operator()(const Var& mu) const {
  const auto& s = mu.shape();
  if (s.size() != 2 || s[1] != cfg_.in_channels || s[0] < 1) {
    throw Error("ConformerPrenet: expected [T x " + std::to_string(cfg_.in_channels) + "], got " + shape_str(s));
  }
  Var x = ag::add(in_(mu), ag::constant(nn::position_table(s[0], cfg_.dim)));
  for (const auto& b : blocks_) {
    x = ag::add(x, ag::scale(feed_forward(b.ff1, x), 0.5));
    x = ag::add(x, b.attn(b.attn_norm(x)));
    Var c = ag::glu_cols(b.pw1(b.conv_norm(x)));
    c = b.pw2(ag::silu(b.dw_norm(b.dw(c))));
    x = ag::add(x, c);
    x = ag::add(x, ag::scale(feed_forward(b.ff2, x), 0.5));
    x = b.out_norm(x);
  }
  return head_(x);
}

GestureUNet::Res GestureUNet::make_res(nn::ParamStore& ps, const std::string& name, idx cin, idx cout,
                                       std::mt19937_64& rng) {
  Res r;
  r.c1 = nn::Conv1d(ps, name + ".c1", cin, cout, cfg_.kernel, rng);
  r.c2 = nn::Conv1d(ps, name + ".c2", cout, cout, cfg_.kernel, rng);
  r.temb = nn::Linear(ps, name + ".temb", cfg_.time_dim, cout, rng);
  r.has_skip = cin != cout;
  if (r.has_skip) r.skip = nn::Conv1d(ps, name + ".skip", cin, cout, 1, rng);
  return r;
}

Var GestureUNet::res(const Res& r, const Var& x, const Var& temb) const {
  Var h = ag::mish(r.c1(x));
  h = ag::add_bias(h, ag::reshape(r.temb(temb), {h.shape()[1]}));
  h = ag::mish(r.c2(h));
  return ag::add(h, r.has_skip ? r.skip(x) : x);
}

GestureUNet::GestureUNet(nn::ParamStore& ps, const GestureConfig& cfg, std::mt19937_64& rng,
                         const std::string& prefix)
    : cfg_(cfg) {
  const idx d = depth();
  if (d < 0) throw Error("GestureUNet: need at least one width");
  const auto& w = cfg.widths;
  time_ = TimeEmbedding(ps, prefix + ".time", cfg.time_dim, rng);
  in_ = nn::Conv1d(ps, prefix + ".in", 2 * cfg.channels, w[0], cfg.kernel, rng);
  idx cur = w[0];
  for (idx l = 0; l < d; ++l) {
    down_.push_back(make_res(ps, prefix + ".down" + std::to_string(l), cur, w[l], rng));
    cur = w[l];
  }
  mid_ = make_res(ps, prefix + ".mid", cur, w[d], rng);
  cur = w[d];
  for (idx l = d - 1; l >= 0; --l) {
    up_.push_back(make_res(ps, prefix + ".up" + std::to_string(l), cur + w[l], w[l], rng));
    cur = w[l];
  }
  out_ = nn::Conv1d(ps, prefix + ".out", cur, cfg.channels, cfg.kernel, rng, nn::Init::kZero);
}

Var GestureUNet::operator()(const Var& g_t, const Var& mu_prime, double t) const {
  check_pair(g_t, mu_prime, cfg_.channels, "GestureUNet");
  const idx frames = g_t.shape()[0];
  const idx mult = idx{1} << depth();
  Var temb = time_(t);
  Var h = in_(ag::concat_cols({pad_time(g_t, state_fill(mu_prime, cfg_.centered_input), mult), pad_time(mu_prime, mu_prime, mult)}));
  std::vector<Var> skips;
  for (const auto& r : down_) {
    h = res(r, h, temb);
    skips.push_back(h);
    h = ag::avgpool_time(h);
  }
  h = res(mid_, h, temb);
  for (const auto& r : up_) {
    h = ag::concat_cols({ag::upsample_time(h), skips.back()});
    skips.pop_back();
    h = res(r, h, temb);
  }
  Var out = out_(h);
  return out.shape()[0] == frames ? out : ag::slice_rows(out, 0, frames);
}

}  // namespace jsyn::decoders
