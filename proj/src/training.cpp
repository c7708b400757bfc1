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


#include "jointsynth/training.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "jointsynth/aligner.hpp"

namespace jsyn::training {

using idx = std::int64_t;
using ag::Var;

Mode parse_mode(const std::string& s) {
  if (s == "joint") return Mode::kJoint;
  if (s == "tts_only") return Mode::kTtsOnly;
  if (s == "motion_on_frozen_tts") return Mode::kMotionOnFrozenTts;
  throw Error("unknown training mode '" + s + "' (expected joint, tts_only or motion_on_frozen_tts)");
}

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::kJoint:
      return "joint";
    case Mode::kTtsOnly:
      return "tts_only";
    case Mode::kMotionOnFrozenTts:
      return "motion_on_frozen_tts";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error("TrainConfig: batch_size must be positive");
  if (!(lr > 0.0)) throw Error("TrainConfig: lr must be positive");
  if (max_updates < 0) throw Error("TrainConfig: max_updates must be non-negative");
  for (double w : {weights.prior, weights.duration, weights.mel, weights.pose}) {
    if (!(w >= 0.0)) throw Error("TrainConfig: loss weights must be >= 0");
  }
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw Error("TrainConfig: val_fraction must be in [0, 1)");
  if (corpus_utterances < 1) throw Error("TrainConfig: corpus needs at least one utterance");
}

namespace {

std::vector<idx> parse_widths(const std::string& s) {
  std::vector<idx> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      out.push_back(std::stoll(tok));
    } catch (const std::exception&) {
      throw Error("config: bad width list '" + s + "'");
    }
  }
  if (out.empty()) throw Error("config: empty width list");
  return out;
}

}  // namespace

TrainConfig load_config(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error("load_config: " + std::string(e.what()));
  }
  TrainConfig c;
  auto& m = c.model;
  using Setter = std::function<void(const std::string&)>;
  auto i64 = [](idx& dst) -> Setter { return [&dst](const std::string& v) { dst = std::stoll(v); }; };
  auto u64 = [](std::uint64_t& dst) -> Setter { return [&dst](const std::string& v) { dst = std::stoull(v); }; };
  auto f64 = [](double& dst) -> Setter { return [&dst](const std::string& v) { dst = std::stod(v); }; };
  auto str = [](std::filesystem::path& dst) -> Setter { return [&dst](const std::string& v) { dst = v; }; };
  auto widths = [](std::vector<idx>& dst) -> Setter { return [&dst](const std::string& v) { dst = parse_widths(v); }; };
  const std::map<std::string, std::map<std::string, Setter>> keys = {
      {"train",
       {{"batch_size", i64(c.batch_size)},
        {"lr", f64(c.lr)},
        {"beta1", f64(c.beta1)},
        {"beta2", f64(c.beta2)},
        {"adam_eps", f64(c.adam_eps)},
        {"grad_clip", f64(c.grad_clip)},
        {"max_updates", i64(c.max_updates)},
        {"seed", u64(c.seed)},
        {"mode", [&c](const std::string& v) { c.mode = parse_mode(v); }},
        {"w_prior", f64(c.weights.prior)},
        {"w_duration", f64(c.weights.duration)},
        {"w_mel", f64(c.weights.mel)},
        {"w_pose", f64(c.weights.pose)},
        {"val_fraction", f64(c.val_fraction)},
        {"val_seed", u64(c.val_seed)},
        {"val_every", i64(c.val_every)},
        {"checkpoint_every", i64(c.checkpoint_every)},
        {"log_every", i64(c.log_every)},
        {"out_dir", str(c.out_dir)},
        {"init_checkpoint", str(c.init_checkpoint)}}},
      {"corpus", {{"utterances", i64(c.corpus_utterances)}, {"seed", u64(c.corpus_seed)}}},
      {"model",
       {{"init_seed", u64(m.init_seed)},
        {"sigma_data", f64(m.score.sigma_data)},
        {"score",
         [&m](const std::string& v) {
           if (v == "direct") {
             m.score.kind = diffusion::Parameterization::kDirect;
           } else if (v == "preconditioned") {
             m.score.kind = diffusion::Parameterization::kPreconditioned;
           } else {
             throw Error("config: score must be direct or preconditioned");
           }
         }}}},
      {"encoder",
       {{"hidden", i64(m.encoder.hidden)},
        {"heads", i64(m.encoder.heads)},
        {"layers", i64(m.encoder.layers)},
        {"ffn_hidden", i64(m.encoder.ffn_hidden)},
        {"ffn_kernel", i64(m.encoder.ffn_kernel)},
        {"prenet_kernel", i64(m.encoder.prenet_kernel)},
        {"rel_window", i64(m.encoder.rel_window)},
        {"max_len", i64(m.encoder.max_len)},
        {"dp_hidden", i64(m.encoder.dp_hidden)},
        {"dp_kernel", i64(m.encoder.dp_kernel)}}},
      {"acoustic", {{"widths", widths(m.acoustic.widths)}, {"time_dim", i64(m.acoustic.time_dim)}}},
      {"prenet",
       {{"dim", i64(m.prenet.dim)},
        {"layers", i64(m.prenet.layers)},
        {"heads", i64(m.prenet.heads)},
        {"ff_mult", i64(m.prenet.ff_mult)},
        {"conv_kernel", i64(m.prenet.conv_kernel)}}},
      {"gesture",
       {{"widths", widths(m.gesture.widths)}, {"kernel", i64(m.gesture.kernel)}, {"time_dim", i64(m.gesture.time_dim)}}},
      {"diffusion", {{"beta0", f64(m.schedule.beta0)}, {"beta1", f64(m.schedule.beta1)}}},
  };
  for (const auto& [section, body] : tree) {
    auto sit = keys.find(section);
    if (sit == keys.end()) throw Error("load_config: unknown section [" + section + "] in " + path.string());
    for (const auto& [key, node] : body) {
      auto kit = sit->second.find(key);
      if (kit == sit->second.end()) throw Error("load_config: unknown key '" + key + "' in [" + section + "]");
      try {
        kit->second(node.data());
      } catch (const Error&) {
        throw;
      } catch (const std::exception&) {
        throw Error("load_config: bad value '" + node.data() + "' for " + section + "." + key);
      }
    }
  }
  c.validate();
  return c;
}

SymbolTemplate symbol_template(idx id) {
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull ^ (static_cast<std::uint64_t>(id) * 0x100000001b3ull));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n01;
  SymbolTemplate s;
  s.duration = 3 + static_cast<idx>(rng() % 6);
  const double level = -6.0 + 4.0 * u(rng);
  const double slope = -2.0 + 4.0 * u(rng);
  const double c1 = 80.0 * u(rng), c2 = 80.0 * u(rng);
  const double a1 = 1.0 + 2.0 * u(rng), a2 = 1.0 + 2.0 * u(rng);
  const double w1 = 3.0 + 5.0 * u(rng), w2 = 3.0 + 5.0 * u(rng);
  s.mel.resize(features::kMelBins);
  for (idx c = 0; c < features::kMelBins; ++c) {
    const double x = static_cast<double>(c);
    s.mel[c] = level + slope * x / features::kMelBins + a1 * std::exp(-0.5 * (x - c1) * (x - c1) / (w1 * w1)) +
               a2 * std::exp(-0.5 * (x - c2) * (x - c2) / (w2 * w2));
  }
  s.pose_offset.resize(features::kPoseChannels);
  s.pose_phase.resize(features::kPoseChannels);
  for (idx c = 0; c < features::kPoseChannels; ++c) {
    s.pose_offset[c] = 0.3 * n01(rng);
    s.pose_phase[c] = 2.0 * std::numbers::pi * u(rng);
  }
  s.pose_cycles = 0.5 + u(rng);
  return s;
}

std::vector<SyntheticUtterance> make_synthetic_corpus(idx n_utts, std::uint64_t seed, const text::SymbolInventory& inv) {
  if (n_utts < 0) throw Error("make_synthetic_corpus: negative utterance count");
  static const std::string kAlphabet = "aeiklmnorst";
  std::mt19937_64 rng(seed);
  auto pick = [&rng](idx lo, idx hi) { return lo + static_cast<idx>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
  std::vector<SyntheticUtterance> out;
  for (idx u = 0; u < n_utts; ++u) {
    std::string text;
    const idx words = pick(1, 2);
    for (idx w = 0; w < words; ++w) {
      if (w) text += ' ';
      const idx len = pick(2, 4);
      char prev = 0;
      for (idx k = 0; k < len; ++k) {
        char c;
        do {
          c = kAlphabet[static_cast<std::size_t>(pick(0, static_cast<idx>(kAlphabet.size()) - 1))];
        } while (c == prev);
        text += c;
        prev = c;
      }
    }
    SyntheticUtterance utt;
    utt.text = text;
    utt.ids = text::tokenize(text, inv).ids;
    idx total = 0;
    std::vector<SymbolTemplate> tpl;
    for (idx id : utt.ids) {
      tpl.push_back(symbol_template(id));
      utt.durations.push_back(tpl.back().duration);
      total += tpl.back().duration;
    }
    utt.mel.frames = Tensor({total, features::kMelBins});
    utt.mel.frame_rate_hz = features::kMelFrameRate;
    utt.pose.frames = Tensor({total, features::kPoseChannels});
    utt.pose.frame_rate_hz = features::kMelFrameRate;
    idx t = 0;
    for (const auto& s : tpl) {
      for (idx k = 0; k < s.duration; ++k, ++t) {
        std::copy(s.mel.begin(), s.mel.end(), utt.mel.frames.row(t).begin());
        const double phase = 2.0 * std::numbers::pi * s.pose_cycles * static_cast<double>(k) / s.duration;
        for (idx c = 0; c < features::kPoseChannels; ++c) {
          utt.pose.frames(t, c) = s.pose_offset[c] + kPoseWiggle * std::sin(phase + s.pose_phase[c]);
        }
      }
    }
    out.push_back(std::move(utt));
  }
  return out;
}

features::FeatureStats corpus_stats(const std::vector<SyntheticUtterance>& corpus) {
  std::vector<std::pair<features::MelSpectrogram, features::PoseSequence>> pairs;
  for (const auto& u : corpus) pairs.emplace_back(u.mel, u.pose);
  return features::fit_stats(pairs);
}

std::vector<Item> prepare(const std::vector<SyntheticUtterance>& corpus, const features::FeatureStats& stats) {
  std::vector<Item> items;
  for (const auto& u : corpus) {
    auto [mel, pose] = features::align_lengths(u.mel, u.pose);
    items.push_back(Item{u.ids, features::normalize(mel.frames, stats, features::Stream::kMel),
                         features::normalize(pose.frames, stats, features::Stream::kPose)});
  }
  return items;
}

Adam::Adam(std::vector<Var> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.shape());
    v_.emplace_back(p.shape());
  }
  count_.assign(params_.size(), 0);
}

double Adam::step(double clip) {
  double sq = 0.0;
  for (const auto& p : params_) {
    for (double g : p.grad().data) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  const double k = (clip > 0.0 && norm > clip) ? clip / norm : 1.0;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& node = *params_[i].node();
    if (node.grad.data.empty()) continue;
    const idx c = ++count_[i];
    const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(c));
    const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(c));
    auto& m = m_[i].data;
    auto& v = v_[i].data;
    auto& w = node.value.data;
    const auto& g = node.grad.data;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = k * g[j];
      m[j] = b1_ * m[j] + (1.0 - b1_) * gj;
      v[j] = b2_ * v[j] + (1.0 - b2_) * gj * gj;
      w[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
    }
    node.grad = Tensor();
  }
  return norm;
}

namespace {

class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

std::string describe(const Losses& l) {
  std::ostringstream os;
  os << "prior=" << l.prior << " duration=" << l.duration << " mel=" << l.mel << " pose=" << l.pose
     << " total=" << l.total;
  return os.str();
}

}  // namespace

Losses item_losses(const model::JointModel& m, const Item& item, const LossWeights& w, Mode mode, std::mt19937_64& rng,
                   double backprop_scale) {
  const bool frozen = mode == Mode::kMotionOnFrozenTts;
  const bool with_pose = mode != Mode::kTtsOnly && w.pose > 0.0;
  Losses out;
  Var total;
  auto accumulate = [&total](const Var& term, double weight) {
    Var t = ag::scale(term, weight);
    total = total.defined() ? ag::add(total, t) : t;
  };

  Var mu_y;
  {
    std::optional<ag::NoGradGuard> guard;
    if (frozen) guard.emplace();
    auto enc = m.encoder.encode(item.ids);
    align::AlignResult al;
    {
      ag::NoGradGuard inner;
      al = align::mas_search(align::gaussian_loglik(enc.mu_tilde.value(), item.mel));
    }
    mu_y = ag::repeat_rows(enc.mu_tilde, al.alignment.durations);
    Var prior = encoder::prior_loss(mu_y, item.mel);
    Var dur = encoder::duration_loss(m.duration.predict(enc), al.alignment);
    out.prior = prior.value().data[0];
    out.duration = dur.value().data[0];
    if (!frozen) {
      accumulate(prior, w.prior);
      accumulate(dur, w.duration);
    }
    if (w.mel > 0.0) {
      Var mel = diffusion::score_matching_loss(m.mel_score(), item.mel, mu_y, rng, m.config().schedule);
      out.mel = mel.value().data[0];
      if (!frozen) accumulate(mel, w.mel);
    }
  }
  if (with_pose) {
    Var mu_p = m.prenet(frozen ? ag::detach(mu_y) : mu_y);
    Var pose = diffusion::score_matching_loss(m.pose_score(), item.pose, mu_p, rng, m.config().schedule);
    out.pose = pose.value().data[0];
    accumulate(pose, w.pose);
  }
  out.total = w.prior * out.prior + w.duration * out.duration + w.mel * out.mel + (with_pose ? w.pose * out.pose : 0.0);
  if (!std::isfinite(out.total)) throw NonFiniteLoss("non-finite loss: " + describe(out));
  if (backprop_scale > 0.0 && total.defined()) ag::backward(ag::scale(total, backprop_scale));
  return out;
}

Losses joint_step(model::JointModel& m, const std::vector<const Item*>& batch, Adam& opt, const TrainConfig& cfg,
                  std::mt19937_64& rng) {
  if (batch.empty()) throw Error("joint_step: empty batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  Losses mean;
  for (const Item* it : batch) {
    Losses l = item_losses(m, *it, cfg.weights, cfg.mode, rng, inv);
    mean.prior += inv * l.prior;
    mean.duration += inv * l.duration;
    mean.mel += inv * l.mel;
    mean.pose += inv * l.pose;
    mean.total += inv * l.total;
  }
  opt.step(cfg.grad_clip);
  return mean;
}

Losses evaluate(const model::JointModel& m, const std::vector<Item>& items, const LossWeights& w, Mode mode,
                std::uint64_t seed) {
  ag::NoGradGuard guard;
  std::mt19937_64 rng(seed);
  Losses mean;
  if (items.empty()) return mean;
  const double inv = 1.0 / static_cast<double>(items.size());
  for (const auto& it : items) {
    Losses l = item_losses(m, it, w, mode, rng, 0.0);
    mean.prior += inv * l.prior;
    mean.duration += inv * l.duration;
    mean.mel += inv * l.mel;
    mean.pose += inv * l.pose;
    mean.total += inv * l.total;
  }
  return mean;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_corpus(std::size_t n, double val_fraction) {
  std::size_t n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  if (n_val >= n) n_val = n > 0 ? n - 1 : 0;
  std::vector<std::size_t> tr, va;
  for (std::size_t i = 0; i < n; ++i) (i < n - n_val ? tr : va).push_back(i);
  if (va.empty()) va = tr;
  return {tr, va};
}

TrainResult train(const TrainConfig& cfg, const std::vector<SyntheticUtterance>& corpus, model::JointModel& m,
                  const TrainHooks* hooks) {
  cfg.validate();
  if (corpus.empty()) throw Error("train: corpus is empty");
  auto [tr_idx, va_idx] = split_corpus(corpus.size(), cfg.val_fraction);
  std::vector<SyntheticUtterance> tr_utts, va_utts;
  for (auto i : tr_idx) tr_utts.push_back(corpus[i]);
  for (auto i : va_idx) va_utts.push_back(corpus[i]);
  if (m.stats.mel_mean.empty()) m.stats = corpus_stats(tr_utts);
  const auto train_items = prepare(tr_utts, m.stats);
  const auto val_items = prepare(va_utts, m.stats);

  std::vector<Var> trainable;
  if (cfg.mode == Mode::kJoint) {
    for (const auto& e : m.params().entries()) trainable.push_back(e.second);
  } else if (cfg.mode == Mode::kTtsOnly) {
    trainable = m.tts_params();
  } else {
    trainable = m.motion_params();
  }
  m.params().zero_grad();
  Adam opt(trainable, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);

  TrainResult res;
  res.tts_hash_before = model::hash_params(m.tts_params());
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  auto next_item = [&]() -> const Item* {
    if (cursor == order.size()) {
      order.resize(train_items.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    return &train_items[order[cursor++]];
  };
  auto ckpt_meta = [&cfg](idx update) {
    return nlohmann::json{{"update", update}, {"mode", mode_name(cfg.mode)}, {"seed", cfg.seed}};
  };

  for (idx u = 0; u < cfg.max_updates; ++u) {
    std::vector<const Item*> batch;
    for (idx b = 0; b < cfg.batch_size; ++b) batch.push_back(next_item());
    Losses l;
    try {
      l = joint_step(m, batch, opt, cfg, rng);
    } catch (const NonFiniteLoss& e) {
      std::string where;
      if (!cfg.out_dir.empty()) {
        const auto snap = cfg.out_dir / "nonfinite_snapshot.ckpt";
        model::save_checkpoint(snap, m, ckpt_meta(u));
        where = "; snapshot written to " + snap.string();
      }
      throw Error("train: update " + std::to_string(u) + ": " + e.what() + where);
    }
    res.history.push_back(l);
    if (hooks && hooks->on_step) hooks->on_step(u, l);
    if (cfg.log_every > 0 && (u + 1) % cfg.log_every == 0) {
      std::cerr << "update " << (u + 1) << ": " << describe(l) << '\n';
    }
    if (cfg.val_every > 0 && (u + 1) % cfg.val_every == 0) {
      res.validation.emplace_back(u + 1, evaluate(m, val_items, cfg.weights, cfg.mode, cfg.val_seed));
    }
    if (cfg.checkpoint_every > 0 && !cfg.out_dir.empty() && (u + 1) % cfg.checkpoint_every == 0) {
      model::save_checkpoint(cfg.out_dir / "latest.ckpt", m, ckpt_meta(u + 1));
    }
  }
  res.tts_hash_after = model::hash_params(m.tts_params());
  if (!cfg.out_dir.empty()) {
    res.checkpoint = cfg.out_dir / "final.ckpt";
    model::save_checkpoint(res.checkpoint, m, ckpt_meta(cfg.max_updates));
  }
  return res;
}

}  // namespace jsyn::training
