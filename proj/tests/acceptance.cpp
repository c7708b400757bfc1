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


// Acceptance checks. Each criterion prints one PASS/FAIL line with the
// measured quantities; the exit status is non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>

#include "fixtures.hpp"
#include "jointsynth/aligner.hpp"
#include "jointsynth/diffusion.hpp"
#include "jointsynth/eval.hpp"
#include "jointsynth/synthesis.hpp"
#include "jointsynth/training.hpp"
#include "stats_oracle.hpp"
#include "test_util.hpp"

namespace {

using namespace jsyn;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double linf(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

// Linear interpolation of [T x C] onto `frames` rows spanning the same interval.
Tensor warp_time(const Tensor& x, std::int64_t frames) {
  const std::int64_t t = x.rows(), c = x.cols();
  if (t == frames) return x;
  Tensor out({frames, c});
  for (std::int64_t i = 0; i < frames; ++i) {
    const double pos = frames == 1 ? 0.0 : static_cast<double>(i) * static_cast<double>(t - 1) / static_cast<double>(frames - 1);
    const auto lo = std::min<std::int64_t>(static_cast<std::int64_t>(pos), t - 1);
    const auto hi = std::min<std::int64_t>(lo + 1, t - 1);
    const double f = pos - static_cast<double>(lo);
    for (std::int64_t k = 0; k < c; ++k) out(i, k) = (1.0 - f) * x(lo, k) + f * x(hi, k);
  }
  return out;
}

Outcome mas_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n01;
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = testing::uniform_int(rng, 1, 4), t = testing::uniform_int(rng, p, 7);
    Tensor l({p, t});
    // Half the instances are integer-valued so exact ties exercise the tie-break.
    for (auto& v : l.data) v = trial % 2 ? n01(rng) : static_cast<double>(testing::uniform_int(rng, -2, 2));
    const auto dp = align::mas_search(l);
    const auto bf = align::brute_force_align(l);
    if (dp.score != bf.score || dp.alignment.durations != bf.alignment.durations) ++mismatches;
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << "200 instances, " << mismatches << " mismatches, " << secs << " s";
  return {mismatches == 0 && secs < 10.0, os.str()};
}

Outcome schedule_identity() {
  const diffusion::NoiseSchedule s;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = u(rng);
    worst = std::max(worst, std::fabs(s.alpha(t) * s.alpha(t) + s.lambda(t) - 1.0));
  }
  std::ostringstream os;
  os << "max |alpha^2 + lambda - 1| = " << worst;
  return {worst < 1e-12, os.str()};
}

Outcome forward_marginal() {
  const auto t0 = Clock::now();
  const diffusion::NoiseSchedule s;
  std::mt19937_64 rng(99);
  const int n = 10000;
  const double y0 = 1.3, mu = -0.6;
  bool ok = true;
  std::ostringstream os;
  for (double t : {0.25, 0.5, 1.0}) {
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = diffusion::forward_sample(Tensor({1, 1}, {y0}), Tensor({1, 1}, {mu}), t, Tensor::randn({1, 1}, rng), s).x_t.data[0];
      sum += x;
      sq += x * x;
    }
    const double mean = sum / n, var = (sq - n * mean * mean) / (n - 1);
    const double lam = s.lambda(t), a = s.alpha(t);
    const double z_mean = (mean - (a * y0 + (1.0 - a) * mu)) / std::sqrt(lam / n);
    const double z_var = (var - lam) / (lam * std::sqrt(2.0 / (n - 1)));
    ok = ok && std::fabs(z_mean) < 3.0 && std::fabs(z_var) < 3.0;
    os << "t=" << t << " z_mean=" << z_mean << " z_var=" << z_var << "; ";
  }
  const double secs = seconds_since(t0);
  os << secs << " s";
  return {ok && secs < 30.0, os.str()};
}

Outcome point_mass_recovery() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(5);
  const Tensor y_star = Tensor::randn({20, 8}, rng), mu = Tensor::randn({20, 8}, rng);
  const auto score = diffusion::point_mass_score(y_star);
  std::mt19937_64 a(1), b(1);
  const double e500 = linf(diffusion::sample_ode(score, mu, 500, 1.0, a), y_star);
  const double e250 = linf(diffusion::sample_ode(score, mu, 250, 1.0, b), y_star);
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << "Linf@500=" << e500 << " Linf@250=" << e250 << ", " << secs << " s";
  return {e500 <= 0.05 && e250 > e500 && secs < 60.0, os.str()};
}

Outcome gradient_fidelity() {
  std::mt19937_64 rng(11);
  std::ostringstream os;
  bool ok = true;
  {
    // Score-matching loss through a preconditioned tiny U-Net.
    nn::ParamStore ps;
    decoders::AcousticUNet net(ps, decoders::AcousticConfig{8, {2, 3}, 4, true}, rng);
    for (auto [n, v] : ps.entries()) v.mutable_value() = Tensor::randn(v.shape(), rng, 0.5);
    const auto score = diffusion::make_score_net([&](const ag::Var& x, const ag::Var& m, double t) { return net(x, m, t); },
                                                 diffusion::ScoreConfig{});
    const Tensor y0 = Tensor::randn({6, 8}, rng);
    ag::Var mu = testing::random_var({6, 8}, rng);
    const diffusion::LossDraw draw{0.37, Tensor::randn({6, 8}, rng)};
    std::vector<ag::Var> inputs{mu};
    for (const auto& [n, v] : ps.entries()) inputs.push_back(v);
    const double e = testing::gradient_error([&] { return diffusion::score_matching_loss(score, y0, mu, draw); }, inputs);
    os << "score_matching(" << ps.parameter_count() << " params)=" << e << "; ";
    ok = ok && e < 1e-4 && ps.parameter_count() <= 1000;
  }
  encoder::EncoderConfig ec;
  ec.n_symbols = 6;
  ec.n_mel = 4;
  ec.hidden = 4;
  ec.layers = 1;
  ec.ffn_hidden = 6;
  ec.prenet_kernel = 3;
  ec.rel_window = 2;
  ec.dp_hidden = 4;
  nn::ParamStore ps;
  encoder::TextEncoder enc(ps, ec, rng);
  const auto enc_params = ps.parameter_count();
  encoder::DurationPredictor dp(ps, ec, rng);
  const std::vector<std::int64_t> ids = {1, 4, 2, 5};
  const auto d = align::DurationAlignment::from_durations({2, 1, 3, 2});
  const Tensor y = Tensor::randn({8, 4}, rng);
  {
    auto loss = [&] { return encoder::prior_loss(ag::repeat_rows(enc.encode(ids).mu_tilde, d.durations), y); };
    const double e = testing::gradient_error(loss, ps.with_prefix("enc."));
    os << "prior(" << enc_params << " params)=" << e << "; ";
    ok = ok && e < 1e-4 && enc_params <= 1000;
  }
  {
    auto loss = [&] { return encoder::duration_loss(dp.predict(enc.encode(ids)), d); };
    const double e = testing::gradient_error(loss, ps.with_prefix("dp."));
    os << "duration(" << ps.parameter_count() - enc_params << " params)=" << e;
    ok = ok && e < 1e-4;
  }
  return {ok, os.str()};
}

struct OverfitRun {
  std::unique_ptr<model::JointModel> model;
  std::vector<training::SyntheticUtterance> corpus;
};

Outcome joint_overfit(OverfitRun& run) {
  const auto t0 = Clock::now();
  training::TrainConfig cfg;  // batch 2, lr 1e-4
  cfg.max_updates = 3000;
  run.corpus = training::make_synthetic_corpus(2, 0);
  run.model = std::make_unique<model::JointModel>(cfg.model, text::SymbolInventory::standard());
  const auto res = training::train(cfg, run.corpus, *run.model);
  std::vector<double> early, late;
  for (std::size_t u = 0; u < 1000; ++u) early.push_back(res.history[u].total);
  for (std::size_t u = 2000; u < 3000; ++u) late.push_back(res.history[u].total);
  const double m_early = median(early), m_late = median(late);

  const auto items = training::prepare(run.corpus, run.model->stats);
  synthesis::SynthesisRequest req;  // 50 / 500 steps, tau 1.5
  req.text = run.corpus[0].text;
  req.seed = 1;
  const auto out = synthesis::synthesize(*run.model, req);
  const auto target_t = items[0].mel.rows();
  const double mel_mse = mean_squared_diff(warp_time(out.mel_norm, target_t), items[0].mel);
  const double pose_mse = mean_squared_diff(warp_time(out.pose_norm, target_t), items[0].pose);
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << "median total [0,1k)=" << m_early << " [2k,3k)=" << m_late << "; '" << req.text << "' T=" << out.mel_norm.rows()
     << " vs " << target_t << ", mel MSE=" << mel_mse << ", pose MSE=" << pose_mse << "; " << secs << " s";
  return {m_late < m_early && mel_mse < 0.5 && pose_mse < 0.5 && secs < 20 * 60.0, os.str()};
}

Outcome freeze_protocol() {
  training::TrainConfig cfg;
  cfg.max_updates = 500;
  cfg.mode = training::Mode::kMotionOnFrozenTts;
  const auto corpus = training::make_synthetic_corpus(2, 0);
  model::JointModel m(cfg.model, text::SymbolInventory::standard());
  m.stats = training::corpus_stats(corpus);
  const auto items = training::prepare(corpus, m.stats);
  // Gesture loss averaged over 20 fixed noise draws per item.
  auto pose_loss = [&] {
    double s = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) s += training::evaluate(m, items, cfg.weights, cfg.mode, 1000 + seed).pose;
    return s / 20.0;
  };
  const double before = pose_loss();
  const auto res = training::train(cfg, corpus, m);
  const double after = pose_loss();
  const bool same = res.tts_hash_before == res.tts_hash_after && model::hash_params(m.tts_params()) == res.tts_hash_before;
  std::ostringstream os;
  os << "tts hash " << (same ? "unchanged" : "CHANGED") << "; gesture loss " << before << " -> " << after;
  return {same && after < before, os.str()};
}

Outcome gesture_channels() {
  std::mt19937_64 rng(3);
  nn::ParamStore ps;
  decoders::ConformerPrenet pre(ps, decoders::ConformerConfig{}, rng);
  decoders::GestureUNet net(ps, decoders::GestureConfig{}, rng);
  const auto score = diffusion::make_score_net([&](const ag::Var& g, const ag::Var& m, double t) { return net(g, m, t); },
                                               diffusion::ScoreConfig{});
  bool ok = true;
  std::ostringstream os;
  for (std::int64_t t : {31, 64, 100}) {
    ps.zero_grad();
    const ag::Var mu = testing::random_var({t, 80}, rng);
    const ag::Var mu_p = pre(mu);
    const Tensor pose = Tensor::randn({t, 45}, rng);
    const ag::Var loss = diffusion::score_matching_loss(score, pose, mu_p, rng);
    ag::backward(loss);
    const bool shapes = mu_p.shape() == Shape{t, 45} && net(ag::constant(pose), mu_p, 0.5).shape() == Shape{t, 45};
    const bool grads = mu.grad().shape == mu.shape() && mu.grad().all_finite() && ps.get("pose.out.w").grad().all_finite();
    ok = ok && shapes && grads && std::isfinite(loss.value().data[0]);
    os << "T=" << t << (shapes && grads ? " ok " : " FAILED ");
  }
  return {ok, os.str()};
}

Outcome eval_checks() {
  std::vector<eval::Response> rows;
  for (int i = 0; i < 450; ++i) {
    rows.push_back(eval::Response{"p" + std::to_string(i / 15), "s" + std::to_string(i % 15), "NAT", i < 225 ? "4" : "5", false, "", ""});
  }
  const auto s = eval::mos_summary(rows)[0];
  const double oracle_hw = testing::student_t_quantile(0.975, 449.0) * std::sqrt(450.0 * 0.25 / 449.0) / std::sqrt(450.0);
  const bool mos_ok = std::fabs(s.mean - 4.5) < 1e-12 && std::fabs(s.ci95_halfwidth - 0.046) <= 0.002 &&
                      std::fabs(s.ci95_halfwidth - oracle_hw) < 1e-9;

  std::vector<eval::Response> mm, flipped;
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    eval::Response r{"p", "s" + std::to_string(i), i % 2 ? "A" : "B", eval::mismatch_labels()[rng() % 5], false, "", rng() % 2 ? "L" : "R"};
    mm.push_back(r);
    r.matched_side = r.matched_side == "L" ? "R" : "L";
    flipped.push_back(r);
  }
  bool anti = true;
  for (std::size_t i = 0; i < mm.size(); ++i)
    anti = anti && eval::response_value(flipped[i], eval::Scale::kMismatch) == -eval::response_value(mm[i], eval::Scale::kMismatch);
  const auto a = eval::mismatch_scores(mm), b = eval::mismatch_scores(flipped);
  for (std::size_t i = 0; i < a.size(); ++i) anti = anti && b[i].mean == -a[i].mean;

  // Hand computation: one difference of 1 in n = 450 gives mean 1/n and sample
  // variance (1 - 1/n)/(n - 1) = 1/n, so t = (1/n) / sqrt(1/n^2) = 1.
  std::vector<double> x(450, 4.0), y(450, 4.0);
  x[100] = 5.0;
  const auto tt = eval::paired_t_test(x, y);
  const bool t_ok = std::fabs(tt.t - 1.0) < 1e-9 && tt.p > 0.05;

  std::ostringstream os;
  os << "MOS " << eval::format_score(s) << " (halfwidth " << s.ci95_halfwidth << ", oracle " << oracle_hw << "); antisymmetry "
     << (anti ? "exact" : "BROKEN") << "; one-difference t=" << tt.t << " p=" << tt.p;
  return {mos_ok && anti && t_ok, os.str()};
}

Outcome determinism(const OverfitRun& run) {
  std::unique_ptr<model::JointModel> fresh;
  const model::JointModel* m = run.model.get();
  if (!m) {
    fresh = std::make_unique<model::JointModel>(testing::tiny_model_config(), text::SymbolInventory::standard());
    fresh->stats = training::corpus_stats(training::make_synthetic_corpus(2, 0));
    m = fresh.get();
  }
  bool ok = true;
  for (auto sampler : {synthesis::Sampler::kOde, synthesis::Sampler::kSde}) {
    synthesis::SynthesisRequest req;
    req.text = "tila mer";
    req.seed = 77;
    req.sampler = sampler;
    const auto a = synthesis::synthesize(*m, req), b = synthesis::synthesize(*m, req);
    ok = ok && a.mel.frames.data == b.mel.frames.data && a.pose.frames.data == b.pose.frames.data;
  }
  std::mt19937_64 rng(1);
  const Tensor y_star = Tensor::randn({10, 4}, rng), mu = Tensor::randn({10, 4}, rng);
  const auto score = diffusion::point_mass_score(y_star);
  std::mt19937_64 r1(5), r2(5);
  ok = ok && diffusion::sample_ode(score, mu, 50, 1.5, r1).data == diffusion::sample_ode(score, mu, 50, 1.5, r2).data;
  ok = ok && diffusion::sample_sde(score, mu, 50, r1).data == diffusion::sample_sde(score, mu, 50, r2).data;
  return {ok, ok ? "synthesize (ODE and SDE) and both samplers bit-identical across runs" : "outputs differ between runs"};
}

}  // namespace

int main() {
  OverfitRun run;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"MAS-oracle equivalence", mas_oracle},
      {"Schedule identity", schedule_identity},
      {"Forward-marginal check", forward_marginal},
      {"Analytic-score recovery", point_mass_recovery},
      {"Gradient fidelity", gradient_fidelity},
      {"Gesture path 45 channels", gesture_channels},
      {"Eval harness closed-form checks", eval_checks},
      {"Freeze protocol", freeze_protocol},
      {"Joint overfit", [&run] { return joint_overfit(run); }},
      {"Determinism", [&run] { return determinism(run); }},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " acceptance criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
