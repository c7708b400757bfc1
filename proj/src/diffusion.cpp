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


#include "jointsynth/diffusion.hpp"

#include <cmath>
#include <sstream>

namespace jsyn::diffusion {

using idx = std::int64_t;

double NoiseSchedule::lambda(double t) const { return -std::expm1(-cumulative(t)); }

double NoiseSchedule::alpha(double t) const { return std::exp(-0.5 * cumulative(t)); }

void NoiseSchedule::validate() const {
  if (!(beta0 > 0.0) || !(beta1 > beta0) || !std::isfinite(beta1)) {
    std::ostringstream os;
    os << "NoiseSchedule: need 0 < beta0 < beta1, got beta0=" << beta0 << " beta1=" << beta1;
    throw Error(os.str());
  }
}

namespace {

void check_time(double t, const char* what) {
  if (!(t > 0.0 && t <= 1.0)) {
    std::ostringstream os;
    os << what << ": t=" << t << " outside (0, 1]";
    throw Error(os.str());
  }
}

void check_steps(int steps, double tau, const char* what) {
  if (steps < 1) throw Error(std::string(what) + ": steps must be >= 1");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(std::string(what) + ": temperature must be positive");
}

void check_finite(const Tensor& x, int step, const char* what) {
  if (!x.all_finite()) throw Error(std::string(what) + ": non-finite state at step " + std::to_string(step));
}

}  // namespace

DiffusionState forward_sample(const Tensor& y0, const Tensor& mu, double t, const Tensor& eps,
                              const NoiseSchedule& sched) {
  check_time(t, "forward_sample");
  require_shape(mu, y0.shape, "forward_sample mu");
  require_shape(eps, y0.shape, "forward_sample eps");
  const double a = sched.alpha(t), s = std::sqrt(sched.lambda(t));
  DiffusionState st{Tensor(y0.shape), t, mu};
  for (idx i = 0; i < y0.size(); ++i) st.x_t.data[i] = a * y0.data[i] + (1.0 - a) * mu.data[i] + s * eps.data[i];
  return st;
}

ScoreNet make_score_net(RawNet net, const ScoreConfig& cfg, const NoiseSchedule& sched) {
  if (cfg.kind == Parameterization::kDirect) return net;
  if (!(cfg.sigma_data > 0.0)) throw Error("make_score_net: sigma_data must be positive");
  const double sd = cfg.sigma_data;
  return [net = std::move(net), sd, sched](const Var& x_t, const Var& mu, double t) {
    const double lam = sched.lambda(t), a = sched.alpha(t);
    const double sig2 = lam / (a * a);
    const double norm = std::sqrt(sig2 + sd * sd);
    const double c_skip = sd * sd / (sig2 + sd * sd);
    const double c_out = std::sqrt(sig2) * sd / norm;
    const double c_in = 1.0 / norm;
    Var z = ag::scale(ag::sub(x_t, mu), 1.0 / a);
    Var f = net(ag::scale(z, c_in), mu, t);
    // x_t - mu - alpha r = alpha ((1 - c_skip) z - c_out F)
    Var resid = ag::sub(ag::scale(z, 1.0 - c_skip), ag::scale(f, c_out));
    return ag::scale(resid, -a / lam);
  };
}

ScoreFn inference(ScoreNet net) {
  return [net = std::move(net)](const Tensor& x, const Tensor& mu, double t) {
    ag::NoGradGuard guard;
    return net(ag::constant(x), ag::constant(mu), t).value();
  };
}

LossDraw draw_loss_noise(const Shape& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(kTMin, 1.0);
  LossDraw d;
  d.t = u(rng);
  d.eps = Tensor::randn(shape, rng);
  return d;
}

Var score_matching_loss(const ScoreNet& net, const Tensor& y0, const Var& mu, const LossDraw& draw,
                        const NoiseSchedule& sched) {
  require_shape(mu.value(), y0.shape, "score_matching_loss mu");
  require_shape(draw.eps, y0.shape, "score_matching_loss eps");
  check_time(draw.t, "score_matching_loss");
  const double a = sched.alpha(draw.t), s = std::sqrt(sched.lambda(draw.t));
  Tensor fixed(y0.shape);
  for (idx i = 0; i < y0.size(); ++i) fixed.data[i] = a * y0.data[i] + s * draw.eps.data[i];
  Var x_t = ag::add(ag::constant(std::move(fixed)), ag::scale(mu, 1.0 - a));
  Var score = net(x_t, mu, draw.t);
  require_shape(score.value(), y0.shape, "score_matching_loss score");
  return ag::mean(ag::square(ag::add(ag::scale(score, s), ag::constant(draw.eps))));
}

Var score_matching_loss(const ScoreNet& net, const Tensor& y0, const Var& mu, std::mt19937_64& rng,
                        const NoiseSchedule& sched) {
  return score_matching_loss(net, y0, mu, draw_loss_noise(y0.shape, rng), sched);
}

Tensor integrate_ode(const ScoreFn& score, const Tensor& mu, Tensor x, int steps, const NoiseSchedule& sched) {
  check_steps(steps, 1.0, "sample_ode");
  require_shape(x, mu.shape, "sample_ode state");
  const double h = 1.0 / steps;
  for (int i = 0; i < steps; ++i) {
    const double t = 1.0 - (i + 0.5) * h;
    const Tensor s = score(x, mu, t);
    require_shape(s, mu.shape, "sample_ode score");
    const double k = 0.5 * sched.beta(t) * h;
    for (idx j = 0; j < x.size(); ++j) x.data[j] -= k * (mu.data[j] - x.data[j] - s.data[j]);
    check_finite(x, i, "sample_ode");
  }
  return x;
}

Tensor sample_ode(const ScoreFn& score, const Tensor& mu, int steps, double tau, std::mt19937_64& rng,
                  const NoiseSchedule& sched) {
  check_steps(steps, tau, "sample_ode");
  Tensor x = Tensor::randn(mu.shape, rng, 1.0 / std::sqrt(tau));
  for (idx j = 0; j < x.size(); ++j) x.data[j] += mu.data[j];
  return integrate_ode(score, mu, std::move(x), steps, sched);
}

Tensor sample_sde(const ScoreFn& score, const Tensor& mu, int steps, std::mt19937_64& rng, double tau,
                  const NoiseSchedule& sched) {
  check_steps(steps, tau, "sample_sde");
  Tensor x = Tensor::randn(mu.shape, rng, 1.0 / std::sqrt(tau));
  for (idx j = 0; j < x.size(); ++j) x.data[j] += mu.data[j];
  std::normal_distribution<double> n01;
  const double h = 1.0 / steps;
  for (int i = 0; i < steps; ++i) {
    const double t = 1.0 - (i + 0.5) * h;
    const Tensor s = score(x, mu, t);
    require_shape(s, mu.shape, "sample_sde score");
    const double b = sched.beta(t);
    const double noise = std::sqrt(b * h);
    for (idx j = 0; j < x.size(); ++j) {
      const double drift = (0.5 * (mu.data[j] - x.data[j]) - s.data[j]) * b * h;
      x.data[j] -= drift + noise * n01(rng);
    }
    check_finite(x, i, "sample_sde");
  }
  return x;
}

ScoreFn point_mass_score(const Tensor& y_star, const NoiseSchedule& sched) {
  return [y_star, sched](const Tensor& x, const Tensor& mu, double t) {
    const double a = sched.alpha(t), lam = sched.lambda(t);
    Tensor s(x.shape);
    for (idx j = 0; j < x.size(); ++j) s.data[j] = -(x.data[j] - a * y_star.data[j] - (1.0 - a) * mu.data[j]) / lam;
    return s;
  };
}

}  // namespace jsyn::diffusion
