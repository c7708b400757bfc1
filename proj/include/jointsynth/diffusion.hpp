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


// Score-based diffusion between data and N(mu, I): schedule, forward noising,
// the score-matching loss and first-order reverse samplers.

#ifndef JOINTSYNTH_DIFFUSION_HPP_
#define JOINTSYNTH_DIFFUSION_HPP_

#include <functional>
#include <random>

#include "jointsynth/autograd.hpp"

namespace jsyn::diffusion {

using ag::Var;

inline constexpr double kTMin = 1e-4;

// Linear beta(t) on [0, 1]. B is its integral, lambda the noise variance and
// alpha the data decay at time t.
struct NoiseSchedule {
  double beta0 = 0.05;
  double beta1 = 20.0;

  double beta(double t) const { return beta0 + (beta1 - beta0) * t; }
  double cumulative(double t) const { return beta0 * t + 0.5 * (beta1 - beta0) * t * t; }
  double lambda(double t) const;
  double alpha(double t) const;
  void validate() const;
};

struct DiffusionState {
  Tensor x_t;
  double t = 1.0;
  Tensor mu;
};

// x_t = alpha y0 + (1 - alpha) mu + sqrt(lambda) eps.
DiffusionState forward_sample(const Tensor& y0, const Tensor& mu, double t, const Tensor& eps,
                              const NoiseSchedule& sched = {});

// Differentiable score estimate s(x_t, mu, t).
using ScoreNet = std::function<Var(const Var& x_t, const Var& mu, double t)>;
// Inference-only score estimate.
using ScoreFn = std::function<Tensor(const Tensor& x_t, const Tensor& mu, double t)>;

// Raw denoiser network F(input, mu, t), wrapped into a score by make_score_net.
using RawNet = std::function<Var(const Var& input, const Var& mu, double t)>;

enum class Parameterization {
  kDirect,          // score = F(x_t, mu, t)
  kPreconditioned,  // score from a skip-scaled estimate of (y0 - mu)
};

struct ScoreConfig {
  Parameterization kind = Parameterization::kPreconditioned;
  double sigma_data = 0.5;
};

// With kPreconditioned, writing sigma^2 = lambda/alpha^2 and z = (x_t - mu)/alpha:
//   r = c_skip z + c_out F(c_in z, mu, t),  score = -(x_t - mu - alpha r)/lambda
// where c_skip = sd^2/(sigma^2+sd^2), c_out = sigma sd/sqrt(sigma^2+sd^2),
// c_in = 1/sqrt(sigma^2+sd^2).
ScoreNet make_score_net(RawNet net, const ScoreConfig& cfg, const NoiseSchedule& sched = {});

// Runs a ScoreNet with gradient recording disabled.
ScoreFn inference(ScoreNet net);

struct LossDraw {
  double t = 1.0;
  Tensor eps;
};

// t ~ U(kTMin, 1), eps ~ N(0, I) of the given shape.
LossDraw draw_loss_noise(const Shape& shape, std::mt19937_64& rng);

// mean ||sqrt(lambda) s(x_t, mu, t) + eps||^2 at a fixed draw. Gradients flow
// into the network and into mu (which also enters x_t).
Var score_matching_loss(const ScoreNet& net, const Tensor& y0, const Var& mu, const LossDraw& draw,
                        const NoiseSchedule& sched = {});
Var score_matching_loss(const ScoreNet& net, const Tensor& y0, const Var& mu, std::mt19937_64& rng,
                        const NoiseSchedule& sched = {});

// Probability-flow ODE dx/dt = 1/2 (mu - x - s) beta(t), integrated from t = 1
// to 0 with `steps` uniform Euler steps; the score is evaluated at the middle
// of each step. Starts from x ~ N(mu, I/tau).
Tensor sample_ode(const ScoreFn& score, const Tensor& mu, int steps, double tau, std::mt19937_64& rng,
                  const NoiseSchedule& sched = {});
// Same integrator from a given terminal state.
Tensor integrate_ode(const ScoreFn& score, const Tensor& mu, Tensor x, int steps, const NoiseSchedule& sched = {});

// Reverse-time Euler-Maruyama: dx = (1/2 (mu - x) - s) beta dt + sqrt(beta) dW.
Tensor sample_sde(const ScoreFn& score, const Tensor& mu, int steps, std::mt19937_64& rng, double tau = 1.0,
                  const NoiseSchedule& sched = {});

// Exact score of the forward marginal when the data is a point mass at y_star.
ScoreFn point_mass_score(const Tensor& y_star, const NoiseSchedule& sched = {});

}  // namespace jsyn::diffusion

#endif  // JOINTSYNTH_DIFFUSION_HPP_
