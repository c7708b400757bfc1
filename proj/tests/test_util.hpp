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


// Shared helpers for the unit tests: central-difference gradient checks and
// small random generators.

#ifndef JOINTSYNTH_TESTS_TEST_UTIL_HPP_
#define JOINTSYNTH_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "jointsynth/autograd.hpp"

namespace jsyn::testing {

// Relative error ||analytic - numeric|| / max(||analytic||, ||numeric||) over
// all listed inputs, with numeric gradients from central differences of step h.
inline double gradient_error(const std::function<ag::Var()>& loss, std::vector<ag::Var> inputs, double h = 1e-5) {
  for (auto& v : inputs) v.zero_grad();
  ag::backward(loss());
  std::vector<std::vector<double>> analytic;
  for (auto& v : inputs) {
    analytic.push_back(v.grad().data.empty() ? std::vector<double>(v.value().data.size(), 0.0) : v.grad().data);
  }
  double diff2 = 0.0, an2 = 0.0, nu2 = 0.0;
  ag::NoGradGuard guard;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto& data = inputs[i].mutable_value().data;
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double keep = data[j];
      data[j] = keep + h;
      const double up = loss().value().data[0];
      data[j] = keep - h;
      const double down = loss().value().data[0];
      data[j] = keep;
      const double num = (up - down) / (2.0 * h);
      const double an = analytic[i][j];
      diff2 += (an - num) * (an - num);
      an2 += an * an;
      nu2 += num * num;
    }
  }
  const double scale = std::max({std::sqrt(an2), std::sqrt(nu2), 1e-300});
  return std::sqrt(diff2) / scale;
}

inline ag::Var random_var(Shape s, std::mt19937_64& rng, double stddev = 1.0) {
  return ag::Var(Tensor::randn(std::move(s), rng, stddev), true);
}

inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

}  // namespace jsyn::testing

#endif  // JOINTSYNTH_TESTS_TEST_UTIL_HPP_
