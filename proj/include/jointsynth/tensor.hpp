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

#ifndef JOINTSYNTH_TENSOR_HPP_
#define JOINTSYNTH_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace jsyn {

// Thrown for contract violations on public entry points (bad shapes, bad
// ranges, malformed files). Carries a human-readable message only.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::int64_t>;

std::string shape_str(const Shape& s);
std::int64_t numel(const Shape& s);

// Dense row-major double tensor. Sequences are stored time-major [T x C];
// images are stored channel-major [C x H x W].
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> values);

  static Tensor zeros(Shape s) { return Tensor(std::move(s), 0.0); }
  static Tensor randn(Shape s, std::mt19937_64& rng, double stddev = 1.0);

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
  std::int64_t dim() const { return static_cast<std::int64_t>(shape.size()); }
  std::int64_t rows() const { return shape.at(0); }
  std::int64_t cols() const { return shape.at(1); }

  double& operator()(std::int64_t r, std::int64_t c) { return data[r * shape[1] + c]; }
  double operator()(std::int64_t r, std::int64_t c) const { return data[r * shape[1] + c]; }

  std::span<double> row(std::int64_t r) { return {data.data() + r * shape[1], static_cast<std::size_t>(shape[1])}; }
  std::span<const double> row(std::int64_t r) const {
    return {data.data() + r * shape[1], static_cast<std::size_t>(shape[1])};
  }

  bool all_finite() const;
};

// Throws Error unless t has exactly `expected` shape; `what` prefixes the message.
void require_shape(const Tensor& t, const Shape& expected, const std::string& what);

double max_abs_diff(const Tensor& a, const Tensor& b);
double mean_squared_diff(const Tensor& a, const Tensor& b);

}  // namespace jsyn

#endif  // JOINTSYNTH_TENSOR_HPP_
