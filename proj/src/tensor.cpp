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

#include "jointsynth/tensor.hpp"

#include <cmath>
#include <sstream>

namespace jsyn {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << " x ";
    os << s[i];
  }
  os << ']';
  return os.str();
}

std::int64_t numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto d : s) {
    if (d < 0) throw Error("negative dimension in shape " + shape_str(s));
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), data(static_cast<std::size_t>(numel(shape)), fill) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (static_cast<std::int64_t>(data.size()) != numel(shape)) {
    throw Error("tensor data size " + std::to_string(data.size()) + " does not match shape " + shape_str(shape));
  }
}

Tensor Tensor::randn(Shape s, std::mt19937_64& rng, double stddev) {
  Tensor t(std::move(s));
  std::normal_distribution<double> nd(0.0, stddev);
  for (auto& v : t.data) v = nd(rng);
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_shape(const Tensor& t, const Shape& expected, const std::string& what) {
  if (t.shape != expected) {
    throw Error(what + ": expected shape " + shape_str(expected) + ", got " + shape_str(t.shape));
  }
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) throw Error("max_abs_diff: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

double mean_squared_diff(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) throw Error("mean_squared_diff: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  if (a.data.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return s / static_cast<double>(a.data.size());
}

}  // namespace jsyn
