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


// Serial reference kernels against their OpenMP counterparts at the shapes the
// default model uses.

#include <random>
#include <vector>

#include "benchmark/benchmark.h"
#include "jointsynth/kernels.hpp"

namespace {

using namespace jsyn::kernels;

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

template <auto Kernel>
void BM_Gemm(benchmark::State& state) {
  const idx n = state.range(0);
  const GemmDims d{n, n, n};
  const auto a = random_vec(n * n, 1), b = random_vec(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    Kernel(d, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}

template <auto Kernel>
void BM_Conv1d(benchmark::State& state) {
  // Gesture U-Net input layer: 90 -> 64 channels, kernel 5.
  const Conv1dDims d{state.range(0), 90, 64, 5};
  const auto x = random_vec(d.t * d.cin, 1), w = random_vec(d.ksize * d.cin * d.cout, 2);
  std::vector<double> y(d.t * d.cout);
  for (auto _ : state) {
    Kernel(d, x, w, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <auto Kernel>
void BM_Conv2d(benchmark::State& state) {
  // Acoustic U-Net first level: 8 -> 8 channels over 80 mel bins.
  const Conv2dDims d{8, 8, 80, state.range(0), 3};
  const auto x = random_vec(d.cin * d.h * d.w, 1), w = random_vec(d.cout * d.cin * 9, 2);
  std::vector<double> y(d.cout * d.h * d.w);
  for (auto _ : state) {
    Kernel(d, x, w, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <auto Kernel>
void BM_Conv2dGradWeight(benchmark::State& state) {
  const Conv2dDims d{8, 8, 80, state.range(0), 3};
  const auto x = random_vec(d.cin * d.h * d.w, 1), gy = random_vec(d.cout * d.h * d.w, 2);
  std::vector<double> gw(d.cout * d.cin * 9);
  for (auto _ : state) {
    Kernel(d, x, gy, gw);
    benchmark::DoNotOptimize(gw.data());
  }
}

BENCHMARK(BM_Gemm<serial::gemm>)->Name("gemm/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<parallel::gemm>)->Name("gemm/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_Conv1d<serial::conv1d>)->Name("conv1d/serial")->Arg(64)->Arg(512);
BENCHMARK(BM_Conv1d<parallel::conv1d>)->Name("conv1d/parallel")->Arg(64)->Arg(512);
BENCHMARK(BM_Conv2d<serial::conv2d>)->Name("conv2d/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Conv2d<parallel::conv2d>)->Name("conv2d/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_Conv2dGradWeight<serial::conv2d_grad_weight>)->Name("conv2d_grad_weight/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Conv2dGradWeight<parallel::conv2d_grad_weight>)->Name("conv2d_grad_weight/parallel")->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
