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

// Dense compute kernels behind the autograd ops.
//
// Every kernel exists twice: `serial::` is the straightforward loop nest kept
// as the reference for tests, `parallel::` is the OpenMP version the library
// actually calls. All kernels accumulate into their output (`+=`); callers
// zero the destination when they want assignment.

#ifndef JOINTSYNTH_KERNELS_HPP_
#define JOINTSYNTH_KERNELS_HPP_

#include <cstdint>
#include <span>

namespace jsyn::kernels {

using idx = std::int64_t;

// C[m x n] += op(A) * op(B), op = transpose when the flag is set.
// A is stored [m x k] (or [k x m] if trans_a), B is [k x n] (or [n x k]).
struct GemmDims {
  idx m, n, k;
  bool trans_a = false;
  bool trans_b = false;
};

// Time-axis convolution over time-major sequences with "same" zero padding.
// x [t x cin], w [ksize x cin x cout], y [t x cout]. ksize must be odd.
struct Conv1dDims {
  idx t, cin, cout, ksize;
};

// Depthwise variant: x, y [t x c], w [ksize x c].
struct DepthwiseDims {
  idx t, c, ksize;
};

// 2D convolution over channel-major images with "same" zero padding.
// x [cin x h x w], wt [cout x cin x ksize x ksize], y [cout x h x w].
struct Conv2dDims {
  idx cin, cout, h, w, ksize;
};

namespace serial {
void gemm(const GemmDims& d, std::span<const double> a, std::span<const double> b, std::span<double> c);
void conv1d(const Conv1dDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y);
void conv1d_grad_input(const Conv1dDims& d, std::span<const double> gy, std::span<const double> w,
                       std::span<double> gx);
void conv1d_grad_weight(const Conv1dDims& d, std::span<const double> x, std::span<const double> gy,
                        std::span<double> gw);
void depthwise1d(const DepthwiseDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y);
void depthwise1d_grad_input(const DepthwiseDims& d, std::span<const double> gy, std::span<const double> w,
                            std::span<double> gx);
void depthwise1d_grad_weight(const DepthwiseDims& d, std::span<const double> x, std::span<const double> gy,
                             std::span<double> gw);
void conv2d(const Conv2dDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y);
void conv2d_grad_input(const Conv2dDims& d, std::span<const double> gy, std::span<const double> w,
                       std::span<double> gx);
void conv2d_grad_weight(const Conv2dDims& d, std::span<const double> x, std::span<const double> gy,
                        std::span<double> gw);
}  // namespace serial

namespace parallel {
void gemm(const GemmDims& d, std::span<const double> a, std::span<const double> b, std::span<double> c);
void conv1d(const Conv1dDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y);
void conv1d_grad_input(const Conv1dDims& d, std::span<const double> gy, std::span<const double> w,
                       std::span<double> gx);
void conv1d_grad_weight(const Conv1dDims& d, std::span<const double> x, std::span<const double> gy,
                        std::span<double> gw);
void depthwise1d(const DepthwiseDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y);
void depthwise1d_grad_input(const DepthwiseDims& d, std::span<const double> gy, std::span<const double> w,
                            std::span<double> gx);
void depthwise1d_grad_weight(const DepthwiseDims& d, std::span<const double> x, std::span<const double> gy,
                             std::span<double> gw);
void conv2d(const Conv2dDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y);
void conv2d_grad_input(const Conv2dDims& d, std::span<const double> gy, std::span<const double> w,
                       std::span<double> gx);
void conv2d_grad_weight(const Conv2dDims& d, std::span<const double> x, std::span<const double> gy,
                        std::span<double> gw);
}  // namespace parallel

}  // namespace jsyn::kernels

#endif  // JOINTSYNTH_KERNELS_HPP_
