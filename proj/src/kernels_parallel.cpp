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

// OpenMP kernels. Loop orders keep the innermost loop contiguous in memory so
// it vectorizes; each parallel loop partitions the output so no two threads
// write the same element.

#include <algorithm>
#include <vector>

#include "jointsynth/kernels.hpp"

namespace jsyn::kernels::parallel {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr idx kParallelWork = 1 << 15;

}  // namespace

void gemm(const GemmDims& d, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  const idx m = d.m, n = d.n, k = d.k;
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
  const bool big = m * n * k > kParallelWork;

  if (d.trans_b) {
    // B stored [n x k]; materialize B^T so the inner loop runs over n.
    std::vector<double> bt(static_cast<std::size_t>(k * n));
    for (idx j = 0; j < n; ++j)
      for (idx p = 0; p < k; ++p) bt[p * n + j] = B[j * k + p];
    GemmDims nd = d;
    nd.trans_b = false;
    gemm(nd, a, bt, c);
    return;
  }

  if (!d.trans_a) {
#pragma omp parallel for schedule(static) if (big)
    for (idx i = 0; i < m; ++i) {
      double* ci = C + i * n;
      const double* ai = A + i * k;
      for (idx p = 0; p < k; ++p) {
        const double av = ai[p];
        const double* bp = B + p * n;
#pragma omp simd
        for (idx j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  } else {
    // A stored [k x m].
#pragma omp parallel for schedule(static) if (big)
    for (idx i = 0; i < m; ++i) {
      double* ci = C + i * n;
      for (idx p = 0; p < k; ++p) {
        const double av = A[p * m + i];
        const double* bp = B + p * n;
#pragma omp simd
        for (idx j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  }
}

void conv1d(const Conv1dDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y) {
  const idx half = d.ksize / 2;
  const bool big = d.t * d.cin * d.cout * d.ksize > kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (idx t = 0; t < d.t; ++t) {
    double* yt = y.data() + t * d.cout;
    for (idx k = 0; k < d.ksize; ++k) {
      const idx src = t + k - half;
      if (src < 0 || src >= d.t) continue;
      const double* xs = x.data() + src * d.cin;
      const double* wk = w.data() + k * d.cin * d.cout;
      for (idx ci = 0; ci < d.cin; ++ci) {
        const double xv = xs[ci];
        const double* wr = wk + ci * d.cout;
#pragma omp simd
        for (idx co = 0; co < d.cout; ++co) yt[co] += xv * wr[co];
      }
    }
  }
}

void conv1d_grad_input(const Conv1dDims& d, std::span<const double> gy, std::span<const double> w,
                       std::span<double> gx) {
  const idx half = d.ksize / 2;
  const bool big = d.t * d.cin * d.cout * d.ksize > kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (idx s = 0; s < d.t; ++s) {
    double* gxs = gx.data() + s * d.cin;
    for (idx k = 0; k < d.ksize; ++k) {
      const idx t = s - k + half;
      if (t < 0 || t >= d.t) continue;
      const double* gyt = gy.data() + t * d.cout;
      const double* wk = w.data() + k * d.cin * d.cout;
      for (idx ci = 0; ci < d.cin; ++ci) {
        const double* wr = wk + ci * d.cout;
        double acc = 0.0;
#pragma omp simd reduction(+ : acc)
        for (idx co = 0; co < d.cout; ++co) acc += gyt[co] * wr[co];
        gxs[ci] += acc;
      }
    }
  }
}

void conv1d_grad_weight(const Conv1dDims& d, std::span<const double> x, std::span<const double> gy,
                        std::span<double> gw) {
  const idx half = d.ksize / 2;
  const bool big = d.t * d.cin * d.cout * d.ksize > kParallelWork;
#pragma omp parallel for collapse(2) schedule(static) if (big)
  for (idx k = 0; k < d.ksize; ++k) {
    for (idx ci = 0; ci < d.cin; ++ci) {
      double* gwr = gw.data() + (k * d.cin + ci) * d.cout;
      const idx t0 = std::max<idx>(0, half - k);
      const idx t1 = std::min<idx>(d.t, d.t + half - k);
      for (idx t = t0; t < t1; ++t) {
        const double xv = x[(t + k - half) * d.cin + ci];
        const double* gyt = gy.data() + t * d.cout;
#pragma omp simd
        for (idx co = 0; co < d.cout; ++co) gwr[co] += xv * gyt[co];
      }
    }
  }
}

void depthwise1d(const DepthwiseDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y) {
  const idx half = d.ksize / 2;
  const bool big = d.t * d.c * d.ksize > kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (idx t = 0; t < d.t; ++t) {
    double* yt = y.data() + t * d.c;
    for (idx k = 0; k < d.ksize; ++k) {
      const idx src = t + k - half;
      if (src < 0 || src >= d.t) continue;
      const double* xs = x.data() + src * d.c;
      const double* wk = w.data() + k * d.c;
#pragma omp simd
      for (idx c = 0; c < d.c; ++c) yt[c] += xs[c] * wk[c];
    }
  }
}

void depthwise1d_grad_input(const DepthwiseDims& d, std::span<const double> gy, std::span<const double> w,
                            std::span<double> gx) {
  const idx half = d.ksize / 2;
  const bool big = d.t * d.c * d.ksize > kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (idx s = 0; s < d.t; ++s) {
    double* gxs = gx.data() + s * d.c;
    for (idx k = 0; k < d.ksize; ++k) {
      const idx t = s - k + half;
      if (t < 0 || t >= d.t) continue;
      const double* gyt = gy.data() + t * d.c;
      const double* wk = w.data() + k * d.c;
#pragma omp simd
      for (idx c = 0; c < d.c; ++c) gxs[c] += gyt[c] * wk[c];
    }
  }
}

void depthwise1d_grad_weight(const DepthwiseDims& d, std::span<const double> x, std::span<const double> gy,
                             std::span<double> gw) {
  const idx half = d.ksize / 2;
  const bool big = d.t * d.c * d.ksize > kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (idx k = 0; k < d.ksize; ++k) {
    double* gwk = gw.data() + k * d.c;
    const idx t0 = std::max<idx>(0, half - k);
    const idx t1 = std::min<idx>(d.t, d.t + half - k);
    for (idx t = t0; t < t1; ++t) {
      const double* xs = x.data() + (t + k - half) * d.c;
      const double* gyt = gy.data() + t * d.c;
#pragma omp simd
      for (idx c = 0; c < d.c; ++c) gwk[c] += xs[c] * gyt[c];
    }
  }
}

namespace {

// Valid output column range [j0, j1) for a horizontal tap offset.
inline void col_range(idx w, idx off, idx& j0, idx& j1) {
  j0 = std::max<idx>(0, -off);
  j1 = std::min<idx>(w, w - off);
}

}  // namespace

void conv2d(const Conv2dDims& d, std::span<const double> x, std::span<const double> wt, std::span<double> y) {
  const idx half = d.ksize / 2;
  const idx plane = d.h * d.w;
  const bool big = d.cout * d.cin * plane * d.ksize * d.ksize > kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (idx co = 0; co < d.cout; ++co) {
    double* yc = y.data() + co * plane;
    for (idx ci = 0; ci < d.cin; ++ci) {
      const double* xc = x.data() + ci * plane;
      for (idx ky = 0; ky < d.ksize; ++ky) {
        const idx oy = ky - half;
        const idx i0 = std::max<idx>(0, -oy), i1 = std::min<idx>(d.h, d.h - oy);
        for (idx kx = 0; kx < d.ksize; ++kx) {
          const idx ox = kx - half;
          const double wv = wt[((co * d.cin + ci) * d.ksize + ky) * d.ksize + kx];
          idx j0, j1;
          col_range(d.w, ox, j0, j1);
          for (idx i = i0; i < i1; ++i) {
            double* yr = yc + i * d.w;
            const double* xr = xc + (i + oy) * d.w + ox;
#pragma omp simd
            for (idx j = j0; j < j1; ++j) yr[j] += wv * xr[j];
          }
        }
      }
    }
  }
}

void conv2d_grad_input(const Conv2dDims& d, std::span<const double> gy, std::span<const double> wt,
                       std::span<double> gx) {
  const idx half = d.ksize / 2;
  const idx plane = d.h * d.w;
  const bool big = d.cout * d.cin * plane * d.ksize * d.ksize > kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (idx ci = 0; ci < d.cin; ++ci) {
    double* gxc = gx.data() + ci * plane;
    for (idx co = 0; co < d.cout; ++co) {
      const double* gyc = gy.data() + co * plane;
      for (idx ky = 0; ky < d.ksize; ++ky) {
        const idx oy = ky - half;
        const idx i0 = std::max<idx>(0, -oy), i1 = std::min<idx>(d.h, d.h - oy);
        for (idx kx = 0; kx < d.ksize; ++kx) {
          const idx ox = kx - half;
          const double wv = wt[((co * d.cin + ci) * d.ksize + ky) * d.ksize + kx];
          idx j0, j1;
          col_range(d.w, ox, j0, j1);
          for (idx i = i0; i < i1; ++i) {
            const double* gr = gyc + i * d.w;
            double* xr = gxc + (i + oy) * d.w + ox;
#pragma omp simd
            for (idx j = j0; j < j1; ++j) xr[j] += wv * gr[j];
          }
        }
      }
    }
  }
}

void conv2d_grad_weight(const Conv2dDims& d, std::span<const double> x, std::span<const double> gy,
                        std::span<double> gw) {
  const idx half = d.ksize / 2;
  const idx plane = d.h * d.w;
  const bool big = d.cout * d.cin * plane * d.ksize * d.ksize > kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (idx co = 0; co < d.cout; ++co) {
    const double* gyc = gy.data() + co * plane;
    for (idx ci = 0; ci < d.cin; ++ci) {
      const double* xc = x.data() + ci * plane;
      for (idx ky = 0; ky < d.ksize; ++ky) {
        const idx oy = ky - half;
        const idx i0 = std::max<idx>(0, -oy), i1 = std::min<idx>(d.h, d.h - oy);
        for (idx kx = 0; kx < d.ksize; ++kx) {
          const idx ox = kx - half;
          idx j0, j1;
          col_range(d.w, ox, j0, j1);
          double acc = 0.0;
          for (idx i = i0; i < i1; ++i) {
            const double* gr = gyc + i * d.w;
            const double* xr = xc + (i + oy) * d.w + ox;
#pragma omp simd reduction(+ : acc)
            for (idx j = j0; j < j1; ++j) acc += gr[j] * xr[j];
          }
          gw[((co * d.cin + ci) * d.ksize + ky) * d.ksize + kx] += acc;
        }
      }
    }
  }
}

}  // namespace jsyn::kernels::parallel
