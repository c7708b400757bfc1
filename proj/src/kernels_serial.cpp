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

// Reference kernels: direct transcription of the defining sums, no blocking,
// no threading. Used by the kernel tests and the benchmark baseline.

#include "jointsynth/kernels.hpp"

namespace jsyn::kernels::serial {

void gemm(const GemmDims& d, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  for (idx i = 0; i < d.m; ++i) {
    for (idx j = 0; j < d.n; ++j) {
      double s = 0.0;
      for (idx p = 0; p < d.k; ++p) {
        double av = d.trans_a ? a[p * d.m + i] : a[i * d.k + p];
        double bv = d.trans_b ? b[j * d.k + p] : b[p * d.n + j];
        s += av * bv;
      }
      c[i * d.n + j] += s;
    }
  }
}

void conv1d(const Conv1dDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y) {
  const idx half = d.ksize / 2;
  for (idx t = 0; t < d.t; ++t) {
    for (idx co = 0; co < d.cout; ++co) {
      double s = 0.0;
      for (idx k = 0; k < d.ksize; ++k) {
        idx src = t + k - half;
        if (src < 0 || src >= d.t) continue;
        for (idx ci = 0; ci < d.cin; ++ci) s += x[src * d.cin + ci] * w[(k * d.cin + ci) * d.cout + co];
      }
      y[t * d.cout + co] += s;
    }
  }
}

void conv1d_grad_input(const Conv1dDims& d, std::span<const double> gy, std::span<const double> w,
                       std::span<double> gx) {
  const idx half = d.ksize / 2;
  for (idx t = 0; t < d.t; ++t) {
    for (idx k = 0; k < d.ksize; ++k) {
      idx src = t + k - half;
      if (src < 0 || src >= d.t) continue;
      for (idx ci = 0; ci < d.cin; ++ci) {
        for (idx co = 0; co < d.cout; ++co) gx[src * d.cin + ci] += gy[t * d.cout + co] * w[(k * d.cin + ci) * d.cout + co];
      }
    }
  }
}

void conv1d_grad_weight(const Conv1dDims& d, std::span<const double> x, std::span<const double> gy,
                        std::span<double> gw) {
  const idx half = d.ksize / 2;
  for (idx t = 0; t < d.t; ++t) {
    for (idx k = 0; k < d.ksize; ++k) {
      idx src = t + k - half;
      if (src < 0 || src >= d.t) continue;
      for (idx ci = 0; ci < d.cin; ++ci) {
        for (idx co = 0; co < d.cout; ++co) gw[(k * d.cin + ci) * d.cout + co] += x[src * d.cin + ci] * gy[t * d.cout + co];
      }
    }
  }
}

void depthwise1d(const DepthwiseDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y) {
  const idx half = d.ksize / 2;
  for (idx t = 0; t < d.t; ++t) {
    for (idx c = 0; c < d.c; ++c) {
      double s = 0.0;
      for (idx k = 0; k < d.ksize; ++k) {
        idx src = t + k - half;
        if (src >= 0 && src < d.t) s += x[src * d.c + c] * w[k * d.c + c];
      }
      y[t * d.c + c] += s;
    }
  }
}

void depthwise1d_grad_input(const DepthwiseDims& d, std::span<const double> gy, std::span<const double> w,
                            std::span<double> gx) {
  const idx half = d.ksize / 2;
  for (idx t = 0; t < d.t; ++t) {
    for (idx k = 0; k < d.ksize; ++k) {
      idx src = t + k - half;
      if (src < 0 || src >= d.t) continue;
      for (idx c = 0; c < d.c; ++c) gx[src * d.c + c] += gy[t * d.c + c] * w[k * d.c + c];
    }
  }
}

void depthwise1d_grad_weight(const DepthwiseDims& d, std::span<const double> x, std::span<const double> gy,
                             std::span<double> gw) {
  const idx half = d.ksize / 2;
  for (idx t = 0; t < d.t; ++t) {
    for (idx k = 0; k < d.ksize; ++k) {
      idx src = t + k - half;
      if (src < 0 || src >= d.t) continue;
      for (idx c = 0; c < d.c; ++c) gw[k * d.c + c] += x[src * d.c + c] * gy[t * d.c + c];
    }
  }
}

void conv2d(const Conv2dDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y) {
  const idx half = d.ksize / 2;
  for (idx co = 0; co < d.cout; ++co) {
    for (idx i = 0; i < d.h; ++i) {
      for (idx j = 0; j < d.w; ++j) {
        double s = 0.0;
        for (idx ci = 0; ci < d.cin; ++ci) {
          for (idx ky = 0; ky < d.ksize; ++ky) {
            idx si = i + ky - half;
            if (si < 0 || si >= d.h) continue;
            for (idx kx = 0; kx < d.ksize; ++kx) {
              idx sj = j + kx - half;
              if (sj < 0 || sj >= d.w) continue;
              s += w[((co * d.cin + ci) * d.ksize + ky) * d.ksize + kx] * x[(ci * d.h + si) * d.w + sj];
            }
          }
        }
        y[(co * d.h + i) * d.w + j] += s;
      }
    }
  }
}

void conv2d_grad_input(const Conv2dDims& d, std::span<const double> gy, std::span<const double> w,
                       std::span<double> gx) {
  const idx half = d.ksize / 2;
  for (idx co = 0; co < d.cout; ++co) {
    for (idx i = 0; i < d.h; ++i) {
      for (idx j = 0; j < d.w; ++j) {
        double g = gy[(co * d.h + i) * d.w + j];
        for (idx ci = 0; ci < d.cin; ++ci) {
          for (idx ky = 0; ky < d.ksize; ++ky) {
            idx si = i + ky - half;
            if (si < 0 || si >= d.h) continue;
            for (idx kx = 0; kx < d.ksize; ++kx) {
              idx sj = j + kx - half;
              if (sj < 0 || sj >= d.w) continue;
              gx[(ci * d.h + si) * d.w + sj] += g * w[((co * d.cin + ci) * d.ksize + ky) * d.ksize + kx];
            }
          }
        }
      }
    }
  }
}

void conv2d_grad_weight(const Conv2dDims& d, std::span<const double> x, std::span<const double> gy,
                        std::span<double> gw) {
  const idx half = d.ksize / 2;
  for (idx co = 0; co < d.cout; ++co) {
    for (idx i = 0; i < d.h; ++i) {
      for (idx j = 0; j < d.w; ++j) {
        double g = gy[(co * d.h + i) * d.w + j];
        for (idx ci = 0; ci < d.cin; ++ci) {
          for (idx ky = 0; ky < d.ksize; ++ky) {
            idx si = i + ky - half;
            if (si < 0 || si >= d.h) continue;
            for (idx kx = 0; kx < d.ksize; ++kx) {
              idx sj = j + kx - half;
              if (sj < 0 || sj >= d.w) continue;
              gw[((co * d.cin + ci) * d.ksize + ky) * d.ksize + kx] += g * x[(ci * d.h + si) * d.w + sj];
            }
          }
        }
      }
    }
  }
}

}  // namespace jsyn::kernels::serial
