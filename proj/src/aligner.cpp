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

#include "jointsynth/aligner.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace jsyn::align {

using idx = std::int64_t;

DurationAlignment DurationAlignment::from_durations(std::vector<idx> d) {
  DurationAlignment a;
  a.total = 0;
  for (idx v : d) a.total += v;
  a.durations = std::move(d);
  return a;
}

std::vector<idx> DurationAlignment::frame_to_symbol() const {
  std::vector<idx> map;
  map.reserve(static_cast<std::size_t>(total));
  for (std::size_t p = 0; p < durations.size(); ++p)
    for (idx k = 0; k < durations[p]; ++k) map.push_back(static_cast<idx>(p));
  return map;
}

void DurationAlignment::validate(idx expected_total) const {
  idx s = 0;
  for (std::size_t p = 0; p < durations.size(); ++p) {
    if (durations[p] < 1) throw Error("DurationAlignment: symbol " + std::to_string(p) + " has duration " + std::to_string(durations[p]));
    s += durations[p];
  }
  if (s != total) throw Error("DurationAlignment: total " + std::to_string(total) + " != sum " + std::to_string(s));
  if (expected_total >= 0 && s != expected_total) {
    throw Error("DurationAlignment: durations sum to " + std::to_string(s) + ", expected " + std::to_string(expected_total));
  }
}

Tensor gaussian_loglik(const Tensor& mu_tilde, const Tensor& y) {
  if (mu_tilde.dim() != 2 || y.dim() != 2) throw Error("gaussian_loglik: expected 2D inputs");
  if (mu_tilde.cols() != y.cols()) {
    throw Error("gaussian_loglik: channel mismatch " + shape_str(mu_tilde.shape) + " vs " + shape_str(y.shape));
  }
  const idx p = mu_tilde.rows(), t = y.rows(), c = y.cols();
  const double cst = static_cast<double>(c) * std::log(2.0 * std::numbers::pi);
  Tensor out({p, t});
  for (idx i = 0; i < p; ++i)
    for (idx j = 0; j < t; ++j) {
      double d2 = 0.0;
      for (idx k = 0; k < c; ++k) {
        const double d = y(j, k) - mu_tilde(i, k);
        d2 += d * d;
      }
      out(i, j) = -0.5 * (cst + d2);
    }
  return out;
}

AlignResult mas_search(const Tensor& loglik) {
  if (loglik.dim() != 2) throw Error("mas_search: expected [P x T]");
  const idx p_count = loglik.rows(), t_count = loglik.cols();
  if (p_count < 1) throw Error("mas_search: no symbols");
  if (p_count > t_count) {
    throw Error("mas_search: " + std::to_string(p_count) + " symbols cannot align to " + std::to_string(t_count) + " frames");
  }
  constexpr double kNeg = -std::numeric_limits<double>::infinity();
  Tensor q({p_count, t_count}, kNeg);
  q(0, 0) = loglik(0, 0);
  for (idx t = 1; t < t_count; ++t) {
    const idx pmax = std::min(t, p_count - 1);
    for (idx p = 0; p <= pmax; ++p) {
      const double stay = q(p, t - 1);
      const double move = p > 0 ? q(p - 1, t - 1) : kNeg;
      q(p, t) = loglik(p, t) + std::max(stay, move);
    }
  }

  AlignResult res;
  res.score = q(p_count - 1, t_count - 1);
  std::vector<idx> d(static_cast<std::size_t>(p_count), 0);
  idx p = p_count - 1;
  for (idx t = t_count - 1; t >= 1; --t) {
    ++d[p];
    if (p > 0 && (p == t || q(p - 1, t - 1) > q(p, t - 1))) --p;
  }
  ++d[p];
  res.alignment = DurationAlignment::from_durations(std::move(d));
#ifndef NDEBUG
  res.alignment.validate(t_count);
#endif
  return res;
}

std::vector<AlignResult> mas_search_batch(const std::vector<Tensor>& logliks) {
  std::vector<AlignResult> out(logliks.size());
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < logliks.size(); ++i) {
    try {
      out[i] = mas_search(logliks[i]);
    } catch (...) {
#pragma omp critical
      err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

double alignment_score(const Tensor& loglik, const DurationAlignment& d) {
  d.validate(loglik.cols());
  if (static_cast<idx>(d.durations.size()) != loglik.rows()) throw Error("alignment_score: symbol count mismatch");
  double s = 0.0;
  idx t = 0;
  for (std::size_t p = 0; p < d.durations.size(); ++p)
    for (idx k = 0; k < d.durations[p]; ++k) s += loglik(static_cast<idx>(p), t++);
  return s;
}

namespace {

double binomial(idx n, idx k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (idx i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// True when a beats b under "later symbols take as many frames as possible".
bool prefer(const std::vector<idx>& a, const std::vector<idx>& b) {
  for (std::size_t i = a.size(); i-- > 0;) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

}  // namespace

AlignResult brute_force_align(const Tensor& loglik) {
  if (loglik.dim() != 2) throw Error("brute_force_align: expected [P x T]");
  const idx p_count = loglik.rows(), t_count = loglik.cols();
  if (p_count < 1 || p_count > t_count) throw Error("brute_force_align: need 1 <= P <= T");
  if (binomial(t_count - 1, p_count - 1) > 1e6) throw Error("brute_force_align: instance too large to enumerate");

  AlignResult best;
  best.score = -std::numeric_limits<double>::infinity();
  std::vector<idx> d(static_cast<std::size_t>(p_count), 1);
  std::vector<idx> best_d;
  idx count = 0;
  // Enumerate compositions of T into P positive parts by recursion on the
  // first P-1 parts; the last part takes the remainder.
  auto visit = [&](auto&& self, idx pos, idx remaining) -> void {
    if (pos == p_count - 1) {
      d[pos] = remaining;
      ++count;
      double s = 0.0;
      idx t = 0;
      for (idx p = 0; p < p_count; ++p)
        for (idx k = 0; k < d[p]; ++k) s += loglik(p, t++);
      if (s > best.score || (s == best.score && prefer(d, best_d))) {
        best.score = s;
        best_d = d;
      }
      return;
    }
    const idx left_after = p_count - 1 - pos;
    for (idx v = 1; v <= remaining - left_after; ++v) {
      d[pos] = v;
      self(self, pos + 1, remaining - v);
    }
  };
  visit(visit, 0, t_count);
  best.alignment = DurationAlignment::from_durations(best_d);
  best.candidates = count;
  return best;
}

Tensor upsample_means(const Tensor& mu_tilde, const DurationAlignment& d) {
  if (mu_tilde.dim() != 2) throw Error("upsample_means: expected [P x C]");
  if (static_cast<idx>(d.durations.size()) != mu_tilde.rows()) {
    throw Error("upsample_means: " + std::to_string(d.durations.size()) + " durations for " + std::to_string(mu_tilde.rows()) + " symbols");
  }
  d.validate();
  const idx c = mu_tilde.cols();
  Tensor out({d.total, c});
  idx t = 0;
  for (std::size_t p = 0; p < d.durations.size(); ++p)
    for (idx k = 0; k < d.durations[p]; ++k, ++t) std::copy_n(mu_tilde.data.begin() + static_cast<idx>(p) * c, c, out.data.begin() + t * c);
  return out;
}

}  // namespace jsyn::align
