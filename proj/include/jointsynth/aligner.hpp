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

// Monotonic alignment search between per-symbol means and output frames.

#ifndef JOINTSYNTH_ALIGNER_HPP_
#define JOINTSYNTH_ALIGNER_HPP_

#include <cstdint>
#include <vector>

#include "jointsynth/tensor.hpp"

namespace jsyn::align {

// Durations d_p >= 1 per symbol. `total` is their sum, i.e. the frame count.
struct DurationAlignment {
  std::vector<std::int64_t> durations;
  std::int64_t total = 0;

  static DurationAlignment from_durations(std::vector<std::int64_t> d);
  // Frame -> symbol index (monotone, surjective onto [0, P)).
  std::vector<std::int64_t> frame_to_symbol() const;
  // Throws Error unless every d_p >= 1 and the sum matches `expected_total`
  // (pass -1 to skip the total check).
  void validate(std::int64_t expected_total = -1) const;
};

struct AlignResult {
  DurationAlignment alignment;
  double score = 0.0;
  std::int64_t candidates = 0;  // only filled by brute_force_align
};

// L[p, t] = -1/2 (C log 2pi + ||y_t - mu_p||^2); mu_tilde [P x C], y [T x C].
Tensor gaussian_loglik(const Tensor& mu_tilde, const Tensor& y);

// Viterbi-style DP over monotone surjective frame->symbol maps. Ties prefer
// staying on the current symbol during backtracking.
AlignResult mas_search(const Tensor& loglik);

// One DP per item, run in parallel.
std::vector<AlignResult> mas_search_batch(const std::vector<Tensor>& logliks);

// Exhaustive search over all C(T-1, P-1) duration vectors with the same
// tie-break as mas_search. Refuses instances with more than 10^6 candidates.
AlignResult brute_force_align(const Tensor& loglik);

// Sum over frames of L[a(t), t], accumulated in time order.
double alignment_score(const Tensor& loglik, const DurationAlignment& d);

// Repeats row p of mu_tilde d_p times.
Tensor upsample_means(const Tensor& mu_tilde, const DurationAlignment& d);

}  // namespace jsyn::align

#endif  // JOINTSYNTH_ALIGNER_HPP_
