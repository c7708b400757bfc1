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


// Listening/viewing-test tooling: stimulus pairing for the mismatch test,
// attention-check filtering, mean opinion scores with t-based confidence
// intervals, and pairwise t-tests.

#ifndef JOINTSYNTH_EVAL_HPP_
#define JOINTSYNTH_EVAL_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jointsynth/tensor.hpp"  // Error

namespace jsyn::eval {

enum class Scale { kMos, kMismatch };
Scale parse_scale(const std::string& s);

struct StimulusPair {
  std::string segment;
  std::string condition;
  std::string matched_video;     // condition/segment
  std::string mismatched_video;  // condition/other segment, shown with this segment's audio
  std::string motion_source;     // the other segment
  bool matched_on_left = true;
};

struct StimulusPlan {
  std::vector<std::string> segments;  // analysed segments
  std::vector<std::string> conditions;
  std::optional<std::string> check_segment;
  std::vector<StimulusPair> pairs;
};

// Per condition, a random derangement of the analysed segments provides the
// mismatch sources. With reserve_check and at least 3 segments, the last
// segment is held out for attention checks regardless of seed.
StimulusPlan build_plan(const std::vector<std::string>& segments, const std::vector<std::string>& conditions,
                        std::uint64_t seed, bool reserve_check = true);

struct Response {
  std::string participant;
  std::string segment;
  std::string condition;
  std::string label;
  bool is_check = false;
  std::string expected;
  std::string matched_side;  // "L" or "R"; mismatch responses only
};

// Header-driven CSV: participant,segment,condition,label,is_check,expected and
// an optional matched_side column.
std::vector<Response> read_responses(const std::filesystem::path& path);

// Drops every row of participants failing more than max_failed checks, then
// drops all check rows.
std::vector<Response> filter_participants(const std::vector<Response>& rows, int max_failed = 1);

// The five mismatch-test response options, left-most first.
const std::vector<std::string>& mismatch_labels();

// Integer value of one (non-check) response on the active scale. Mismatch
// values are positive when the matched video was preferred.
int response_value(const Response& r, Scale scale);

struct SummaryRow {
  std::string condition;
  double mean = 0.0;
  double ci95_halfwidth = 0.0;
  std::int64_t n = 0;
};

// t_{0.975, n-1} * sd / sqrt(n) with the sample standard deviation; infinite
// for n = 1.
double ci95_halfwidth(const std::vector<double>& values);
SummaryRow summarize(const std::string& condition, const std::vector<double>& values);

std::vector<SummaryRow> mos_summary(const std::vector<Response>& rows);
std::vector<SummaryRow> mismatch_scores(const std::vector<Response>& rows);

struct TTest {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
  bool paired = true;
};

// Two-sided tests. Zero differences give t = 0, p = 1; a constant nonzero
// difference gives |t| = inf, p = 0.
TTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b);
TTest welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

struct PairwiseEntry {
  TTest test;
  double p_adjusted = 1.0;
  bool significant = false;
};

struct PairwiseMatrix {
  std::vector<std::string> conditions;
  std::vector<std::vector<PairwiseEntry>> entries;  // symmetric, diagonal unused
  std::vector<std::string> warnings;
};

// Responses are paired on (participant, segment). Pairs with unequal keys
// fall back to Welch's test and record a warning.
PairwiseMatrix pairwise_tests(const std::vector<Response>& rows, Scale scale, double alpha = 0.05,
                              bool holm = false);

// "4.50 ± 0.05"
std::string format_score(const SummaryRow& r);
std::string format_report(const std::vector<SummaryRow>& rows, const PairwiseMatrix& tests);

}  // namespace jsyn::eval

#endif  // JOINTSYNTH_EVAL_HPP_
