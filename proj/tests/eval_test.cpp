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


#include "jointsynth/eval.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "gtest/gtest.h"
#include "stats_oracle.hpp"

namespace jsyn::eval {
namespace {

std::vector<std::string> names(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

Response mos(const std::string& who, const std::string& seg, const std::string& cond, int v) {
  return Response{who, seg, cond, std::to_string(v), false, "", ""};
}

std::vector<Response> mos_block(const std::string& cond, int fours, int fives) {
  std::vector<Response> rows;
  for (int i = 0; i < fours + fives; ++i) rows.push_back(mos("p" + std::to_string(i / 15), "s" + std::to_string(i % 15), cond, i < fours ? 4 : 5));
  return rows;
}

TEST(Plan, PaperShape) {
  // 15 excerpted segments; one held out for attention checks.
  const auto plan = build_plan(names("seg", 15), {"NAT", "D-TTSG", "G-TTS+M", "TTSG"}, 1);
  ASSERT_TRUE(plan.check_segment.has_value());
  EXPECT_EQ(*plan.check_segment, "seg14");
  EXPECT_EQ(plan.segments.size(), 14u);
  EXPECT_EQ(plan.pairs.size(), 14u * 4u);
  for (const auto& c : plan.conditions) {
    std::set<std::string> sources;
    for (const auto& p : plan.pairs) {
      if (p.condition != c) continue;
      EXPECT_NE(p.motion_source, p.segment);
      EXPECT_NE(p.motion_source, *plan.check_segment);
      EXPECT_EQ(p.matched_video, c + "/" + p.segment);
      EXPECT_EQ(p.mismatched_video, c + "/" + p.motion_source);
      sources.insert(p.motion_source);
    }
    EXPECT_EQ(sources.size(), 14u);  // a permutation of the segments
  }
}

TEST(Plan, TwoSegmentsSwap) {
  const auto plan = build_plan({"a", "b"}, {"X"}, 9);
  EXPECT_FALSE(plan.check_segment.has_value());
  ASSERT_EQ(plan.pairs.size(), 2u);
  EXPECT_EQ(plan.pairs[0].motion_source, "b");
  EXPECT_EQ(plan.pairs[1].motion_source, "a");
}

TEST(Plan, SeedsOnlyChangeMismatchSources) {
  const auto a = build_plan(names("s", 8), {"A", "B"}, 3), b = build_plan(names("s", 8), {"A", "B"}, 3);
  const auto c = build_plan(names("s", 8), {"A", "B"}, 4);
  bool differs = false;
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    EXPECT_EQ(a.pairs[i].motion_source, b.pairs[i].motion_source);
    EXPECT_EQ(a.pairs[i].matched_on_left, b.pairs[i].matched_on_left);
    EXPECT_EQ(a.pairs[i].matched_video, c.pairs[i].matched_video);
    differs |= a.pairs[i].motion_source != c.pairs[i].motion_source;
  }
  EXPECT_TRUE(differs);
}

TEST(Plan, Errors) {
  EXPECT_THROW(build_plan({"a"}, {"X"}, 1), Error);
  EXPECT_THROW(build_plan({"a", "b"}, {}, 1), Error);
  EXPECT_THROW(build_plan({"a", "a", "b"}, {"X"}, 1), Error);
}

TEST(Filter, AttentionCheckRule) {
  std::vector<Response> rows;
  auto check = [](const std::string& who, bool pass) { return Response{who, "chk", "X", pass ? "5" : "1", true, "5", ""}; };
  for (const std::string who : {"ok", "one", "two"}) rows.push_back(mos(who, "s0", "X", 3));
  for (int i = 0; i < 4; ++i) {
    rows.push_back(check("ok", true));
    rows.push_back(check("one", i != 0));
    rows.push_back(check("two", i >= 2));
  }
  const auto kept = filter_participants(rows, 1);
  std::set<std::string> who;
  for (const auto& r : kept) {
    EXPECT_FALSE(r.is_check);
    who.insert(r.participant);
  }
  EXPECT_EQ(who, (std::set<std::string>{"ok", "one"}));
  EXPECT_EQ(filter_participants(rows, 2).size(), 3u);
}

TEST(Filter, AllPassingIsIdentityOnAnalysisRows) {
  const auto rows = mos_block("A", 10, 5);
  EXPECT_EQ(filter_participants(rows).size(), rows.size());
}

TEST(Mos, ClosedFormCase) {
  const auto rows = mos_block("NAT", 225, 225);
  const auto s = mos_summary(rows);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].n, 450);
  EXPECT_DOUBLE_EQ(s[0].mean, 4.5);
  const double sd = std::sqrt(450.0 * 0.25 / 449.0);
  EXPECT_NEAR(sd, 0.5006, 5e-5);
  const double want = testing::student_t_quantile(0.975, 449.0) * sd / std::sqrt(450.0);
  EXPECT_NEAR(s[0].ci95_halfwidth, want, 1e-9);
  EXPECT_NEAR(s[0].ci95_halfwidth, 0.046, 0.002);
  EXPECT_EQ(format_score(s[0]), "4.50 ± 0.05");
}

TEST(Mos, ZeroVarianceAndSmallSamples) {
  const auto s = mos_summary(mos_block("A", 0, 30));
  EXPECT_EQ(s[0].mean, 5.0);
  EXPECT_EQ(s[0].ci95_halfwidth, 0.0);
  EXPECT_EQ(format_score(s[0]), "5.00 ± 0.00");
  EXPECT_TRUE(std::isinf(ci95_halfwidth({3.0})));
  EXPECT_THROW(ci95_halfwidth({}), Error);
  // Small-n quantile against the integrated density.
  const std::vector<double> v = {1, 2, 4, 4, 5};
  const double mean = 3.2, ss = 4.84 + 1.44 + 0.64 + 0.64 + 3.24;
  EXPECT_NEAR(ci95_halfwidth(v), testing::student_t_quantile(0.975, 4.0) * std::sqrt(ss / 4.0) / std::sqrt(5.0), 1e-9);
  EXPECT_NEAR(summarize("x", v).mean, mean, 1e-15);
}

TEST(Mos, OrderInvarianceAndDuplicationScaling) {
  auto rows = mos_block("A", 17, 11);
  rows.push_back(mos("q", "s", "A", 2));
  const auto base = mos_summary(rows)[0];
  std::reverse(rows.begin(), rows.end());
  EXPECT_NEAR(mos_summary(rows)[0].mean, base.mean, 1e-15);
  EXPECT_NEAR(mos_summary(rows)[0].ci95_halfwidth, base.ci95_halfwidth, 1e-15);
  // Four-fold duplication: halfwidth shrinks by about 1/2.
  std::vector<Response> dup;
  for (int k = 0; k < 4; ++k) dup.insert(dup.end(), rows.begin(), rows.end());
  const auto d = mos_summary(dup)[0];
  EXPECT_NEAR(d.mean, base.mean, 1e-12);
  EXPECT_NEAR(d.ci95_halfwidth / base.ci95_halfwidth, 0.5, 0.05);
}

TEST(Mos, LabelsOutsideTheScaleAreErrors) {
  std::vector<Response> rows = {mos("p", "s", "A", 6)};
  EXPECT_THROW(mos_summary(rows), Error);
}

TEST(Mismatch, LabelsAndValues) {
  EXPECT_EQ(mismatch_labels(), (std::vector<std::string>{"Left is much better", "Left is slightly better", "They are equal",
                                                         "Right is slightly better", "Right is much better"}));
  const std::vector<int> left_values = {2, 1, 0, -1, -2};
  for (std::size_t i = 0; i < 5; ++i) {
    Response r{"p", "s", "A", mismatch_labels()[i], false, "", "L"};
    EXPECT_EQ(response_value(r, Scale::kMismatch), left_values[i]);
    r.matched_side = "R";
    EXPECT_EQ(response_value(r, Scale::kMismatch), -left_values[i]);
  }
  Response no_side{"p", "s", "A", "They are equal", false, "", ""};
  EXPECT_THROW(response_value(no_side, Scale::kMismatch), Error);
}

TEST(Mismatch, ExtremesAndAntisymmetry) {
  std::vector<Response> equal, matched_best, rows;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 40; ++i) {
    const std::string seg = "s" + std::to_string(i);
    equal.push_back(Response{"p", seg, "A", "They are equal", false, "", i % 2 ? "L" : "R"});
    const bool left = i % 3 == 0;
    matched_best.push_back(Response{"p", seg, "A", left ? "Left is much better" : "Right is much better", false, "", left ? "L" : "R"});
    rows.push_back(Response{"p", seg, i % 2 ? "A" : "B", mismatch_labels()[rng() % 5], false, "", rng() % 2 ? "L" : "R"});
  }
  EXPECT_EQ(format_score(mismatch_scores(equal)[0]), "0.00 ± 0.00");
  EXPECT_EQ(mismatch_scores(matched_best)[0].mean, 2.0);
  EXPECT_EQ(mismatch_scores(matched_best)[0].ci95_halfwidth, 0.0);

  // Mirror every presentation: swap the label's side and the matched side.
  auto flipped = rows;
  for (auto& r : flipped) r.matched_side = r.matched_side == "L" ? "R" : "L";
  for (std::size_t i = 0; i < rows.size(); ++i)
    EXPECT_EQ(response_value(flipped[i], Scale::kMismatch), -response_value(rows[i], Scale::kMismatch));
  const auto a = mismatch_scores(rows), b = mismatch_scores(flipped);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(b[i].mean, -a[i].mean);
    EXPECT_EQ(b[i].ci95_halfwidth, a[i].ci95_halfwidth);
  }
}

TEST(TTests, IdenticalVectors) {
  const std::vector<double> a = {1, 2, 3, 4};
  const auto t = paired_t_test(a, a);
  EXPECT_EQ(t.t, 0.0);
  EXPECT_EQ(t.p, 1.0);
}

TEST(TTests, ConstantShift) {
  const std::vector<double> a = {2, 3, 4, 5}, b = {1, 2, 3, 4};
  const auto t = paired_t_test(a, b);
  EXPECT_TRUE(std::isinf(t.t));
  EXPECT_GT(t.t, 0.0);
  EXPECT_EQ(t.p, 0.0);
}

TEST(TTests, OneDifferingResponse) {
  // d has a single 1 among 450: mean 1/n, sample variance 1/n, so t = 1.
  std::vector<double> a(450, 4.0), b(450, 4.0);
  a[17] = 5.0;
  const auto t = paired_t_test(a, b);
  EXPECT_NEAR(t.t, 1.0, 1e-9);
  EXPECT_EQ(t.df, 449.0);
  EXPECT_NEAR(t.p, 2.0 * (1.0 - testing::student_t_cdf(1.0, 449.0)), 1e-9);
  EXPECT_GT(t.p, 0.05);
}

TEST(TTests, WelchMatchesFormula) {
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {2, 4, 6};
  const double va = 2.5, vb = 4.0, se2 = va / 5 + vb / 3;
  const double t_want = (3.0 - 4.0) / std::sqrt(se2);
  const double df_want = se2 * se2 / ((va / 5) * (va / 5) / 4 + (vb / 3) * (vb / 3) / 2);
  const auto t = welch_t_test(a, b);
  EXPECT_FALSE(t.paired);
  EXPECT_NEAR(t.t, t_want, 1e-12);
  EXPECT_NEAR(t.df, df_want, 1e-12);
  EXPECT_NEAR(t.p, 2.0 * (1.0 - testing::student_t_cdf(std::fabs(t_want), df_want)), 1e-7);
  EXPECT_THROW(paired_t_test(a, b), Error);
}

TEST(Pairwise, PairedAndFlags) {
  std::vector<Response> rows;
  for (int p = 0; p < 5; ++p)
    for (int s = 0; s < 6; ++s) {
      const std::string who = "p" + std::to_string(p), seg = "s" + std::to_string(s);
      const int base = 1 + (p + s) % 3;
      rows.push_back(mos(who, seg, "A", base + 2));
      rows.push_back(mos(who, seg, "B", base));
      rows.push_back(mos(who, seg, "C", base));
    }
  const auto m = pairwise_tests(rows, Scale::kMos);
  ASSERT_EQ(m.conditions, (std::vector<std::string>{"A", "B", "C"}));
  EXPECT_TRUE(m.warnings.empty());
  EXPECT_TRUE(m.entries[0][1].test.paired);
  EXPECT_TRUE(m.entries[0][1].significant);
  EXPECT_TRUE(m.entries[1][0].significant);
  EXPECT_FALSE(m.entries[1][2].significant);
  EXPECT_EQ(m.entries[1][2].test.p, 1.0);
  const std::string report = format_report(mos_summary(rows), m);
  EXPECT_NE(report.find("p=0*"), std::string::npos);
}

TEST(Pairwise, UnbalancedFallsBackToWelch) {
  auto rows = mos_block("A", 10, 10);
  auto b = mos_block("B", 5, 10);
  rows.insert(rows.end(), b.begin(), b.end());
  const auto m = pairwise_tests(rows, Scale::kMos);
  ASSERT_EQ(m.warnings.size(), 1u);
  EXPECT_FALSE(m.entries[0][1].test.paired);
}

TEST(Pairwise, HolmAdjustment) {
  // Three conditions with raw p-values p1 < p2 < p3: Holm multiplies by 3, 2, 1
  // and enforces monotonicity.
  std::vector<Response> rows;
  std::mt19937_64 rng(11);
  for (int p = 0; p < 30; ++p) {
    const std::string who = "p" + std::to_string(p);
    const int r = static_cast<int>(rng() % 3);
    rows.push_back(mos(who, "s", "A", 2 + r));
    rows.push_back(mos(who, "s", "B", 2 + static_cast<int>(rng() % 3)));
    rows.push_back(mos(who, "s", "C", 1 + r + static_cast<int>(rng() % 2)));
  }
  const auto raw = pairwise_tests(rows, Scale::kMos, 0.05, false);
  const auto adj = pairwise_tests(rows, Scale::kMos, 0.05, true);
  std::vector<std::pair<double, std::pair<int, int>>> ps;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      EXPECT_EQ(raw.entries[i][j].p_adjusted, raw.entries[i][j].test.p);
      ps.push_back({raw.entries[i][j].test.p, {i, j}});
    }
  std::sort(ps.begin(), ps.end());
  double running = 0.0;
  for (std::size_t r = 0; r < ps.size(); ++r) {
    running = std::max(running, std::min(1.0, (3.0 - r) * ps[r].first));
    EXPECT_NEAR(adj.entries[ps[r].second.first][ps[r].second.second].p_adjusted, running, 1e-15);
  }
  EXPECT_THROW(pairwise_tests(rows, Scale::kMos, 0.0), Error);
}

TEST(Responses, CsvReading) {
  const auto path = std::filesystem::temp_directory_path() / "jsyn_responses.csv";
  {
    std::ofstream os(path);
    os << "participant,segment,condition,label,is_check,expected,matched_side\n"
          "p1,s1,A,\"Left is much better\",0,,L\n"
          "p1,chk,A,They are equal,1,They are equal,R\n";
  }
  const auto rows = read_responses(path);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].label, "Left is much better");
  EXPECT_EQ(rows[0].matched_side, "L");
  EXPECT_TRUE(rows[1].is_check);
  {
    std::ofstream os(path);
    os << "participant,segment,label\np,s,3\n";
  }
  EXPECT_THROW(read_responses(path), Error);
  {
    std::ofstream os(path);
    os << "participant,segment,condition,label,is_check,expected\np,s,A,3,0\n";
  }
  EXPECT_THROW(read_responses(path), Error);
  EXPECT_EQ(parse_scale("mos"), Scale::kMos);
  EXPECT_EQ(parse_scale("mismatch"), Scale::kMismatch);
  EXPECT_THROW(parse_scale("abx"), Error);
}

}  // namespace
}  // namespace jsyn::eval
