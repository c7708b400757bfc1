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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "jointsynth/tensor.hpp"

namespace jsyn::eval {

Scale parse_scale(const std::string& s) {
  if (s == "mos") return Scale::kMos;
  if (s == "mismatch") return Scale::kMismatch;
  throw Error("unknown scale '" + s + "' (expected mos or mismatch)");
}

StimulusPlan build_plan(const std::vector<std::string>& segments, const std::vector<std::string>& conditions,
                        std::uint64_t seed, bool reserve_check) {
  if (segments.size() < 2) throw Error("build_plan: need at least 2 segments, got " + std::to_string(segments.size()));
  if (conditions.empty()) throw Error("build_plan: no conditions");
  if (std::set<std::string>(segments.begin(), segments.end()).size() != segments.size()) {
    throw Error("build_plan: duplicate segment ids");
  }
  StimulusPlan plan;
  plan.conditions = conditions;
  plan.segments = segments;
  if (reserve_check && segments.size() >= 3) {
    plan.check_segment = segments.back();
    plan.segments.pop_back();
  }
  const std::size_t n = plan.segments.size();
  std::mt19937_64 rng(seed);
  for (const auto& cond : conditions) {
    std::vector<std::size_t> perm(n);
    bool ok = false;
    while (!ok) {
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      ok = true;
      for (std::size_t i = 0; i < n; ++i) ok = ok && perm[i] != i;
    }
    for (std::size_t i = 0; i < n; ++i) {
      StimulusPair p;
      p.segment = plan.segments[i];
      p.condition = cond;
      p.motion_source = plan.segments[perm[i]];
      p.matched_video = cond + "/" + p.segment;
      p.mismatched_video = cond + "/" + p.motion_source;
      p.matched_on_left = (rng() & 1u) == 0;
      plan.pairs.push_back(std::move(p));
    }
  }
  return plan;
}

namespace {

std::string trim(std::string s) {
  auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && issp(static_cast<unsigned char>(s[i]))) ++i;
  s.erase(0, i);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool parse_bool(const std::string& s, std::size_t line) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (l == "1" || l == "true" || l == "yes") return true;
  if (l == "0" || l == "false" || l == "no" || l.empty()) return false;
  throw Error("read_responses: bad is_check value '" + s + "' on line " + std::to_string(line));
}

}  // namespace

std::vector<Response> read_responses(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("read_responses: cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw Error("read_responses: " + path.string() + " is empty");
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* req : {"participant", "segment", "condition", "label", "is_check", "expected"}) {
    if (!col.count(req)) throw Error("read_responses: missing column '" + std::string(req) + "' in " + path.string());
  }
  const bool has_side = col.count("matched_side") != 0;
  std::vector<Response> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw Error("read_responses: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                  " fields, expected " + std::to_string(header.size()));
    }
    Response r;
    r.participant = cells[col["participant"]];
    r.segment = cells[col["segment"]];
    r.condition = cells[col["condition"]];
    r.label = cells[col["label"]];
    r.is_check = parse_bool(cells[col["is_check"]], lineno);
    r.expected = cells[col["expected"]];
    if (has_side) r.matched_side = cells[col["matched_side"]];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<Response> filter_participants(const std::vector<Response>& rows, int max_failed) {
  std::map<std::string, int> failed;
  for (const auto& r : rows) {
    if (r.is_check && r.label != r.expected) ++failed[r.participant];
  }
  std::vector<Response> out;
  for (const auto& r : rows) {
    if (r.is_check) continue;
    auto it = failed.find(r.participant);
    if (it != failed.end() && it->second > max_failed) continue;
    out.push_back(r);
  }
  return out;
}

const std::vector<std::string>& mismatch_labels() {
  static const std::vector<std::string> labels = {"Left is much better", "Left is slightly better", "They are equal",
                                                  "Right is slightly better", "Right is much better"};
  return labels;
}

int response_value(const Response& r, Scale scale) {
  if (scale == Scale::kMos) {
    static const std::map<std::string, int> mos = {{"1", 1}, {"2", 2}, {"3", 3}, {"4", 4}, {"5", 5}};
    auto it = mos.find(r.label);
    if (it == mos.end()) throw Error("response label '" + r.label + "' is not on the 1-5 scale");
    return it->second;
  }
  const auto& labels = mismatch_labels();
  auto it = std::find(labels.begin(), labels.end(), r.label);
  if (it == labels.end()) throw Error("response label '" + r.label + "' is not a mismatch-test option");
  const int left_pref = 2 - static_cast<int>(it - labels.begin());
  if (r.matched_side == "L") return left_pref;
  if (r.matched_side == "R") return -left_pref;
  throw Error("mismatch response for participant " + r.participant + ", segment " + r.segment +
              " needs matched_side L or R");
}

double ci95_halfwidth(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n == 0) throw Error("ci95_halfwidth: no values");
  if (n == 1) return std::numeric_limits<double>::infinity();
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::quantile(dist, 0.975) * sd / std::sqrt(static_cast<double>(n));
}

SummaryRow summarize(const std::string& condition, const std::vector<double>& values) {
  if (values.empty()) throw Error("summarize: condition " + condition + " has no responses");
  SummaryRow r;
  r.condition = condition;
  r.n = static_cast<std::int64_t>(values.size());
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  r.ci95_halfwidth = ci95_halfwidth(values);
  return r;
}

namespace {

// Conditions in order of first appearance.
std::vector<std::string> condition_order(const std::vector<Response>& rows) {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (!r.is_check && std::find(out.begin(), out.end(), r.condition) == out.end()) out.push_back(r.condition);
  }
  return out;
}

std::vector<SummaryRow> summaries(const std::vector<Response>& rows, Scale scale) {
  std::vector<SummaryRow> out;
  for (const auto& c : condition_order(rows)) {
    std::vector<double> v;
    for (const auto& r : rows) {
      if (!r.is_check && r.condition == c) v.push_back(response_value(r, scale));
    }
    out.push_back(summarize(c, v));
  }
  return out;
}

double two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v, double m) {
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

TTest from_mean_se(double diff, double se, double df, bool paired) {
  TTest r;
  r.df = df;
  r.paired = paired;
  if (diff == 0.0) return r;
  if (se == 0.0) {
    r.t = diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.t = diff / se;
  r.p = two_sided_p(r.t, df);
  return r;
}

}  // namespace

std::vector<SummaryRow> mos_summary(const std::vector<Response>& rows) { return summaries(rows, Scale::kMos); }

std::vector<SummaryRow> mismatch_scores(const std::vector<Response>& rows) {
  return summaries(rows, Scale::kMismatch);
}

TTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error("paired_t_test: samples differ in length");
  if (a.size() < 2) throw Error("paired_t_test: need at least 2 pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double n = static_cast<double>(d.size());
  const double m = mean_of(d);
  return from_mean_se(m, std::sqrt(var_of(d, m) / n), n - 1.0, true);
}

TTest welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw Error("welch_t_test: need at least 2 values per sample");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean_of(a), mb = mean_of(b);
  const double va = var_of(a, ma) / na, vb = var_of(b, mb) / nb;
  const double se2 = va + vb;
  const double df = se2 > 0.0 ? se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0)) : na + nb - 2.0;
  return from_mean_se(ma - mb, std::sqrt(se2), df, false);
}

PairwiseMatrix pairwise_tests(const std::vector<Response>& rows, Scale scale, double alpha, bool holm) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("pairwise_tests: alpha must be in (0, 1)");
  PairwiseMatrix out;
  out.conditions = condition_order(rows);
  const std::size_t k = out.conditions.size();
  using Key = std::pair<std::string, std::string>;
  std::vector<std::map<Key, double>> by_key(k);
  std::vector<std::vector<double>> values(k);
  std::vector<bool> duplicate(k, false);
  for (const auto& r : rows) {
    if (r.is_check) continue;
    const auto c = static_cast<std::size_t>(
        std::find(out.conditions.begin(), out.conditions.end(), r.condition) - out.conditions.begin());
    const double v = response_value(r, scale);
    values[c].push_back(v);
    if (!by_key[c].emplace(Key{r.participant, r.segment}, v).second) duplicate[c] = true;
  }
  out.entries.assign(k, std::vector<PairwiseEntry>(k));
  std::vector<std::pair<std::size_t, std::size_t>> order;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      TTest t;
      bool balanced = !duplicate[i] && !duplicate[j] && by_key[i].size() == by_key[j].size();
      if (balanced) {
        for (const auto& [key, v] : by_key[i]) balanced = balanced && by_key[j].count(key);
      }
      if (balanced) {
        std::vector<double> a, b;
        for (const auto& [key, v] : by_key[i]) {
          a.push_back(v);
          b.push_back(by_key[j].at(key));
        }
        t = paired_t_test(a, b);
      } else {
        out.warnings.push_back("unbalanced pairing for " + out.conditions[i] + " vs " + out.conditions[j] +
                               "; using Welch's unpaired test");
        t = welch_t_test(values[i], values[j]);
      }
      out.entries[i][j].test = t;
      out.entries[j][i].test = TTest{-t.t, t.p, t.df, t.paired};
      order.emplace_back(i, j);
    }
  }
  const std::size_t m = order.size();
  if (holm) {
    std::sort(order.begin(), order.end(), [&](const auto& x, const auto& y) {
      return out.entries[x.first][x.second].test.p < out.entries[y.first][y.second].test.p;
    });
  }
  double running = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const auto [i, j] = order[r];
    double p = out.entries[i][j].test.p;
    if (holm) {
      running = std::max(running, std::min(1.0, static_cast<double>(m - r) * p));
      p = running;
    }
    for (auto* e : {&out.entries[i][j], &out.entries[j][i]}) {
      e->p_adjusted = p;
      e->significant = p < alpha;
    }
  }
  return out;
}

std::string format_score(const SummaryRow& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << r.mean << " ± ";
  if (std::isinf(r.ci95_halfwidth)) {
    os << "inf";
  } else {
    os << r.ci95_halfwidth;
  }
  return os.str();
}

std::string format_report(const std::vector<SummaryRow>& rows, const PairwiseMatrix& tests) {
  std::size_t w = 9;
  for (const auto& r : rows) w = std::max(w, r.condition.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(w)) << "Condition" << " | " << std::setw(14) << "Score"
     << " | n\n";
  os << std::string(w, '-') << "-+-" << std::string(14, '-') << "-+-----\n";
  for (const auto& r : rows) {
    // The plus-minus sign is two bytes in UTF-8 but one column wide.
    const std::string s = format_score(r);
    os << std::setw(static_cast<int>(w)) << r.condition << " | " << s << std::string(s.size() < 15 ? 15 - s.size() : 0, ' ')
       << " | " << r.n << '\n';
  }
  if (tests.conditions.size() > 1) {
    os << "\nPairwise tests (* = significant)\n" << std::setw(static_cast<int>(w)) << "";
    for (const auto& c : tests.conditions) os << ' ' << std::setw(static_cast<int>(w)) << c;
    os << '\n';
    for (std::size_t i = 0; i < tests.conditions.size(); ++i) {
      os << std::setw(static_cast<int>(w)) << tests.conditions[i];
      for (std::size_t j = 0; j < tests.conditions.size(); ++j) {
        std::string cell = "-";
        if (i != j) {
          std::ostringstream c;
          c << std::setprecision(3) << "p=" << tests.entries[i][j].p_adjusted << (tests.entries[i][j].significant ? "*" : "");
          cell = c.str();
        }
        os << ' ' << std::setw(static_cast<int>(w)) << cell;
      }
      os << '\n';
    }
    for (const auto& wmsg : tests.warnings) os << "warning: " << wmsg << '\n';
  }
  return os.str();
}

}  // namespace jsyn::eval
