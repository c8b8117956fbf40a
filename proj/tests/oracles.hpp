// Copyright 2026 The ehrablate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Deliberately naive reference implementations used to check the scoring
// and evaluation code against an independent route: textbook formulas,
// quadratic-time pair counting, central differences. Nothing here shares
// code with the library under test.

#ifndef EHRABLATE_TESTS_ORACLES_HPP_
#define EHRABLATE_TESTS_ORACLES_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace oracles {

// Pearson chi-squared over a 2x2 table of raw counts, expected counts from
// the margins, cells with expected count 0 skipped.
inline double chi2_direct(double case_with, double case_without,
                          double ctrl_with, double ctrl_without) {
  const double observed[2][2] = {{case_with, case_without},
                                 {ctrl_with, ctrl_without}};
  const double row[2] = {case_with + case_without, ctrl_with + ctrl_without};
  const double col[2] = {case_with + ctrl_with, case_without + ctrl_without};
  const double n = row[0] + row[1];
  if (n == 0) return 0.0;
  double stat = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double expected = row[i] * col[j] / n;
      if (expected == 0) continue;
      const double d = observed[i][j] - expected;
      stat += d * d / expected;
    }
  }
  return stat;
}

// One-way ANOVA F over two explicit groups of values, with the same
// degenerate-case conventions as the library: all values identical -> 0,
// zero within-group variance with distinct group means -> +infinity.
inline double anova_f_direct(std::span<const double> group1,
                             std::span<const double> group2) {
  const double n1 = static_cast<double>(group1.size());
  const double n2 = static_cast<double>(group2.size());
  double sum1 = 0, sum2 = 0;
  for (double v : group1) sum1 += v;
  for (double v : group2) sum2 += v;
  const double mean1 = sum1 / n1;
  const double mean2 = sum2 / n2;
  const double grand = (sum1 + sum2) / (n1 + n2);
  const double between = n1 * (mean1 - grand) * (mean1 - grand) +
                         n2 * (mean2 - grand) * (mean2 - grand);
  double within = 0;
  for (double v : group1) within += (v - mean1) * (v - mean1);
  for (double v : group2) within += (v - mean2) * (v - mean2);
  if (within == 0) {
    return between > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  const double df_between = 1.0;
  const double df_within = n1 + n2 - 2.0;
  return (between / df_between) / (within / df_within);
}

// Mann-Whitney AUC by comparing every case/control score pair directly,
// half credit for ties.
inline double auc_all_pairs(std::span<const double> scores,
                            std::span<const uint8_t> labels) {
  double wins = 0;
  uint64_t pairs = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

// Central-difference derivative of a scalar function of one coordinate.
inline double central_difference(const std::function<double(double)>& f,
                                 double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracles

#endif  // EHRABLATE_TESTS_ORACLES_HPP_
