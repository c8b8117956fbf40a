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

#include "ehrablate/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ehrablate {

double chi2_score(const Contingency2x2& t) {
  const double n = static_cast<double>(t.total());
  if (n == 0.0) return 0.0;
  const double row[2] = {static_cast<double>(t.case_with + t.case_without),
                         static_cast<double>(t.ctrl_with + t.ctrl_without)};
  const double col[2] = {static_cast<double>(t.case_with + t.ctrl_with),
                         static_cast<double>(t.case_without + t.ctrl_without)};
  const double observed[2][2] = {
      {static_cast<double>(t.case_with), static_cast<double>(t.case_without)},
      {static_cast<double>(t.ctrl_with), static_cast<double>(t.ctrl_without)}};
  double stat = 0.0;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      const double expected = row[r] * col[c] / n;
      if (expected == 0.0) continue;
      const double d = observed[r][c] - expected;
      stat += d * d / expected;
    }
  }
  return stat;
}

double anova_f_from_counts(uint64_t n_case, uint64_t case_with, uint64_t n_ctrl,
                           uint64_t ctrl_with) {
  if (n_case == 0 || n_ctrl == 0) {
    fail("scoring: F statistic requires both label groups to be non-empty");
  }
  if (case_with > n_case || ctrl_with > n_ctrl) {
    fail("scoring: ones-count exceeds group size");
  }
  const double nc = static_cast<double>(n_case);
  const double nk = static_cast<double>(n_ctrl);
  const double n = nc + nk;
  const double mean_case = static_cast<double>(case_with) / nc;
  const double mean_ctrl = static_cast<double>(ctrl_with) / nk;
  const double mean_all = static_cast<double>(case_with + ctrl_with) / n;

  const double between = nc * (mean_case - mean_all) * (mean_case - mean_all) +
                         nk * (mean_ctrl - mean_all) * (mean_ctrl - mean_all);
  // Sum of squared deviations for a 0/1 column with m ones out of g rows:
  // m (1-mu)^2 + (g-m) mu^2.
  auto within_group = [](double g, double m) {
    const double mu = m / g;
    return m * (1.0 - mu) * (1.0 - mu) + (g - m) * mu * mu;
  };
  const double within = within_group(nc, static_cast<double>(case_with)) +
                        within_group(nk, static_cast<double>(ctrl_with));

  if (within == 0.0) {
    return between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return between / (within / (n - 2.0));
}

double anova_f_score(std::span<const uint8_t> case_values,
                     std::span<const uint8_t> control_values) {
  uint64_t case_with = 0, ctrl_with = 0;
  for (uint8_t v : case_values) case_with += v != 0;
  for (uint8_t v : control_values) ctrl_with += v != 0;
  return anova_f_from_counts(case_values.size(), case_with,
                             control_values.size(), ctrl_with);
}

std::vector<FeatureScore> score_all(const LabeledDataset& dataset,
                                    std::span<const uint32_t> rows,
                                    ScoreMetric order_by) {
  dataset.validate();
  std::vector<uint32_t> case_rows, ctrl_rows;
  for (uint32_t r : rows) {
    if (r >= dataset.labels.size()) fail("scoring: row index out of range");
    (dataset.labels[r] ? case_rows : ctrl_rows).push_back(r);
  }
  if (case_rows.empty() || ctrl_rows.empty()) {
    fail("scoring: row subset must contain both cases and controls");
  }

  const std::vector<uint32_t> case_counts = dataset.matrix.column_counts(case_rows);
  const std::vector<uint32_t> ctrl_counts = dataset.matrix.column_counts(ctrl_rows);
  const size_t n_cols = dataset.matrix.cols();

  std::vector<FeatureScore> scores(n_cols);
  for (uint32_t c = 0; c < n_cols; ++c) {
    Contingency2x2 t;
    t.case_with = case_counts[c];
    t.case_without = case_rows.size() - case_counts[c];
    t.ctrl_with = ctrl_counts[c];
    t.ctrl_without = ctrl_rows.size() - ctrl_counts[c];
    scores[c].feature = c;
    scores[c].chi2 = chi2_score(t);
    scores[c].f_stat = anova_f_from_counts(case_rows.size(), case_counts[c],
                                           ctrl_rows.size(), ctrl_counts[c]);
  }

  auto order_for = [&](auto value_of) {
    std::vector<uint32_t> order(n_cols);
    for (uint32_t i = 0; i < n_cols; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
      const double va = value_of(scores[a]);
      const double vb = value_of(scores[b]);
      return va != vb ? va > vb : a < b;
    });
    return order;
  };
  const std::vector<uint32_t> by_chi2 =
      order_for([](const FeatureScore& s) { return s.chi2; });
  const std::vector<uint32_t> by_f =
      order_for([](const FeatureScore& s) { return s.f_stat; });
  for (uint32_t pos = 0; pos < n_cols; ++pos) {
    scores[by_chi2[pos]].rank_chi2 = pos + 1;
    scores[by_f[pos]].rank_f = pos + 1;
  }

  const std::vector<uint32_t>& order =
      order_by == ScoreMetric::chi2 ? by_chi2 : by_f;
  std::vector<FeatureScore> out;
  out.reserve(n_cols);
  for (uint32_t c : order) out.push_back(scores[c]);
  return out;
}

double spearman(std::span<const uint32_t> ranks_a,
                std::span<const uint32_t> ranks_b) {
  if (ranks_a.size() != ranks_b.size() || ranks_a.size() < 2) {
    fail("scoring: spearman needs two equal-length rankings of size >= 2");
  }
  const double n = static_cast<double>(ranks_a.size());
  double sum_d2 = 0.0;
  for (size_t i = 0; i < ranks_a.size(); ++i) {
    const double d =
        static_cast<double>(ranks_a[i]) - static_cast<double>(ranks_b[i]);
    sum_d2 += d * d;
  }
  return 1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0));
}

}  // namespace ehrablate
