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
// Univariate feature/label association scores over binary features:
// Pearson chi-squared on the 2x2 contingency table, and the one-way
// ANOVA F statistic with the two label groups as the factor levels.

#ifndef EHRABLATE_SCORING_HPP_
#define EHRABLATE_SCORING_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "ehrablate/dataset.hpp"

namespace ehrablate {

struct Contingency2x2 {
  uint64_t case_with = 0;
  uint64_t case_without = 0;
  uint64_t ctrl_with = 0;
  uint64_t ctrl_without = 0;

  uint64_t total() const {
    return case_with + case_without + ctrl_with + ctrl_without;
  }
};

// Pearson chi-squared over raw counts. Cells whose expected count is zero
// (degenerate margins) contribute nothing, so a table with an empty margin
// scores 0 instead of NaN.
double chi2_score(const Contingency2x2& t);

// One-way F statistic for a binary feature split by label group, computed
// from group sizes and ones-counts. Zero within-group variance with nonzero
// between-group variance returns +infinity; all-identical values return 0.
// Both groups must be non-empty.
double anova_f_from_counts(uint64_t n_case, uint64_t case_with, uint64_t n_ctrl,
                           uint64_t ctrl_with);
double anova_f_score(std::span<const uint8_t> case_values,
                     std::span<const uint8_t> control_values);

enum class ScoreMetric { chi2, anova_f };

struct FeatureScore {
  uint32_t feature = 0;  // column index into the scored matrix
  double chi2 = 0.0;
  double f_stat = 0.0;
  // 1-based positions in the descending orderings of each metric; ties are
  // broken toward the earlier (canonically smaller) feature. Each rank set
  // is a permutation of 1..columns.
  uint32_t rank_chi2 = 0;
  uint32_t rank_f = 0;
};

// Scores every column over the given row subset (typically the training
// fold only, so feature selection never sees evaluation rows) and returns
// the features ordered by the requested metric, best first. The subset must
// contain at least one case and one control.
std::vector<FeatureScore> score_all(const LabeledDataset& dataset,
                                    std::span<const uint32_t> rows,
                                    ScoreMetric order_by);

// Rank agreement between two tie-free rank permutations.
double spearman(std::span<const uint32_t> ranks_a,
                std::span<const uint32_t> ranks_b);

}  // namespace ehrablate

#endif  // EHRABLATE_SCORING_HPP_
