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
// Case/control cohort assembly. Cases are the patients carrying the target
// sensitive code; controls are every other sensitive cohort plus a sample
// of non-sensitive patients. Because sensitive cohorts skew toward heavy
// diagnosis burdens, the non-sensitive sample is stratified by per-patient
// diagnosis count (distinct codes) so the control mix matches the sensitive
// cohorts' burden distribution instead of leaking it as a shortcut signal.

#ifndef EHRABLATE_COHORT_HPP_
#define EHRABLATE_COHORT_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ehrablate/dataset.hpp"

namespace ehrablate {

enum class MatchingMode { diag_count_matched, at_least_one_diag };

struct CohortSpec {
  std::string sensitive_code;
  uint64_t case_cap = 5000;
  uint64_t control_pool_size = 30000;
  MatchingMode matching_mode = MatchingMode::diag_count_matched;
  FeatureSetMode feature_set_mode = FeatureSetMode::union_features;
  uint64_t seed = 0;
};

// Diagnosis-count strata; lower_bounds {1,2,3,6,11,21,51} yields the bins
// {1, 2, 3-5, 6-10, 11-20, 21-50, 51+}.
struct StratumBins {
  std::vector<uint32_t> lower_bounds{1, 2, 3, 6, 11, 21, 51};

  void validate() const;
  size_t size() const { return lower_bounds.size(); }
  size_t bin_of(uint32_t diag_count) const;
  std::string label(size_t bin) const;
};

struct MatchResult {
  // Positions into the pool arrays, ascending.
  std::vector<uint32_t> selected;
  std::vector<double> target_proportions;   // per bin, sums to 1
  std::vector<uint64_t> desired_counts;     // apportioned from proportions
  std::vector<uint64_t> selected_counts;    // per bin, actually taken
  std::vector<uint64_t> shortfall;          // desired - taken, per bin
  double tv_distance = 0.0;                 // selected vs target proportions
};

// Selects up to n_select pool members whose stratum proportions match the
// target's. Within each stratum the draw is a seeded shuffle; undersupplied
// strata contribute everything they have and report the shortfall (no
// redistribution, so the tv_distance stays an honest fidelity measure).
// Every pool member must have at least one diagnosis.
MatchResult match_diag_counts(std::span<const uint32_t> pool_diag_counts,
                              std::span<const uint32_t> target_diag_counts,
                              uint64_t n_select, const StratumBins& bins,
                              uint64_t seed);

// Plain seeded uniform sample of min(n_select, pool_size) positions,
// ascending; the matching_mode=at_least_one_diag alternative.
std::vector<uint32_t> sample_uniform(size_t pool_size, uint64_t n_select,
                                     uint64_t seed);

// Exact per-patient diagnosis-count histogram (count -> patients), sorted.
std::vector<std::pair<uint32_t, uint64_t>> diag_count_histogram(
    std::span<const uint32_t> diag_counts);

// Assembles the labeled dataset from disjoint row groups of `full`:
// cases (capped at spec.case_cap by seeded sampling), controls = the other
// sensitive cohorts plus the already-selected non-sensitive rows. Rows are
// ordered cases first, each group ascending by original row index. Feature
// columns are then filtered per spec.feature_set_mode.
LabeledDataset build_case_control(const FeatureMatrix& full,
                                  std::span<const uint32_t> case_rows,
                                  std::span<const uint32_t> other_sensitive_rows,
                                  std::span<const uint32_t> nonsensitive_rows,
                                  const CohortSpec& spec);

}  // namespace ehrablate

#endif  // EHRABLATE_COHORT_HPP_
