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

#include "ehrablate/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace ehrablate {

std::string_view to_string(FeatureSetMode mode) {
  switch (mode) {
    case FeatureSetMode::union_features: return "union";
    case FeatureSetMode::control_only: return "control_only";
    case FeatureSetMode::intersect: return "intersect";
  }
  return "?";
}

std::optional<FeatureSetMode> parse_feature_set_mode(std::string_view token) {
  if (token == "union") return FeatureSetMode::union_features;
  if (token == "control_only") return FeatureSetMode::control_only;
  if (token == "intersect") return FeatureSetMode::intersect;
  return std::nullopt;
}

void StratumBins::validate() const {
  if (lower_bounds.empty()) fail("cohort: stratum bins must not be empty");
  if (lower_bounds.front() != 1) {
    fail("cohort: first stratum must start at 1 diagnosis");
  }
  for (size_t i = 1; i < lower_bounds.size(); ++i) {
    if (lower_bounds[i] <= lower_bounds[i - 1]) {
      fail("cohort: stratum bounds must be strictly increasing");
    }
  }
}

size_t StratumBins::bin_of(uint32_t diag_count) const {
  size_t bin = 0;
  while (bin + 1 < lower_bounds.size() && diag_count >= lower_bounds[bin + 1]) {
    ++bin;
  }
  return bin;
}

std::string StratumBins::label(size_t bin) const {
  const uint32_t lo = lower_bounds[bin];
  if (bin + 1 == lower_bounds.size()) return std::to_string(lo) + "+";
  const uint32_t hi = lower_bounds[bin + 1] - 1;
  if (lo == hi) return std::to_string(lo);
  return std::to_string(lo) + "-" + std::to_string(hi);
}

MatchResult match_diag_counts(std::span<const uint32_t> pool_diag_counts,
                              std::span<const uint32_t> target_diag_counts,
                              uint64_t n_select, const StratumBins& bins,
                              uint64_t seed) {
  bins.validate();
  if (pool_diag_counts.empty()) fail("cohort: control pool is empty");
  if (target_diag_counts.empty()) fail("cohort: matching target is empty");
  if (n_select == 0) fail("cohort: nothing to select");
  for (uint32_t c : pool_diag_counts) {
    if (c == 0) fail("cohort: control pool contains a patient with no diagnoses");
  }

  const size_t n_bins = bins.size();
  MatchResult result;
  result.target_proportions.assign(n_bins, 0.0);
  result.desired_counts.assign(n_bins, 0);
  result.selected_counts.assign(n_bins, 0);
  result.shortfall.assign(n_bins, 0);

  for (uint32_t c : target_diag_counts) {
    result.target_proportions[bins.bin_of(c)] += 1.0;
  }
  for (double& p : result.target_proportions) {
    p /= static_cast<double>(target_diag_counts.size());
  }

  // Largest-remainder apportionment of n_select over the target proportions.
  std::vector<double> exact(n_bins);
  uint64_t assigned = 0;
  for (size_t b = 0; b < n_bins; ++b) {
    exact[b] = result.target_proportions[b] * static_cast<double>(n_select);
    result.desired_counts[b] = static_cast<uint64_t>(exact[b]);
    assigned += result.desired_counts[b];
  }
  std::vector<size_t> by_remainder(n_bins);
  for (size_t b = 0; b < n_bins; ++b) by_remainder[b] = b;
  std::sort(by_remainder.begin(), by_remainder.end(), [&](size_t a, size_t b) {
    const double ra = exact[a] - static_cast<double>(result.desired_counts[a]);
    const double rb = exact[b] - static_cast<double>(result.desired_counts[b]);
    return ra != rb ? ra > rb : a < b;
  });
  for (size_t i = 0; assigned < n_select; ++i) {
    ++result.desired_counts[by_remainder[i % n_bins]];
    ++assigned;
  }

  std::vector<std::vector<uint32_t>> members(n_bins);
  for (uint32_t i = 0; i < pool_diag_counts.size(); ++i) {
    members[bins.bin_of(pool_diag_counts[i])].push_back(i);
  }

  for (size_t b = 0; b < n_bins; ++b) {
    Rng rng(derive_seed(seed, "stratum", b));
    rng.shuffle(members[b]);
    const uint64_t take =
        std::min<uint64_t>(result.desired_counts[b], members[b].size());
    result.selected_counts[b] = take;
    result.shortfall[b] = result.desired_counts[b] - take;
    result.selected.insert(result.selected.end(), members[b].begin(),
                           members[b].begin() + static_cast<size_t>(take));
  }
  std::sort(result.selected.begin(), result.selected.end());

  const double total_selected = static_cast<double>(result.selected.size());
  if (total_selected > 0.0) {
    double tv = 0.0;
    for (size_t b = 0; b < n_bins; ++b) {
      const double sel_prop =
          static_cast<double>(result.selected_counts[b]) / total_selected;
      tv += std::abs(sel_prop - result.target_proportions[b]);
    }
    result.tv_distance = tv * 0.5;
  } else {
    result.tv_distance = 1.0;
  }
  return result;
}

std::vector<uint32_t> sample_uniform(size_t pool_size, uint64_t n_select,
                                     uint64_t seed) {
  if (pool_size == 0) fail("cohort: control pool is empty");
  Rng rng(seed);
  std::vector<uint32_t> picked = rng.sample_without_replacement(
      pool_size, static_cast<size_t>(std::min<uint64_t>(n_select, pool_size)));
  std::sort(picked.begin(), picked.end());
  return picked;
}

std::vector<std::pair<uint32_t, uint64_t>> diag_count_histogram(
    std::span<const uint32_t> diag_counts) {
  std::map<uint32_t, uint64_t> hist;
  for (uint32_t c : diag_counts) ++hist[c];
  return {hist.begin(), hist.end()};
}

LabeledDataset build_case_control(const FeatureMatrix& full,
                                  std::span<const uint32_t> case_rows,
                                  std::span<const uint32_t> other_sensitive_rows,
                                  std::span<const uint32_t> nonsensitive_rows,
                                  const CohortSpec& spec) {
  if (case_rows.empty()) fail("cohort: case group is empty");
  if (spec.case_cap == 0) fail("cohort: case_cap must be positive");
  {
    std::set<uint32_t> seen;
    auto check_group = [&](std::span<const uint32_t> rows) {
      for (uint32_t r : rows) {
        if (r >= full.rows()) fail("cohort: row index out of range");
        if (!seen.insert(r).second) {
          fail("cohort: patient appears in more than one group: " +
               full.patient_ids()[r]);
        }
      }
    };
    check_group(case_rows);
    check_group(other_sensitive_rows);
    check_group(nonsensitive_rows);
  }

  std::vector<uint32_t> cases(case_rows.begin(), case_rows.end());
  if (cases.size() > spec.case_cap) {
    Rng rng(derive_seed(spec.seed, "case-cap"));
    const std::vector<uint32_t> picked = rng.sample_without_replacement(
        cases.size(), static_cast<size_t>(spec.case_cap));
    std::vector<uint32_t> capped;
    capped.reserve(picked.size());
    for (uint32_t i : picked) capped.push_back(cases[i]);
    cases = std::move(capped);
  }
  std::sort(cases.begin(), cases.end());

  std::vector<uint32_t> controls(other_sensitive_rows.begin(),
                                 other_sensitive_rows.end());
  controls.insert(controls.end(), nonsensitive_rows.begin(),
                  nonsensitive_rows.end());
  if (controls.empty()) fail("cohort: control group is empty");
  std::sort(controls.begin(), controls.end());

  std::vector<uint32_t> rows = cases;
  rows.insert(rows.end(), controls.begin(), controls.end());

  LabeledDataset dataset;
  dataset.matrix = full.select_rows(rows, /*drop_empty_columns=*/false);
  dataset.labels.assign(rows.size(), 0);
  std::fill(dataset.labels.begin(), dataset.labels.begin() + cases.size(), 1);
  dataset.feature_set_mode = spec.feature_set_mode;

  std::vector<uint32_t> case_positions(cases.size());
  for (uint32_t i = 0; i < cases.size(); ++i) case_positions[i] = i;
  std::vector<uint32_t> control_positions(controls.size());
  for (uint32_t i = 0; i < controls.size(); ++i) {
    control_positions[i] = static_cast<uint32_t>(cases.size()) + i;
  }
  const std::vector<uint32_t> case_counts =
      dataset.matrix.column_counts(case_positions);
  const std::vector<uint32_t> control_counts =
      dataset.matrix.column_counts(control_positions);

  std::vector<uint32_t> keep;
  for (uint32_t c = 0; c < dataset.matrix.cols(); ++c) {
    bool keep_col = false;
    switch (spec.feature_set_mode) {
      case FeatureSetMode::union_features:
        keep_col = case_counts[c] + control_counts[c] > 0;
        break;
      case FeatureSetMode::control_only:
        keep_col = control_counts[c] > 0;
        break;
      case FeatureSetMode::intersect:
        keep_col = case_counts[c] > 0 && control_counts[c] > 0;
        break;
    }
    if (keep_col) keep.push_back(c);
  }
  dataset.matrix = dataset.matrix.select_columns(keep);
  return dataset;
}

}  // namespace ehrablate
