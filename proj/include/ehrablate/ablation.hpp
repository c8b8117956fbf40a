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
// Feature-ablation sweep: within each cross-validation repetition, rank
// features on the training fold, remove the cumulative top-k columns for
// each k in the schedule, retrain from scratch on the surviving columns and
// evaluate on the held-out folds. Deleting columns cannot change the
// univariate scores of the survivors, so one ranking per repetition is
// equivalent to re-ranking after every deletion.

#ifndef EHRABLATE_ABLATION_HPP_
#define EHRABLATE_ABLATION_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ehrablate/classifier.hpp"
#include "ehrablate/dataset.hpp"
#include "ehrablate/evaluation.hpp"
#include "ehrablate/scoring.hpp"

namespace ehrablate {

struct AblationSchedule {
  // First entry 0 is the no-ablation ("All") column.
  std::vector<uint32_t> ks{0,   10,  20,  30,  40,  50,  100, 200,
                           300, 400, 500, 600, 700, 800, 900, 1000};

  void validate() const;
  // Drops entries with k >= n_features (at least one column must survive
  // every step); sets *warning when anything was dropped.
  AblationSchedule truncate(size_t n_features, std::string* warning) const;
};

enum class DeclineCategory { fast, progressive, slow, unclassified };
std::string_view to_string(DeclineCategory c);

// Ordered rules: fast if AUC < fast_auc at some k < fast_max_k; else
// progressive if AUC < progressive_auc at some k in [progressive_min_k,
// progressive_max_k]; else slow if AUC at progressive_max_k >= it.
struct DeclineThresholds {
  double fast_auc = 0.6;
  uint32_t fast_max_k = 400;
  double progressive_auc = 0.7;
  uint32_t progressive_min_k = 0;
  uint32_t progressive_max_k = 1000;
};

// Presets: "default" (the ordered rules above), "abstract" (progressive
// window 200..700), "conclusion" (progressive window 200..1000).
DeclineThresholds decline_preset(std::string_view name);

// The curve must reach progressive_max_k; shorter curves are unclassified.
DeclineCategory classify_decline(std::span<const uint32_t> ks,
                                 std::span<const double> aucs,
                                 const DeclineThresholds& thresholds);

// Category shares among the top-k ranked columns, in percent; lab_low and
// lab_high both count as "lab". k=0 reports all-zero with defined=false.
struct CategoryComposition {
  double lab = 0.0;
  double medication = 0.0;
  double procedure = 0.0;
  double comorbidity = 0.0;
  bool defined = false;
};
CategoryComposition category_composition(const FeatureMatrix& m,
                                         std::span<const uint32_t> ranked_cols,
                                         size_t k);

struct TopFeature {
  std::string prefixed_name;
  double score = 0.0;
};
// First n ranked features with their scores, display-prefixed.
std::vector<TopFeature> top_features(const FeatureMatrix& m,
                                     std::span<const uint32_t> ranked_cols,
                                     std::span<const double> score_by_col,
                                     size_t n);

struct AblationOptions {
  ScoreMetric metric = ScoreMetric::chi2;
  // When true, features are ranked on all rows instead of the training
  // fold only (the laxer reading; leaks evaluation rows into selection).
  bool score_on_all_rows = false;
  TrainConfig train;
  double threshold = 0.5;
  CvMode cv_mode = CvMode::one_fold_train;
  DeclineThresholds decline;
  size_t top_n = 10;
  size_t threads = 1;
};

struct AblationReport {
  AblationSchedule schedule;  // after truncation
  std::string truncation_warning;
  std::vector<MetricBundle> mean_per_k;               // parallel to schedule.ks
  std::vector<std::vector<MetricBundle>> per_rep;     // [k][repetition]
  std::vector<CategoryComposition> composition;       // per k, consensus top-k
  // All columns, best first, by median rank across repetitions (ties by
  // column index); the vote-style consensus used for composition and the
  // top-feature listing.
  std::vector<uint32_t> consensus_ranking;
  std::vector<double> mean_chi2;  // per column, mean over repetitions
  std::vector<double> mean_f;     // per column, mean over repetitions
  DeclineCategory decline = DeclineCategory::unclassified;
  std::vector<TopFeature> top;
};

AblationReport run_ablation(const LabeledDataset& dataset,
                            const AblationSchedule& schedule,
                            const SplitPlan& plan,
                            const AblationOptions& options = {});

}  // namespace ehrablate

#endif  // EHRABLATE_ABLATION_HPP_
