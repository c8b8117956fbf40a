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
// Classification metrics (AUC, ROC, precision/recall/F) and the split
// protocol. The default cross-validation deliberately inverts the usual
// ratio: each repetition trains on ONE fold and evaluates on the other
// nine, modeling an attacker who can annotate only a small sample. A
// standard train-on-nine mode exists for sanity comparisons.

#ifndef EHRABLATE_EVALUATION_HPP_
#define EHRABLATE_EVALUATION_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ehrablate/dataset.hpp"

namespace ehrablate {

struct SplitPlan {
  uint32_t n_folds = 10;
  std::vector<uint8_t> fold_of;  // per row

  std::vector<uint32_t> fold_rows(uint32_t fold) const;
  std::vector<uint32_t> complement_rows(uint32_t fold) const;
};

// Stratified shuffle + round-robin assignment: each fold holds one n-th of
// the cases and one n-th of the controls, within one sample.
SplitPlan make_splits(std::span<const uint8_t> labels, uint32_t n_folds,
                      uint64_t seed);

// Mann-Whitney AUC with half credit for ties, via average ranks.
double auc(std::span<const double> scores, std::span<const uint8_t> labels);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  bool operator==(const RocPoint&) const = default;
};

// One point per distinct score threshold, plus the (0,0) endpoint. The
// trapezoidal area under the returned points equals auc().
std::vector<RocPoint> roc_curve(std::span<const double> scores,
                                std::span<const uint8_t> labels);
double trapezoid_area(std::span<const RocPoint> points);

struct ThresholdMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  // False when no positives were predicted (precision reported as 0).
  bool precision_defined = true;
  bool operator==(const ThresholdMetrics&) const = default;
};

// Scores >= threshold predict "case".
ThresholdMetrics threshold_metrics(std::span<const double> scores,
                                   std::span<const uint8_t> labels,
                                   double threshold = 0.5);

struct MetricBundle {
  double auc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  bool precision_defined = true;
  std::vector<RocPoint> roc_points;
  bool operator==(const MetricBundle&) const = default;
};

MetricBundle evaluate_scores(std::span<const double> scores,
                             std::span<const uint8_t> labels, double threshold);

// Vertical averaging on a fixed false-positive-rate grid (step 0.01),
// endpoints pinned at (0,0) and (1,1).
std::vector<RocPoint> average_roc(
    const std::vector<std::vector<RocPoint>>& curves);

// Mean of every scalar metric; ROC averaged vertically; precision_defined
// only if defined in every input bundle.
MetricBundle mean_bundle(std::span<const MetricBundle> bundles);

enum class CvMode { one_fold_train, standard };

struct CvOptions {
  double threshold = 0.5;
  CvMode mode = CvMode::one_fold_train;
  size_t threads = 1;
};

// Called once per repetition with that repetition's train/test rows; must
// return one score per test row.
using FitPredictFn = std::function<std::vector<double>(
    uint32_t repetition, std::span<const uint32_t> train_rows,
    std::span<const uint32_t> test_rows)>;

struct CvResult {
  MetricBundle mean;
  std::vector<MetricBundle> per_repetition;
};

// Runs one repetition per fold. Repetitions are independent; with
// threads > 1 they run on a static partition, and results are merged by
// repetition index so the output is identical for any thread count.
CvResult cross_validate(std::span<const uint8_t> labels, const SplitPlan& plan,
                        const FitPredictFn& fit_predict,
                        const CvOptions& options = {});

struct TrainConfig;

// The default pipeline: trains the logistic classifier on the train rows
// and scores the test rows. The same config applies to every repetition.
FitPredictFn classifier_pipeline(const LabeledDataset& dataset,
                                 const TrainConfig& config);

}  // namespace ehrablate

#endif  // EHRABLATE_EVALUATION_HPP_
