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

#include "ehrablate/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>
#include <vector>

#include "doctest.h"
#include "ehrablate/classifier.hpp"
#include "ehrablate/dataset.hpp"
#include "ehrablate/event_model.hpp"
#include "ehrablate/util.hpp"
#include "oracles.hpp"

namespace ehrablate {
namespace {

// Random score/label sets with deliberate ties: scores are drawn from a
// small value pool so duplicates across and within classes are common.
struct ScoreSet {
  std::vector<double> scores;
  std::vector<uint8_t> labels;
};

ScoreSet random_score_set(Rng& rng, size_t max_size) {
  ScoreSet out;
  const size_t n = 2 + rng.uniform_index(max_size - 1);
  const size_t pool = 1 + rng.uniform_index(12);
  std::vector<double> values(pool);
  for (auto& v : values) v = rng.uniform01();
  out.scores.resize(n);
  out.labels.resize(n);
  for (size_t i = 0; i < n; ++i) {
    out.scores[i] = values[rng.uniform_index(pool)];
    out.labels[i] = static_cast<uint8_t>(rng.bernoulli(0.5) ? 1 : 0);
  }
  // Guarantee both classes are present.
  out.labels[0] = 1;
  out.labels[n - 1] = 0;
  return out;
}

TEST_CASE("auc matches the frozen worked example") {
  const std::vector<double> scores = {0.9, 0.8, 0.7, 0.8};
  const std::vector<uint8_t> labels = {1, 1, 0, 0};
  CHECK(auc(scores, labels) == doctest::Approx(0.875).epsilon(1e-15));
}

TEST_CASE("auc handles degenerate orderings") {
  const std::vector<uint8_t> labels = {1, 1, 0, 0};
  CHECK(auc(std::vector<double>{5, 5, 5, 5}, labels) == 0.5);
  CHECK(auc(std::vector<double>{2, 3, 0, 1}, labels) == 1.0);
  CHECK(auc(std::vector<double>{0, 1, 2, 3}, labels) == 0.0);
}

TEST_CASE("auc agrees with the all-pairs count") {
  Rng rng(20260422);
  for (int round = 0; round < 200; ++round) {
    const ScoreSet s = random_score_set(rng, 50);
    const double fast = auc(s.scores, s.labels);
    const double slow = oracles::auc_all_pairs(s.scores, s.labels);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
  }
}

TEST_CASE("auc rejects single-class input") {
  CHECK_THROWS_AS(auc(std::vector<double>{1, 2}, std::vector<uint8_t>{1, 1}),
                  FatalError);
  CHECK_THROWS_AS(auc(std::vector<double>{1, 2}, std::vector<uint8_t>{0, 0}),
                  FatalError);
}

TEST_CASE("roc curve starts at the origin and ends at (1,1)") {
  const std::vector<double> scores = {0.9, 0.8, 0.7, 0.8};
  const std::vector<uint8_t> labels = {1, 1, 0, 0};
  const auto points = roc_curve(scores, labels);
  REQUIRE(points.size() >= 2);
  CHECK(points.front() == RocPoint{0.0, 0.0});
  CHECK(points.back() == RocPoint{1.0, 1.0});
  // Three distinct scores plus the origin.
  CHECK(points.size() == 4);
}

TEST_CASE("roc curve is monotone and one point per distinct score") {
  Rng rng(77125);
  for (int round = 0; round < 100; ++round) {
    const ScoreSet s = random_score_set(rng, 40);
    const auto points = roc_curve(s.scores, s.labels);
    const std::set<double> distinct(s.scores.begin(), s.scores.end());
    CHECK(points.size() == distinct.size() + 1);
    for (size_t i = 1; i < points.size(); ++i) {
      CHECK(points[i].fpr >= points[i - 1].fpr);
      CHECK(points[i].tpr >= points[i - 1].tpr);
    }
  }
}

TEST_CASE("trapezoid area under the roc curve equals auc") {
  Rng rng(99017);
  for (int round = 0; round < 100; ++round) {
    const ScoreSet s = random_score_set(rng, 40);
    const auto points = roc_curve(s.scores, s.labels);
    CHECK(trapezoid_area(points) ==
          doctest::Approx(auc(s.scores, s.labels)).epsilon(1e-12));
  }
}

TEST_CASE("threshold metrics match the frozen worked example") {
  // Six cases of which three score at or above 0.5, plus one false positive:
  // precision 3/4, recall 3/6, f-measure 0.6.
  const std::vector<double> scores = {0.9, 0.8, 0.6, 0.4, 0.3, 0.2, 0.7, 0.1};
  const std::vector<uint8_t> labels = {1, 1, 1, 1, 1, 1, 0, 0};
  const ThresholdMetrics m = threshold_metrics(scores, labels, 0.5);
  CHECK(m.precision == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(m.recall == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.f_measure == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(m.precision_defined);
}

TEST_CASE("threshold metrics when nothing is predicted positive") {
  const std::vector<double> scores = {0.1, 0.2, 0.3};
  const std::vector<uint8_t> labels = {1, 1, 0};
  const ThresholdMetrics m = threshold_metrics(scores, labels, 0.5);
  CHECK_FALSE(m.precision_defined);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f_measure == 0.0);
}

TEST_CASE("threshold boundary counts scores equal to the threshold") {
  const std::vector<double> scores = {0.5, 0.49};
  const std::vector<uint8_t> labels = {1, 0};
  const ThresholdMetrics m = threshold_metrics(scores, labels, 0.5);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.f_measure == 1.0);
}

TEST_CASE("evaluate_scores bundles the scalar metrics and the curve") {
  const std::vector<double> scores = {0.9, 0.8, 0.7, 0.8};
  const std::vector<uint8_t> labels = {1, 1, 0, 0};
  const MetricBundle b = evaluate_scores(scores, labels, 0.5);
  CHECK(b.auc == doctest::Approx(0.875).epsilon(1e-15));
  CHECK(b.roc_points == roc_curve(scores, labels));
  const ThresholdMetrics m = threshold_metrics(scores, labels, 0.5);
  CHECK(b.precision == m.precision);
  CHECK(b.recall == m.recall);
  CHECK(b.f_measure == m.f_measure);
  CHECK(b.precision_defined == m.precision_defined);
}

TEST_CASE("average_roc of one curve reproduces it on the grid") {
  const std::vector<double> scores = {0.9, 0.8, 0.7, 0.8};
  const std::vector<uint8_t> labels = {1, 1, 0, 0};
  const auto curve = roc_curve(scores, labels);
  const auto averaged = average_roc({curve});
  REQUIRE(averaged.size() == 101);
  CHECK(averaged.front() == RocPoint{0.0, 0.0});
  CHECK(averaged.back() == RocPoint{1.0, 1.0});
  for (size_t i = 0; i < averaged.size(); ++i) {
    CHECK(averaged[i].fpr == doctest::Approx(0.01 * double(i)).epsilon(1e-15));
    if (i > 0) CHECK(averaged[i].tpr >= averaged[i - 1].tpr);
  }
  // The grid curve and the original bound the same area to grid resolution.
  CHECK(trapezoid_area(averaged) ==
        doctest::Approx(trapezoid_area(curve)).epsilon(0.02));
}

TEST_CASE("average_roc takes the vertical mean across curves") {
  // A perfect classifier and a useless one average to tpr midway between
  // the diagonal and the upper envelope at every interior grid point.
  const std::vector<RocPoint> perfect = {{0, 0}, {0, 1}, {1, 1}};
  const std::vector<RocPoint> diagonal = {{0, 0}, {1, 1}};
  const auto averaged = average_roc({perfect, diagonal});
  REQUIRE(averaged.size() == 101);
  for (size_t i = 1; i + 1 < averaged.size(); ++i) {
    const double fpr = 0.01 * double(i);
    CHECK(averaged[i].tpr == doctest::Approx((1.0 + fpr) / 2).epsilon(1e-12));
  }
}

TEST_CASE("mean_bundle averages scalars and ands precision_defined") {
  MetricBundle a;
  a.auc = 0.8;
  a.precision = 0.6;
  a.recall = 0.4;
  a.f_measure = 0.48;
  a.precision_defined = true;
  a.roc_points = {{0, 0}, {0, 1}, {1, 1}};
  MetricBundle b;
  b.auc = 0.6;
  b.precision = 0.2;
  b.recall = 0.8;
  b.f_measure = 0.32;
  b.precision_defined = true;
  b.roc_points = {{0, 0}, {1, 1}};
  const std::vector<MetricBundle> bundles = {a, b};
  const MetricBundle mean = mean_bundle(bundles);
  CHECK(mean.auc == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(mean.precision == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(mean.recall == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(mean.f_measure == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(mean.precision_defined);
  CHECK(mean.roc_points == average_roc({a.roc_points, b.roc_points}));

  b.precision_defined = false;
  const std::vector<MetricBundle> mixed = {a, b};
  CHECK_FALSE(mean_bundle(mixed).precision_defined);
}

TEST_CASE("make_splits balances each class across folds") {
  Rng rng(55801);
  for (int round = 0; round < 20; ++round) {
    const size_t n = 40 + rng.uniform_index(200);
    std::vector<uint8_t> labels(n);
    size_t n_case = 0;
    for (auto& l : labels) {
      l = static_cast<uint8_t>(rng.bernoulli(0.4) ? 1 : 0);
      n_case += l;
    }
    const uint32_t n_folds = 2 + uint32_t(rng.uniform_index(9));
    if (n_case < n_folds || (n - n_case) < n_folds) continue;
    const SplitPlan plan = make_splits(labels, n_folds, round);
    REQUIRE(plan.fold_of.size() == n);
    std::map<std::pair<uint8_t, uint8_t>, size_t> per_fold_class;
    for (size_t i = 0; i < n; ++i) {
      CHECK(plan.fold_of[i] < n_folds);
      per_fold_class[{plan.fold_of[i], labels[i]}] += 1;
    }
    for (uint8_t label : {uint8_t{0}, uint8_t{1}}) {
      size_t lo = n, hi = 0;
      for (uint32_t f = 0; f < n_folds; ++f) {
        const size_t c = per_fold_class[{uint8_t(f), label}];
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
      CHECK(hi - lo <= 1);
    }
  }
}

TEST_CASE("make_splits is deterministic in the seed") {
  std::vector<uint8_t> labels(60);
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2;
  const SplitPlan a = make_splits(labels, 10, 42);
  const SplitPlan b = make_splits(labels, 10, 42);
  const SplitPlan c = make_splits(labels, 10, 43);
  CHECK(a.fold_of == b.fold_of);
  CHECK(a.fold_of != c.fold_of);
}

TEST_CASE("make_splits rejects impossible requests") {
  std::vector<uint8_t> labels = {1, 1, 1, 0, 0, 0};
  CHECK_THROWS_AS(make_splits(labels, 1, 0), FatalError);
  CHECK_THROWS_AS(make_splits(labels, 4, 0), FatalError);  // 3 per class
  std::vector<uint8_t> one_class = {1, 1, 1, 1};
  CHECK_THROWS_AS(make_splits(one_class, 2, 0), FatalError);
}

TEST_CASE("fold_rows and complement_rows partition the rows") {
  std::vector<uint8_t> labels(45);
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = i % 3 == 0;
  const SplitPlan plan = make_splits(labels, 5, 9);
  for (uint32_t f = 0; f < plan.n_folds; ++f) {
    const auto inside = plan.fold_rows(f);
    const auto outside = plan.complement_rows(f);
    CHECK(inside.size() + outside.size() == labels.size());
    std::vector<uint32_t> both;
    both.insert(both.end(), inside.begin(), inside.end());
    both.insert(both.end(), outside.begin(), outside.end());
    std::sort(both.begin(), both.end());
    for (uint32_t i = 0; i < both.size(); ++i) CHECK(both[i] == i);
    CHECK(std::is_sorted(inside.begin(), inside.end()));
    CHECK(std::is_sorted(outside.begin(), outside.end()));
    for (uint32_t r : inside) CHECK(plan.fold_of[r] == f);
    for (uint32_t r : outside) CHECK(plan.fold_of[r] != f);
  }
}

TEST_CASE("cross_validate trains on one fold by default") {
  std::vector<uint8_t> labels(100);
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = i < 50;
  const SplitPlan plan = make_splits(labels, 10, 3);

  std::mutex mu;
  std::vector<std::pair<size_t, size_t>> sizes(plan.n_folds);
  const FitPredictFn probe = [&](uint32_t rep, std::span<const uint32_t> train,
                                 std::span<const uint32_t> test) {
    {
      std::lock_guard<std::mutex> lock(mu);
      sizes[rep] = {train.size(), test.size()};
    }
    std::vector<double> out(test.size());
    for (size_t i = 0; i < test.size(); ++i) out[i] = labels[test[i]];
    return out;
  };

  CvOptions options;
  options.mode = CvMode::one_fold_train;
  const CvResult result = cross_validate(labels, plan, probe, options);
  CHECK(result.per_repetition.size() == plan.n_folds);
  for (uint32_t f = 0; f < plan.n_folds; ++f) {
    CHECK(sizes[f].first == plan.fold_rows(f).size());
    CHECK(sizes[f].second == labels.size() - sizes[f].first);
  }
  // The probe echoes the labels, so every repetition is perfect.
  CHECK(result.mean.auc == 1.0);

  options.mode = CvMode::standard;
  cross_validate(labels, plan, probe, options);
  for (uint32_t f = 0; f < plan.n_folds; ++f) {
    CHECK(sizes[f].second == plan.fold_rows(f).size());
    CHECK(sizes[f].first == labels.size() - sizes[f].second);
  }
}

TEST_CASE("cross_validate result does not depend on the thread count") {
  std::vector<uint8_t> labels(90);
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2;
  const SplitPlan plan = make_splits(labels, 9, 11);
  const FitPredictFn probe = [&](uint32_t rep, std::span<const uint32_t>,
                                 std::span<const uint32_t> test) {
    Rng rng(derive_seed(500, "probe", rep));
    std::vector<double> out(test.size());
    for (size_t i = 0; i < test.size(); ++i)
      out[i] = 0.7 * labels[test[i]] + 0.3 * rng.uniform01();
    return out;
  };

  CvOptions one;
  one.threads = 1;
  const CvResult a = cross_validate(labels, plan, probe, one);
  for (size_t threads : {2, 3, 7, 16}) {
    CvOptions many;
    many.threads = threads;
    const CvResult b = cross_validate(labels, plan, probe, many);
    CHECK(a.mean == b.mean);
    REQUIRE(a.per_repetition.size() == b.per_repetition.size());
    for (size_t i = 0; i < a.per_repetition.size(); ++i)
      CHECK(a.per_repetition[i] == b.per_repetition[i]);
  }
}

TEST_CASE("cross_validate rejects a score vector of the wrong length") {
  std::vector<uint8_t> labels(40);
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2;
  const SplitPlan plan = make_splits(labels, 4, 1);
  const FitPredictFn bad = [](uint32_t, std::span<const uint32_t>,
                              std::span<const uint32_t>) {
    return std::vector<double>{0.5};
  };
  CHECK_THROWS_AS(cross_validate(labels, plan, bad), FatalError);
}

// A dataset whose first feature tracks the label closely and whose second
// is noise, dense enough that a single training fold suffices.
LabeledDataset signal_dataset(size_t n_case, size_t n_ctrl, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> ids;
  std::vector<FeatureId> features = {
      {FeatureCategory::medication, "signal"},
      {FeatureCategory::medication, "noise"},
  };
  std::vector<Cell> cells;
  std::vector<uint8_t> labels;
  for (size_t i = 0; i < n_case + n_ctrl; ++i) {
    const bool is_case = i < n_case;
    char buf[32];
    std::snprintf(buf, sizeof buf, "p%05zu", i);
    const uint32_t row = uint32_t(ids.size());
    ids.emplace_back(buf);
    labels.push_back(is_case);
    if (rng.bernoulli(is_case ? 0.9 : 0.1)) cells.push_back({row, 0});
    if (rng.bernoulli(0.5)) cells.push_back({row, 1});
  }
  LabeledDataset out;
  out.matrix = FeatureMatrix::from_triplets(ids, features, cells,
                                            /*drop_empty_columns=*/false);
  out.labels = std::move(labels);
  out.validate();
  return out;
}

TEST_CASE("classifier_pipeline recovers a strong single-feature signal") {
  const LabeledDataset data = signal_dataset(60, 60, 314159);
  const SplitPlan plan = make_splits(data.labels, 10, 7);
  const CvResult result =
      cross_validate(data.labels, plan, classifier_pipeline(data, {}));
  CHECK(result.mean.auc > 0.85);
  CHECK(result.per_repetition.size() == 10);

  // Same inputs, same result, bit for bit.
  const CvResult again =
      cross_validate(data.labels, plan, classifier_pipeline(data, {}));
  CHECK(result.mean == again.mean);
}

}  // namespace
}  // namespace ehrablate
