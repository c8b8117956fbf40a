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
#include <thread>

#include "ehrablate/classifier.hpp"
#include "ehrablate/util.hpp"

namespace ehrablate {

std::vector<uint32_t> SplitPlan::fold_rows(uint32_t fold) const {
  std::vector<uint32_t> out;
  for (uint32_t r = 0; r < fold_of.size(); ++r) {
    if (fold_of[r] == fold) out.push_back(r);
  }
  return out;
}

std::vector<uint32_t> SplitPlan::complement_rows(uint32_t fold) const {
  std::vector<uint32_t> out;
  for (uint32_t r = 0; r < fold_of.size(); ++r) {
    if (fold_of[r] != fold) out.push_back(r);
  }
  return out;
}

SplitPlan make_splits(std::span<const uint8_t> labels, uint32_t n_folds,
                      uint64_t seed) {
  if (n_folds < 2) fail("evaluation: need at least 2 folds");
  std::vector<uint32_t> cases, controls;
  for (uint32_t r = 0; r < labels.size(); ++r) {
    (labels[r] ? cases : controls).push_back(r);
  }
  if (cases.size() < n_folds || controls.size() < n_folds) {
    fail("evaluation: need at least " + std::to_string(n_folds) +
         " cases and controls to stratify");
  }
  SplitPlan plan;
  plan.n_folds = n_folds;
  plan.fold_of.assign(labels.size(), 0);
  Rng rng(seed);
  rng.shuffle(cases);
  rng.shuffle(controls);
  for (size_t i = 0; i < cases.size(); ++i) {
    plan.fold_of[cases[i]] = static_cast<uint8_t>(i % n_folds);
  }
  for (size_t i = 0; i < controls.size(); ++i) {
    plan.fold_of[controls[i]] = static_cast<uint8_t>(i % n_folds);
  }
  return plan;
}

namespace {

void check_both_labels(std::span<const uint8_t> labels) {
  bool has_case = false, has_control = false;
  for (uint8_t y : labels) (y ? has_case : has_control) = true;
  if (!has_case || !has_control) {
    fail("evaluation: need both cases and controls");
  }
}

}  // namespace

double auc(std::span<const double> scores, std::span<const uint8_t> labels) {
  if (scores.size() != labels.size()) {
    fail("evaluation: scores and labels must be parallel");
  }
  check_both_labels(labels);
  const size_t n = scores.size();
  std::vector<uint32_t> order(n);
  for (uint32_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    return scores[a] < scores[b];
  });

  // Average ranks over tie runs, then the Mann-Whitney identity.
  double case_rank_sum = 0.0;
  size_t n_case = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (size_t t = i; t < j; ++t) {
      if (labels[order[t]]) {
        case_rank_sum += avg_rank;
        ++n_case;
      }
    }
    i = j;
  }
  const double n1 = static_cast<double>(n_case);
  const double n0 = static_cast<double>(n - n_case);
  return (case_rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

std::vector<RocPoint> roc_curve(std::span<const double> scores,
                                std::span<const uint8_t> labels) {
  if (scores.size() != labels.size()) {
    fail("evaluation: scores and labels must be parallel");
  }
  check_both_labels(labels);
  const size_t n = scores.size();
  std::vector<uint32_t> order(n);
  for (uint32_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    return scores[a] > scores[b];
  });
  size_t n_case = 0;
  for (uint8_t y : labels) n_case += y != 0;
  const double n1 = static_cast<double>(n_case);
  const double n0 = static_cast<double>(n - n_case);

  std::vector<RocPoint> points{{0.0, 0.0}};
  size_t tp = 0, fp = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    for (size_t t = i; t < j; ++t) {
      if (labels[order[t]]) ++tp;
      else ++fp;
    }
    points.push_back({static_cast<double>(fp) / n0, static_cast<double>(tp) / n1});
    i = j;
  }
  return points;
}

double trapezoid_area(std::span<const RocPoint> points) {
  double area = 0.0;
  for (size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) *
            (points[i].tpr + points[i - 1].tpr) * 0.5;
  }
  return area;
}

ThresholdMetrics threshold_metrics(std::span<const double> scores,
                                   std::span<const uint8_t> labels,
                                   double threshold) {
  if (scores.size() != labels.size()) {
    fail("evaluation: scores and labels must be parallel");
  }
  check_both_labels(labels);
  uint64_t tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (predicted && labels[i]) ++tp;
    else if (predicted && !labels[i]) ++fp;
    else if (!predicted && labels[i]) ++fn;
  }
  ThresholdMetrics m;
  if (tp + fp == 0) {
    m.precision = 0.0;
    m.precision_defined = false;
  } else {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.f_measure = m.precision + m.recall == 0.0
                    ? 0.0
                    : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

MetricBundle evaluate_scores(std::span<const double> scores,
                             std::span<const uint8_t> labels,
                             double threshold) {
  MetricBundle b;
  b.auc = auc(scores, labels);
  const ThresholdMetrics t = threshold_metrics(scores, labels, threshold);
  b.precision = t.precision;
  b.recall = t.recall;
  b.f_measure = t.f_measure;
  b.precision_defined = t.precision_defined;
  b.roc_points = roc_curve(scores, labels);
  return b;
}

std::vector<RocPoint> average_roc(
    const std::vector<std::vector<RocPoint>>& curves) {
  if (curves.empty()) fail("evaluation: no curves to average");

  // Upper envelope per curve: for each distinct fpr keep the max tpr, then
  // interpolate linearly between envelope points.
  struct Envelope {
    std::vector<RocPoint> pts;
    double at(double fpr) const {
      auto it = std::lower_bound(
          pts.begin(), pts.end(), fpr,
          [](const RocPoint& p, double f) { return p.fpr < f; });
      if (it == pts.begin()) return it->tpr;
      if (it == pts.end()) return pts.back().tpr;
      if (it->fpr == fpr) return it->tpr;
      const RocPoint& hi = *it;
      const RocPoint& lo = *(it - 1);
      const double w = (fpr - lo.fpr) / (hi.fpr - lo.fpr);
      return lo.tpr + w * (hi.tpr - lo.tpr);
    }
  };
  std::vector<Envelope> envelopes;
  envelopes.reserve(curves.size());
  for (const std::vector<RocPoint>& curve : curves) {
    Envelope e;
    for (const RocPoint& p : curve) {
      if (!e.pts.empty() && e.pts.back().fpr == p.fpr) {
        e.pts.back().tpr = std::max(e.pts.back().tpr, p.tpr);
      } else {
        e.pts.push_back(p);
      }
    }
    if (e.pts.empty() || e.pts.front().fpr > 0.0) {
      e.pts.insert(e.pts.begin(), {0.0, 0.0});
    }
    if (e.pts.back().fpr < 1.0) e.pts.push_back({1.0, 1.0});
    envelopes.push_back(std::move(e));
  }

  std::vector<RocPoint> out;
  out.reserve(101);
  for (int g = 0; g <= 100; ++g) {
    const double fpr = static_cast<double>(g) / 100.0;
    double tpr = 0.0;
    for (const Envelope& e : envelopes) tpr += e.at(fpr);
    tpr /= static_cast<double>(envelopes.size());
    out.push_back({fpr, tpr});
  }
  out.front() = {0.0, 0.0};
  out.back() = {1.0, 1.0};
  return out;
}

MetricBundle mean_bundle(std::span<const MetricBundle> bundles) {
  if (bundles.empty()) fail("evaluation: no bundles to average");
  MetricBundle mean;
  std::vector<std::vector<RocPoint>> curves;
  curves.reserve(bundles.size());
  for (const MetricBundle& b : bundles) {
    mean.auc += b.auc;
    mean.precision += b.precision;
    mean.recall += b.recall;
    mean.f_measure += b.f_measure;
    mean.precision_defined = mean.precision_defined && b.precision_defined;
    curves.push_back(b.roc_points);
  }
  const double n = static_cast<double>(bundles.size());
  mean.auc /= n;
  mean.precision /= n;
  mean.recall /= n;
  mean.f_measure /= n;
  mean.roc_points = average_roc(curves);
  return mean;
}

CvResult cross_validate(std::span<const uint8_t> labels, const SplitPlan& plan,
                        const FitPredictFn& fit_predict,
                        const CvOptions& options) {
  if (plan.fold_of.size() != labels.size()) {
    fail("evaluation: split plan does not match dataset");
  }
  const uint32_t n_reps = plan.n_folds;
  std::vector<MetricBundle> per_rep(n_reps);
  std::vector<std::string> errors(n_reps);

  auto run_rep = [&](uint32_t rep) {
    std::vector<uint32_t> train = plan.fold_rows(rep);
    std::vector<uint32_t> test = plan.complement_rows(rep);
    if (options.mode == CvMode::standard) train.swap(test);
    const std::vector<double> scores = fit_predict(rep, train, test);
    if (scores.size() != test.size()) {
      fail("evaluation: pipeline returned " + std::to_string(scores.size()) +
           " scores for " + std::to_string(test.size()) + " test rows");
    }
    std::vector<uint8_t> test_labels;
    test_labels.reserve(test.size());
    for (uint32_t r : test) test_labels.push_back(labels[r]);
    per_rep[rep] = evaluate_scores(scores, test_labels, options.threshold);
  };

  const size_t n_workers =
      std::max<size_t>(1, std::min<size_t>(options.threads, n_reps));
  if (n_workers == 1) {
    for (uint32_t rep = 0; rep < n_reps; ++rep) {
      try {
        run_rep(rep);
      } catch (const std::exception& e) {
        fail("evaluation: repetition " + std::to_string(rep) + ": " + e.what());
      }
    }
  } else {
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (size_t w = 0; w < n_workers; ++w) {
      workers.emplace_back([&, w] {
        for (uint32_t rep = static_cast<uint32_t>(w); rep < n_reps;
             rep += static_cast<uint32_t>(n_workers)) {
          try {
            run_rep(rep);
          } catch (const std::exception& e) {
            errors[rep] = e.what();
          }
        }
      });
    }
    for (std::thread& t : workers) t.join();
    for (uint32_t rep = 0; rep < n_reps; ++rep) {
      if (!errors[rep].empty()) {
        fail("evaluation: repetition " + std::to_string(rep) + ": " +
             errors[rep]);
      }
    }
  }

  CvResult result;
  result.mean = mean_bundle(per_rep);
  result.per_repetition = std::move(per_rep);
  return result;
}

FitPredictFn classifier_pipeline(const LabeledDataset& dataset,
                                 const TrainConfig& config) {
  return [&dataset, config](uint32_t, std::span<const uint32_t> train_rows,
                            std::span<const uint32_t> test_rows) {
    std::vector<uint8_t> train_labels;
    train_labels.reserve(train_rows.size());
    for (uint32_t r : train_rows) train_labels.push_back(dataset.labels[r]);
    const LogisticModel model =
        train(dataset.matrix, train_rows, train_labels, config);
    return predict(model, dataset.matrix, test_rows);
  };
}

}  // namespace ehrablate
