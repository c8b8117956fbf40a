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

#include "ehrablate/ablation.hpp"

#include <algorithm>
#include <thread>

namespace ehrablate {

void AblationSchedule::validate() const {
  if (ks.empty() || ks.front() != 0) {
    fail("ablation: schedule must start with k=0");
  }
  for (size_t i = 1; i < ks.size(); ++i) {
    if (ks[i] <= ks[i - 1]) {
      fail("ablation: schedule must be strictly increasing");
    }
  }
}

AblationSchedule AblationSchedule::truncate(size_t n_features,
                                            std::string* warning) const {
  validate();
  AblationSchedule out;
  out.ks.clear();
  size_t dropped = 0;
  for (uint32_t k : ks) {
    if (static_cast<size_t>(k) >= n_features) {
      ++dropped;
    } else {
      out.ks.push_back(k);
    }
  }
  if (warning) {
    if (dropped > 0) {
      *warning = "ablation: dropped " + std::to_string(dropped) +
                 " schedule step(s) at or beyond the feature count (" +
                 std::to_string(n_features) + ")";
    } else {
      warning->clear();
    }
  }
  return out;
}

std::string_view to_string(DeclineCategory c) {
  switch (c) {
    case DeclineCategory::fast: return "fast";
    case DeclineCategory::progressive: return "progressive";
    case DeclineCategory::slow: return "slow";
    case DeclineCategory::unclassified: return "unclassified";
  }
  return "?";
}

DeclineThresholds decline_preset(std::string_view name) {
  DeclineThresholds t;
  if (name == "default") return t;
  if (name == "abstract") {
    t.progressive_min_k = 200;
    t.progressive_max_k = 700;
    return t;
  }
  if (name == "conclusion") {
    t.progressive_min_k = 200;
    t.progressive_max_k = 1000;
    return t;
  }
  fail("ablation: unknown decline preset \"" + std::string(name) + "\"");
}

DeclineCategory classify_decline(std::span<const uint32_t> ks,
                                 std::span<const double> aucs,
                                 const DeclineThresholds& thresholds) {
  if (ks.size() != aucs.size()) {
    fail("ablation: decline curve ks and aucs must be parallel");
  }
  uint32_t max_k = 0;
  double auc_at_max = 0.0;
  for (size_t i = 0; i < ks.size(); ++i) {
    if (i > 0 && ks[i] <= ks[i - 1]) {
      fail("ablation: decline curve ks must be strictly increasing");
    }
    if (ks[i] <= thresholds.progressive_max_k && ks[i] >= max_k) {
      max_k = ks[i];
      auc_at_max = aucs[i];
    }
  }
  if (ks.empty() || max_k < thresholds.progressive_max_k) {
    return DeclineCategory::unclassified;
  }
  for (size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < thresholds.fast_max_k && aucs[i] < thresholds.fast_auc) {
      return DeclineCategory::fast;
    }
  }
  for (size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] >= thresholds.progressive_min_k &&
        ks[i] <= thresholds.progressive_max_k &&
        aucs[i] < thresholds.progressive_auc) {
      return DeclineCategory::progressive;
    }
  }
  if (auc_at_max >= thresholds.progressive_auc) return DeclineCategory::slow;
  return DeclineCategory::unclassified;
}

CategoryComposition category_composition(const FeatureMatrix& m,
                                         std::span<const uint32_t> ranked_cols,
                                         size_t k) {
  if (k > ranked_cols.size()) {
    fail("ablation: composition k exceeds ranking length");
  }
  CategoryComposition comp;
  if (k == 0) return comp;  // defined stays false
  size_t lab = 0, med = 0, proc = 0, comor = 0;
  for (size_t i = 0; i < k; ++i) {
    const uint32_t c = ranked_cols[i];
    if (c >= m.cols()) fail("ablation: ranked column out of range");
    switch (m.features()[c].category) {
      case FeatureCategory::lab_low:
      case FeatureCategory::lab_high: ++lab; break;
      case FeatureCategory::medication: ++med; break;
      case FeatureCategory::procedure: ++proc; break;
      case FeatureCategory::comorbidity: ++comor; break;
    }
  }
  const double denom = static_cast<double>(k) / 100.0;
  comp.lab = static_cast<double>(lab) / denom;
  comp.medication = static_cast<double>(med) / denom;
  comp.procedure = static_cast<double>(proc) / denom;
  comp.comorbidity = static_cast<double>(comor) / denom;
  comp.defined = true;
  return comp;
}

std::vector<TopFeature> top_features(const FeatureMatrix& m,
                                     std::span<const uint32_t> ranked_cols,
                                     std::span<const double> score_by_col,
                                     size_t n) {
  if (n > ranked_cols.size()) {
    fail("ablation: top_features n exceeds ranking length");
  }
  std::vector<TopFeature> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const uint32_t c = ranked_cols[i];
    if (c >= m.cols() || c >= score_by_col.size()) {
      fail("ablation: ranked column out of range");
    }
    const FeatureId& f = m.features()[c];
    out.push_back({prefixed_name(f.category, f.code), score_by_col[c]});
  }
  return out;
}

AblationReport run_ablation(const LabeledDataset& dataset,
                            const AblationSchedule& schedule,
                            const SplitPlan& plan,
                            const AblationOptions& options) {
  dataset.validate();
  if (plan.fold_of.size() != dataset.labels.size()) {
    fail("ablation: split plan does not match dataset");
  }
  const size_t n_cols = dataset.matrix.cols();
  const uint32_t n_reps = plan.n_folds;

  AblationReport report;
  report.schedule = schedule.truncate(n_cols, &report.truncation_warning);
  const std::vector<uint32_t>& ks = report.schedule.ks;

  report.per_rep.assign(ks.size(), std::vector<MetricBundle>(n_reps));
  // Per-repetition rankings and per-column scores, merged after the
  // parallel phase; indexing by repetition keeps the merge order-free.
  std::vector<std::vector<uint32_t>> rankings(n_reps);
  std::vector<std::vector<double>> rep_chi2(n_reps), rep_f(n_reps);
  std::vector<std::string> errors(n_reps);

  std::vector<uint32_t> all_rows(dataset.labels.size());
  for (uint32_t r = 0; r < all_rows.size(); ++r) all_rows[r] = r;

  auto run_rep = [&](uint32_t rep) {
    std::vector<uint32_t> train = plan.fold_rows(rep);
    std::vector<uint32_t> test = plan.complement_rows(rep);
    if (options.cv_mode == CvMode::standard) train.swap(test);

    const std::span<const uint32_t> ranking_rows =
        options.score_on_all_rows ? std::span<const uint32_t>(all_rows)
                                  : std::span<const uint32_t>(train);
    const std::vector<FeatureScore> scored =
        score_all(dataset, ranking_rows, options.metric);

    rankings[rep].reserve(n_cols);
    rep_chi2[rep].assign(n_cols, 0.0);
    rep_f[rep].assign(n_cols, 0.0);
    for (const FeatureScore& s : scored) {
      rankings[rep].push_back(s.feature);
      rep_chi2[rep][s.feature] = s.chi2;
      rep_f[rep][s.feature] = s.f_stat;
    }

    std::vector<uint8_t> train_labels;
    train_labels.reserve(train.size());
    for (uint32_t r : train) train_labels.push_back(dataset.labels[r]);
    std::vector<uint8_t> test_labels;
    test_labels.reserve(test.size());
    for (uint32_t r : test) test_labels.push_back(dataset.labels[r]);

    for (size_t ki = 0; ki < ks.size(); ++ki) {
      const uint32_t k = ks[ki];
      std::vector<uint32_t> keep;
      keep.reserve(n_cols - k);
      std::vector<uint8_t> removed(n_cols, 0);
      for (uint32_t i = 0; i < k; ++i) removed[rankings[rep][i]] = 1;
      for (uint32_t c = 0; c < n_cols; ++c) {
        if (!removed[c]) keep.push_back(c);
      }
      const FeatureMatrix sub = dataset.matrix.select_columns(keep);
      const LogisticModel model =
          ehrablate::train(sub, train, train_labels, options.train);
      const std::vector<double> scores = predict(model, sub, test);
      report.per_rep[ki][rep] =
          evaluate_scores(scores, test_labels, options.threshold);
    }
  };

  const size_t n_workers =
      std::max<size_t>(1, std::min<size_t>(options.threads, n_reps));
  if (n_workers == 1) {
    for (uint32_t rep = 0; rep < n_reps; ++rep) {
      try {
        run_rep(rep);
      } catch (const std::exception& e) {
        fail("ablation: repetition " + std::to_string(rep) + ": " + e.what());
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
        fail("ablation: repetition " + std::to_string(rep) + ": " + errors[rep]);
      }
    }
  }

  report.mean_per_k.reserve(ks.size());
  for (size_t ki = 0; ki < ks.size(); ++ki) {
    report.mean_per_k.push_back(mean_bundle(report.per_rep[ki]));
  }

  // Consensus ranking: median rank position per column across repetitions.
  std::vector<double> median_rank(n_cols);
  {
    std::vector<std::vector<uint32_t>> rank_of(n_reps);
    for (uint32_t rep = 0; rep < n_reps; ++rep) {
      rank_of[rep].assign(n_cols, 0);
      for (uint32_t pos = 0; pos < n_cols; ++pos) {
        rank_of[rep][rankings[rep][pos]] = pos + 1;
      }
    }
    std::vector<uint32_t> per_rep_ranks(n_reps);
    for (uint32_t c = 0; c < n_cols; ++c) {
      for (uint32_t rep = 0; rep < n_reps; ++rep) {
        per_rep_ranks[rep] = rank_of[rep][c];
      }
      std::sort(per_rep_ranks.begin(), per_rep_ranks.end());
      const size_t h = n_reps / 2;
      median_rank[c] = n_reps % 2 == 1
                           ? static_cast<double>(per_rep_ranks[h])
                           : 0.5 * (static_cast<double>(per_rep_ranks[h - 1]) +
                                    static_cast<double>(per_rep_ranks[h]));
    }
  }
  report.consensus_ranking.resize(n_cols);
  for (uint32_t c = 0; c < n_cols; ++c) report.consensus_ranking[c] = c;
  std::sort(report.consensus_ranking.begin(), report.consensus_ranking.end(),
            [&](uint32_t a, uint32_t b) {
              return median_rank[a] != median_rank[b]
                         ? median_rank[a] < median_rank[b]
                         : a < b;
            });

  report.mean_chi2.assign(n_cols, 0.0);
  report.mean_f.assign(n_cols, 0.0);
  for (uint32_t rep = 0; rep < n_reps; ++rep) {
    for (uint32_t c = 0; c < n_cols; ++c) {
      report.mean_chi2[c] += rep_chi2[rep][c];
      report.mean_f[c] += rep_f[rep][c];
    }
  }
  for (uint32_t c = 0; c < n_cols; ++c) {
    report.mean_chi2[c] /= static_cast<double>(n_reps);
    report.mean_f[c] /= static_cast<double>(n_reps);
  }

  report.composition.reserve(ks.size());
  for (uint32_t k : ks) {
    report.composition.push_back(
        category_composition(dataset.matrix, report.consensus_ranking, k));
  }

  std::vector<double> curve;
  curve.reserve(ks.size());
  for (const MetricBundle& b : report.mean_per_k) curve.push_back(b.auc);
  report.decline = classify_decline(ks, curve, options.decline);

  report.top = top_features(
      dataset.matrix, report.consensus_ranking,
      options.metric == ScoreMetric::chi2 ? report.mean_chi2 : report.mean_f,
      std::min(options.top_n, static_cast<size_t>(n_cols)));
  return report;
}

}  // namespace ehrablate
