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

#include "ehrablate/pipeline.hpp"

#include <cstdlib>
#include <iostream>

#include "ehrablate/ablation.hpp"
#include "ehrablate/cohort.hpp"
#include "ehrablate/kernels.hpp"
#include "ehrablate/report.hpp"
#include "ehrablate/simulation.hpp"

namespace ehrablate {

RunConfig resolve_config(const CommandOptions& options) {
  RunConfig config;
  if (!options.config_path.empty()) {
    config = load_config(options.config_path);
  }
  if (options.seed) config.seed = *options.seed;
  if (options.out_dir) config.out_dir = *options.out_dir;
  if (options.threads) config.threads = *options.threads;
  config.validate();

  const char* env = std::getenv("EHRABLATE_KERNELS");
  if (env && *env) {
    kernels::set_active("auto");  // the environment resolves inside
  } else if (!kernels::set_active(config.kernels)) {
    fail("unknown or unsupported kernels variant \"" + config.kernels + "\"");
  }
  return config;
}

namespace {

void report_ingest(const IngestResult& ingest) {
  for (const std::string& w : ingest.warnings) {
    std::cerr << kToolName << ": warning: " << w << "\n";
  }
  if (ingest.skipped_rows > 0) {
    std::cerr << kToolName << ": warning: skipped " << ingest.skipped_rows
              << " malformed event row(s)\n";
  }
}

struct AuditData {
  LabeledDataset dataset;
  std::string disease;
  nlohmann::ordered_json extra;
};

// Splits the encoded population into the target cohort, the other
// sensitive cohorts, and the non-sensitive pool; samples controls from the
// pool; assembles the labeled case/control dataset. Writes the diagnosis
// burden histograms and the matching report along the way.
AuditData assemble_cohort(const RunConfig& config, const FeatureMatrix& full,
                          const PatientDiagnoses& diag, OutputDir& out) {
  if (diag.patient_ids != full.patient_ids()) {
    fail("audit: diagnosis records do not match the feature matrix patients");
  }
  const std::vector<std::string> target_prefix{config.cohort.sensitive_code};
  std::vector<uint32_t> case_rows, other_sensitive, pool_rows;
  std::vector<uint32_t> target_counts, pool_counts;
  for (uint32_t r = 0; r < full.rows(); ++r) {
    const std::vector<std::string>& codes = diag.codes[r];
    bool is_case = false, is_sensitive = false;
    for (const std::string& code : codes) {
      if (matches_sensitive_prefix(code, target_prefix)) is_case = true;
      if (matches_sensitive_prefix(code, config.sensitive_codes)) {
        is_sensitive = true;
      }
    }
    const uint32_t count = static_cast<uint32_t>(codes.size());
    if (is_case) {
      case_rows.push_back(r);
      target_counts.push_back(count);
    } else if (is_sensitive) {
      other_sensitive.push_back(r);
      target_counts.push_back(count);
    } else if (count > 0) {
      pool_rows.push_back(r);
      pool_counts.push_back(count);
    }
  }
  if (case_rows.empty()) {
    fail("audit: no patient carries a diagnosis matching prefix \"" +
         config.cohort.sensitive_code + "\"");
  }

  std::vector<uint32_t> selected_rows;
  std::vector<uint32_t> selected_counts;
  AuditData data;
  if (config.cohort.matching_mode == MatchingMode::diag_count_matched) {
    const MatchResult match = match_diag_counts(
        pool_counts, target_counts, config.cohort.control_pool_size,
        config.bins, derive_seed(config.seed, "match"));
    for (uint32_t pos : match.selected) {
      selected_rows.push_back(pool_rows[pos]);
      selected_counts.push_back(pool_counts[pos]);
    }
    {
      auto f = out.create("matching.csv");
      write_matching(f, match, config.bins);
    }
    data.extra["tv_distance"] = match.tv_distance;
    data.extra["match_within_tolerance"] =
        match.tv_distance <= config.match_tolerance;
    if (match.tv_distance > config.match_tolerance) {
      std::cerr << kToolName << ": warning: control matching off target "
                << "(total variation " << format_double(match.tv_distance)
                << " > " << format_double(config.match_tolerance) << ")\n";
    }
  } else {
    for (uint32_t pos :
         sample_uniform(pool_rows.size(), config.cohort.control_pool_size,
                        derive_seed(config.seed, "match"))) {
      selected_rows.push_back(pool_rows[pos]);
      selected_counts.push_back(pool_counts[pos]);
    }
  }
  {
    auto f = out.create("target_histogram.csv");
    write_histogram(f, diag_count_histogram(target_counts));
  }
  {
    auto f = out.create("pool_histogram.csv");
    write_histogram(f, diag_count_histogram(pool_counts));
  }
  {
    auto f = out.create("selected_histogram.csv");
    write_histogram(f, diag_count_histogram(selected_counts));
  }

  CohortSpec spec = config.cohort;
  spec.seed = derive_seed(config.seed, "cohort");
  data.dataset =
      build_case_control(full, case_rows, other_sensitive, selected_rows, spec);
  data.disease = config.cohort.sensitive_code;
  {
    auto f = out.create("patients_cases.txt");
    write_patient_list(f, data.dataset.matrix, data.dataset.case_rows());
  }
  {
    auto f = out.create("patients_controls.txt");
    write_patient_list(f, data.dataset.matrix, data.dataset.control_rows());
  }
  return data;
}

AuditData assemble_audit_data(const RunConfig& config, OutputDir& out) {
  if (config.has_simulation) {
    if (!config.events_path.empty() || !config.matrix_dir.empty()) {
      fail("audit: [simulation] and [input] are mutually exclusive");
    }
    SimSpec spec = config.simulation;
    spec.seed = derive_seed(config.seed, "simulate");
    AuditData data;
    data.dataset = simulate(spec);
    data.disease = std::string(to_string(spec.mode));
    return data;
  }
  if (!config.events_path.empty()) {
    IngestResult ingest = ingest_events(config.events_path, config.format);
    report_ingest(ingest);
    const FeatureMatrix full =
        encode(ingest.records, EncodeOptions{config.sensitive_codes});
    const PatientDiagnoses diag = collect_diagnoses(ingest.records);
    return assemble_cohort(config, full, diag, out);
  }
  if (!config.matrix_dir.empty()) {
    const FeatureMatrix full = read_feature_matrix(config.matrix_dir);
    const PatientDiagnoses diag = read_diagnoses(config.matrix_dir);
    return assemble_cohort(config, full, diag, out);
  }
  fail("audit: configure [input] events, [input] matrix_dir, or a "
       "[simulation] section");
}

}  // namespace

void cmd_encode(const CommandOptions& options) {
  const RunConfig config = resolve_config(options);
  if (config.events_path.empty()) {
    fail("encode: configure [input] events");
  }
  OutputDir out(config.out_dir, "encode", config.seed, config_hash(config));
  out.prepare(options.force);

  IngestResult ingest = ingest_events(config.events_path, config.format);
  report_ingest(ingest);
  const FeatureMatrix matrix =
      encode(ingest.records, EncodeOptions{config.sensitive_codes});
  const PatientDiagnoses diag = collect_diagnoses(ingest.records);

  for (const std::string& name :
       write_feature_matrix(matrix, out.dir(), out.header())) {
    out.note(name);
  }
  for (const std::string& name :
       write_diagnoses(diag, out.dir(), out.header())) {
    out.note(name);
  }
  {
    auto f = out.create("census.txt");
    write_census(f, feature_census(matrix));
  }
  out.create("config_resolved.ini") << serialize_config(config);

  nlohmann::ordered_json extra;
  extra["patients"] = matrix.rows();
  extra["features"] = matrix.cols();
  extra["skipped_rows"] = ingest.skipped_rows;
  out.finalize(extra);
}

void cmd_audit(const CommandOptions& options) {
  const RunConfig config = resolve_config(options);
  OutputDir out(config.out_dir, "audit", config.seed, config_hash(config));
  out.prepare(options.force);

  AuditData data = assemble_audit_data(config, out);
  const LabeledDataset& dataset = data.dataset;
  {
    auto f = out.create("census.txt");
    write_census(f, feature_census(dataset.matrix));
  }

  const SplitPlan plan = make_splits(dataset.labels, config.n_folds,
                                     derive_seed(config.seed, "splits"));
  AblationOptions ablation;
  ablation.metric = config.metric;
  ablation.score_on_all_rows = config.score_on_all_rows;
  ablation.train = config.train;
  ablation.threshold = config.threshold;
  ablation.cv_mode = config.cv_mode;
  ablation.decline = decline_preset(config.decline_preset);
  ablation.top_n = config.top_n;
  ablation.threads = config.threads;
  const AblationReport report =
      run_ablation(dataset, config.schedule, plan, ablation);

  const std::vector<uint32_t>& ks = report.schedule.ks;
  std::vector<double> mean_aucs;
  for (const MetricBundle& b : report.mean_per_k) mean_aucs.push_back(b.auc);
  out.create("grid.csv") << grid_header(ks) << "\n"
                         << grid_row(data.disease, mean_aucs) << "\n";
  out.create("grid_flags.csv") << grid_header(ks) << "\n"
                               << grid_flag_row(data.disease, mean_aucs)
                               << "\n";
  {
    auto f = out.create("metrics.csv");
    write_metrics(f, data.disease, ks, report.per_rep, report.mean_per_k);
  }
  {
    auto f = out.create("roc.csv");
    write_roc(f, data.disease, ks, report.per_rep, report.mean_per_k);
  }
  {
    auto f = out.create("scores.csv");
    write_scores(f, dataset.matrix, report.consensus_ranking, report.mean_chi2,
                 report.mean_f);
  }
  {
    auto f = out.create("top_features.csv");
    write_top_features(f, report.top);
  }
  {
    auto f = out.create("composition.csv");
    write_composition(f, ks, report.composition);
  }
  out.create("decline.txt") << "disease,category\n"
                            << data.disease << ','
                            << to_string(report.decline) << "\n";
  out.create("config_resolved.ini") << serialize_config(config);

  nlohmann::ordered_json extra;
  extra["disease"] = data.disease;
  extra["decline"] = to_string(report.decline);
  extra["n_cases"] = dataset.case_rows().size();
  extra["n_controls"] = dataset.control_rows().size();
  extra["n_features"] = dataset.matrix.cols();
  if (!report.truncation_warning.empty()) {
    extra["truncation"] = report.truncation_warning;
    std::cerr << kToolName << ": warning: " << report.truncation_warning
              << "\n";
  }
  for (const auto& [key, value] : data.extra.items()) extra[key] = value;
  out.finalize(extra);
}

void cmd_simulate(const CommandOptions& options) {
  const RunConfig config = resolve_config(options);
  OutputDir out(config.out_dir, "simulate", config.seed, config_hash(config));
  out.prepare(options.force);

  std::vector<SimMode> panels{SimMode::shared_p, SimMode::independent_p};
  if (config.has_simulation && config.simulation.mode == SimMode::planted) {
    panels.push_back(SimMode::planted);
  }

  nlohmann::ordered_json mean_auc;
  auto summary = out.create("summary.csv");
  summary << "mode,mean_auc\n";
  for (SimMode mode : panels) {
    const std::string label(to_string(mode));
    SimSpec spec = config.simulation;
    spec.mode = mode;
    if (mode != SimMode::planted) {
      // The baseline panels reuse the cohort shape but not the plant.
      spec.n_unique_case_features = 0;
      spec.n_shifted_features = 0;
      spec.shift_delta = 0.0;
    }
    spec.seed = derive_seed(config.seed, label);
    const LabeledDataset dataset = simulate(spec);

    const SplitPlan plan =
        make_splits(dataset.labels, config.n_folds,
                    derive_seed(config.seed, "splits-" + label));
    CvOptions cv_options;
    cv_options.threshold = config.threshold;
    cv_options.mode = config.cv_mode;
    cv_options.threads = config.threads;
    const CvResult cv =
        cross_validate(dataset.labels, plan,
                       classifier_pipeline(dataset, config.train), cv_options);

    const std::vector<uint32_t> k0{0};
    const std::vector<std::vector<MetricBundle>> per_rep{cv.per_repetition};
    const std::vector<MetricBundle> mean{cv.mean};
    {
      auto f = out.create("metrics_" + label + ".csv");
      write_metrics(f, label, k0, per_rep, mean);
    }
    {
      auto f = out.create("roc_" + label + ".csv");
      write_roc(f, label, k0, per_rep, mean);
    }
    {
      auto f = out.create("gaps_" + label + ".csv");
      write_gap_curve(f, prevalence_gap_curve(dataset));
    }
    summary << label << ',' << format_double(cv.mean.auc) << "\n";
    mean_auc[label] = cv.mean.auc;
  }
  summary.close();
  out.create("config_resolved.ini") << serialize_config(config);

  nlohmann::ordered_json extra;
  extra["mean_auc"] = mean_auc;
  out.finalize(extra);
}

void cmd_report_merge(const std::vector<std::filesystem::path>& inputs,
                      const std::filesystem::path& out_path, bool force) {
  const std::string header = std::string(kToolName) + " " +
                             std::string(kToolVersion) +
                             " command=report-merge";
  merge_grid_files(inputs, out_path, force, header);
}

}  // namespace ehrablate
