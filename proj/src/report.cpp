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

#include "ehrablate/report.hpp"

#include <algorithm>
#include <cstdio>

#include "ehrablate/util.hpp"

namespace ehrablate {

namespace {

std::string hex16(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

OutputDir::OutputDir(std::filesystem::path dir, std::string command,
                     uint64_t seed, uint64_t config_hash)
    : dir_(std::move(dir)),
      command_(std::move(command)),
      seed_(seed),
      config_hash_(config_hash) {}

std::string OutputDir::header() const {
  return std::string(kToolName) + " " + std::string(kToolVersion) +
         " command=" + command_ + " seed=" + std::to_string(seed_) +
         " config=" + hex16(config_hash_);
}

void OutputDir::prepare(bool force) {
  if (std::filesystem::exists(dir_ / "manifest.json") && !force) {
    fail("output directory " + dir_.string() +
         " already holds results; pass --force to overwrite");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) fail("cannot create output directory " + dir_.string());
}

std::ofstream OutputDir::create(std::string_view name) {
  const std::filesystem::path path = dir_ / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot create output file " + path.string());
  out << "# " << header() << "\n";
  files_.emplace_back(name);
  return out;
}

void OutputDir::note(std::string_view name) { files_.emplace_back(name); }

void OutputDir::finalize(const nlohmann::ordered_json& extra) {
  if (finalized_) fail("output directory finalized twice");
  finalized_ = true;
  nlohmann::ordered_json manifest;
  manifest["tool"] = kToolName;
  manifest["version"] = kToolVersion;
  manifest["command"] = command_;
  manifest["seed"] = seed_;
  manifest["config"] = hex16(config_hash_);
  std::sort(files_.begin(), files_.end());
  manifest["files"] = files_;
  if (extra.is_object()) {
    for (const auto& [key, value] : extra.items()) manifest[key] = value;
  }
  const std::filesystem::path path = dir_ / "manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot create " + path.string());
  out << manifest.dump(2) << "\n";
}

std::string grid_header(std::span<const uint32_t> ks) {
  if (ks.empty() || ks[0] != 0) {
    fail("grid: removal schedule must start at 0");
  }
  std::string out = "disease,All";
  for (size_t i = 1; i < ks.size(); ++i) {
    out += "," + std::to_string(ks[i]);
  }
  return out;
}

std::string grid_row(std::string_view disease, std::span<const double> aucs) {
  std::string out(disease);
  for (double v : aucs) out += "," + format_fixed(v, 3);
  return out;
}

std::string grid_flag_row(std::string_view disease,
                          std::span<const double> aucs) {
  std::string out(disease);
  for (double v : aucs) {
    out += ",";
    out += v < 0.6 ? "lt0.6" : (v < 0.7 ? "lt0.7" : "ok");
  }
  return out;
}

void merge_grid_files(std::span<const std::filesystem::path> inputs,
                      const std::filesystem::path& out_path, bool force,
                      const std::string& header_comment) {
  if (inputs.empty()) fail("merge: no input files given");
  if (std::filesystem::exists(out_path) && !force) {
    fail("output file " + out_path.string() +
         " already exists; pass --force to overwrite");
  }
  std::string header;
  std::vector<std::string> rows;
  for (const std::filesystem::path& input : inputs) {
    std::ifstream in(input, std::ios::binary);
    if (!in) fail("merge: cannot open " + input.string());
    std::string line;
    bool seen_header = false;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string_view trimmed = trim(line);
      if (trimmed.empty() || trimmed[0] == '#') continue;
      if (!seen_header) {
        seen_header = true;
        if (header.empty()) {
          header = std::string(trimmed);
        } else if (header != trimmed) {
          fail("merge: " + input.string() +
               " has a different column header than the first input");
        }
        continue;
      }
      rows.emplace_back(trimmed);
    }
    if (!seen_header) {
      fail("merge: " + input.string() + " contains no table");
    }
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) fail("merge: cannot create " + out_path.string());
  out << "# " << header_comment << "\n" << header << "\n";
  for (const std::string& row : rows) out << row << "\n";
}

namespace {

void metric_row(std::ostream& out, std::string_view disease, uint32_t k,
                std::string_view rep, const MetricBundle& b) {
  out << disease << ',' << k << ',' << rep << ",auc," << format_double(b.auc)
      << "\n";
  out << disease << ',' << k << ',' << rep << ",precision,"
      << format_double(b.precision) << "\n";
  out << disease << ',' << k << ',' << rep << ",recall,"
      << format_double(b.recall) << "\n";
  out << disease << ',' << k << ',' << rep << ",f_measure,"
      << format_double(b.f_measure) << "\n";
  out << disease << ',' << k << ',' << rep << ",precision_defined,"
      << (b.precision_defined ? 1 : 0) << "\n";
}

void roc_rows(std::ostream& out, std::string_view disease, uint32_t k,
              std::string_view rep, const MetricBundle& b) {
  for (const RocPoint& p : b.roc_points) {
    out << disease << ',' << k << ',' << rep << ',' << format_double(p.fpr)
        << ',' << format_double(p.tpr) << "\n";
  }
}

}  // namespace

void write_metrics(std::ostream& out, std::string_view disease,
                   std::span<const uint32_t> ks,
                   std::span<const std::vector<MetricBundle>> per_rep,
                   std::span<const MetricBundle> mean_per_k) {
  out << "disease,k,repetition,metric,value\n";
  for (size_t ki = 0; ki < ks.size(); ++ki) {
    for (size_t rep = 0; rep < per_rep[ki].size(); ++rep) {
      metric_row(out, disease, ks[ki], std::to_string(rep), per_rep[ki][rep]);
    }
    metric_row(out, disease, ks[ki], "mean", mean_per_k[ki]);
  }
}

void write_roc(std::ostream& out, std::string_view disease,
               std::span<const uint32_t> ks,
               std::span<const std::vector<MetricBundle>> per_rep,
               std::span<const MetricBundle> mean_per_k) {
  out << "disease,k,repetition,fpr,tpr\n";
  for (size_t ki = 0; ki < ks.size(); ++ki) {
    for (size_t rep = 0; rep < per_rep[ki].size(); ++rep) {
      roc_rows(out, disease, ks[ki], std::to_string(rep), per_rep[ki][rep]);
    }
    roc_rows(out, disease, ks[ki], "mean", mean_per_k[ki]);
  }
}

void write_scores(std::ostream& out, const FeatureMatrix& matrix,
                  std::span<const uint32_t> consensus_ranking,
                  std::span<const double> mean_chi2,
                  std::span<const double> mean_f) {
  out << "rank,category,code,chi2,f_stat\n";
  for (size_t i = 0; i < consensus_ranking.size(); ++i) {
    const uint32_t col = consensus_ranking[i];
    const FeatureId& f = matrix.features()[col];
    out << (i + 1) << ',' << to_string(f.category) << ',' << f.code << ','
        << format_double(mean_chi2[col]) << ',' << format_double(mean_f[col])
        << "\n";
  }
}

void write_top_features(std::ostream& out, std::span<const TopFeature> top) {
  out << "rank,prefixed_name,score\n";
  for (size_t i = 0; i < top.size(); ++i) {
    out << (i + 1) << ',' << top[i].prefixed_name << ','
        << format_double(top[i].score) << "\n";
  }
}

void write_composition(std::ostream& out, std::span<const uint32_t> ks,
                       std::span<const CategoryComposition> per_k) {
  out << "k,defined,lab,medication,procedure,comorbidity\n";
  for (size_t i = 0; i < ks.size(); ++i) {
    const CategoryComposition& c = per_k[i];
    out << ks[i] << ',' << (c.defined ? 1 : 0) << ',' << format_double(c.lab)
        << ',' << format_double(c.medication) << ','
        << format_double(c.procedure) << ',' << format_double(c.comorbidity)
        << "\n";
  }
}

void write_census(std::ostream& out, const FeatureCensus& census) {
  out << "lab_low," << census.lab_low << "\n";
  out << "lab_high," << census.lab_high << "\n";
  out << "medication," << census.medication << "\n";
  out << "procedure," << census.procedure << "\n";
  out << "comorbidity," << census.comorbidity << "\n";
  out << "distinct_lab_codes," << census.distinct_lab_codes << "\n";
  out << "total_columns," << census.total_columns() << "\n";
}

void write_gap_curve(std::ostream& out, std::span<const double> gaps) {
  out << "index,gap\n";
  for (size_t i = 0; i < gaps.size(); ++i) {
    out << i << ',' << format_double(gaps[i]) << "\n";
  }
}

void write_histogram(std::ostream& out,
                     std::span<const std::pair<uint32_t, uint64_t>> histogram) {
  out << "diag_count,patients\n";
  for (const auto& [count, patients] : histogram) {
    out << count << ',' << patients << "\n";
  }
}

void write_matching(std::ostream& out, const MatchResult& result,
                    const StratumBins& bins) {
  out << "stratum,target_proportion,desired,selected,shortfall\n";
  for (size_t b = 0; b < bins.size(); ++b) {
    out << bins.label(b) << ',' << format_double(result.target_proportions[b])
        << ',' << result.desired_counts[b] << ',' << result.selected_counts[b]
        << ',' << result.shortfall[b] << "\n";
  }
  out << "tv_distance," << format_double(result.tv_distance) << "\n";
}

void write_patient_list(std::ostream& out, const FeatureMatrix& matrix,
                        std::span<const uint32_t> rows) {
  for (uint32_t r : rows) out << matrix.patient_ids()[r] << "\n";
}

}  // namespace ehrablate
