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
// Result emission. Every output file opens with one `# tool/seed/config`
// comment line and a manifest.json closes the run, so a directory is
// self-describing and two runs of the same configuration produce byte-
// identical trees (nothing here writes a timestamp, hostname, or path).

#ifndef EHRABLATE_REPORT_HPP_
#define EHRABLATE_REPORT_HPP_

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ehrablate/ablation.hpp"
#include "ehrablate/cohort.hpp"
#include "ehrablate/evaluation.hpp"
#include "ehrablate/event_model.hpp"

namespace ehrablate {

// One run's output directory. prepare() refuses to touch a directory that
// already holds a manifest unless forced; finalize() writes the manifest
// listing every file created through this object.
class OutputDir {
 public:
  OutputDir(std::filesystem::path dir, std::string command, uint64_t seed,
            uint64_t config_hash);

  void prepare(bool force);
  std::ofstream create(std::string_view name);
  // Records a file written into the directory by other means, so the
  // manifest still lists it.
  void note(std::string_view name);
  void finalize(const nlohmann::ordered_json& extra = {});

  const std::filesystem::path& dir() const { return dir_; }
  std::string header() const;

 private:
  std::filesystem::path dir_;
  std::string command_;
  uint64_t seed_ = 0;
  uint64_t config_hash_ = 0;
  std::vector<std::string> files_;
  bool finalized_ = false;
};

// AUC-by-removal grid, one disease per row. Column "All" is the intact
// feature set (k = 0); the rest are the cumulative removal depths.
std::string grid_header(std::span<const uint32_t> ks);
std::string grid_row(std::string_view disease, std::span<const double> aucs);
// Same layout, each cell ok / lt0.7 / lt0.6 (the lower band wins).
std::string grid_flag_row(std::string_view disease,
                          std::span<const double> aucs);

// Concatenates grid files that share a header into one; comment lines are
// dropped and a fresh header comment is written. Refuses an existing
// output file unless forced.
void merge_grid_files(std::span<const std::filesystem::path> inputs,
                      const std::filesystem::path& out_path, bool force,
                      const std::string& header_comment);

void write_metrics(std::ostream& out, std::string_view disease,
                   std::span<const uint32_t> ks,
                   std::span<const std::vector<MetricBundle>> per_rep,
                   std::span<const MetricBundle> mean_per_k);
void write_roc(std::ostream& out, std::string_view disease,
               std::span<const uint32_t> ks,
               std::span<const std::vector<MetricBundle>> per_rep,
               std::span<const MetricBundle> mean_per_k);
void write_scores(std::ostream& out, const FeatureMatrix& matrix,
                  std::span<const uint32_t> consensus_ranking,
                  std::span<const double> mean_chi2,
                  std::span<const double> mean_f);
void write_top_features(std::ostream& out, std::span<const TopFeature> top);
void write_composition(std::ostream& out, std::span<const uint32_t> ks,
                       std::span<const CategoryComposition> per_k);
void write_census(std::ostream& out, const FeatureCensus& census);
void write_gap_curve(std::ostream& out, std::span<const double> gaps);
void write_histogram(std::ostream& out,
                     std::span<const std::pair<uint32_t, uint64_t>> histogram);
void write_matching(std::ostream& out, const MatchResult& result,
                    const StratumBins& bins);
void write_patient_list(std::ostream& out, const FeatureMatrix& matrix,
                        std::span<const uint32_t> rows);

}  // namespace ehrablate

#endif  // EHRABLATE_REPORT_HPP_
