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
// Run configuration. INI-style files with [section] headers and
// `key = value` lines; `#` or `;` start a comment. Unknown sections and
// keys are fatal, so a typo cannot silently fall back to a default.
// serialize_config() emits the fully resolved configuration in canonical
// order; parsing that output and serializing again reproduces it byte for
// byte. The output directory and thread count are execution details, not
// part of the configuration identity, and are excluded from the
// serialized form (and so from the config hash).

#ifndef EHRABLATE_CONFIG_HPP_
#define EHRABLATE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ehrablate/ablation.hpp"
#include "ehrablate/classifier.hpp"
#include "ehrablate/cohort.hpp"
#include "ehrablate/evaluation.hpp"
#include "ehrablate/event_model.hpp"
#include "ehrablate/scoring.hpp"
#include "ehrablate/simulation.hpp"

namespace ehrablate {

// Diagnosis code prefixes treated as sensitive by default: sexually
// transmitted diseases, mental disorders, drug dependence and abuse,
// reproductive disorders, and conditions of the newborn.
std::vector<std::string> default_sensitive_codes();

struct RunConfig {
  // [run]
  uint64_t seed = 1;
  uint32_t threads = 1;
  std::string kernels = "auto";
  std::string out_dir = "out";

  // [input] (at most one of the two; empty = unset)
  std::string events_path;
  std::string matrix_dir;

  // [event_model]
  FormatConfig format;
  std::vector<std::string> sensitive_codes = default_sensitive_codes();

  // [cohort] (CohortSpec.seed is derived from the run seed, never read
  // from the file)
  CohortSpec cohort{.sensitive_code = "311"};
  StratumBins bins;
  double match_tolerance = 0.02;

  // [scoring]
  ScoreMetric metric = ScoreMetric::chi2;
  bool score_on_all_rows = false;

  // [classifier]
  TrainConfig train;

  // [evaluation]
  uint32_t n_folds = 10;
  double threshold = 0.5;
  CvMode cv_mode = CvMode::one_fold_train;

  // [ablation]
  AblationSchedule schedule;
  std::string decline_preset = "default";
  uint32_t top_n = 10;

  // [simulation] (present only when the section appears; SimSpec.seed is
  // derived from the run seed)
  bool has_simulation = false;
  SimSpec simulation;

  void validate() const;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

// Canonical resolved form. `include_seed=false` drops the seed line; the
// hash uses that variant so reseeded runs of one configuration share a
// hash (the seed is reported separately everywhere the hash appears).
std::string serialize_config(const RunConfig& config, bool include_seed = true);
uint64_t config_hash(const RunConfig& config);

}  // namespace ehrablate

#endif  // EHRABLATE_CONFIG_HPP_
