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

#include "ehrablate/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace ehrablate {

std::vector<std::string> default_sensitive_codes() {
  return {"042", "099", "300", "304", "305", "306", "311",
          "606", "607", "626", "628", "768", "770"};
}

namespace {

std::string_view mode_name(MatchingMode mode) {
  return mode == MatchingMode::diag_count_matched ? "diag_count_matched"
                                                  : "at_least_one_diag";
}

std::string_view mode_name(CvMode mode) {
  return mode == CvMode::one_fold_train ? "one_fold_train" : "standard";
}

std::string_view mode_name(ScoreMetric metric) {
  return metric == ScoreMetric::chi2 ? "chi2" : "anova_f";
}

[[noreturn]] void bad_value(std::string_view section, std::string_view key,
                            std::string_view value) {
  fail("config: bad value \"" + std::string(value) + "\" for " +
       std::string(key) + " in [" + std::string(section) + "]");
}

uint64_t to_u64(std::string_view value) {
  uint64_t v = 0;
  if (!parse_u64(value, v)) {
    fail("\"" + std::string(value) + "\" is not an unsigned integer");
  }
  return v;
}

double to_f64(std::string_view value) {
  double v = 0.0;
  if (!parse_double(value, v)) {
    fail("\"" + std::string(value) + "\" is not a number");
  }
  return v;
}

uint32_t to_u32(std::string_view section, std::string_view key,
                std::string_view value) {
  const uint64_t v = to_u64(value);
  if (v > UINT32_MAX) bad_value(section, key, value);
  return static_cast<uint32_t>(v);
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  for (std::string_view part : split(value, ',')) {
    const std::string_view token = trim(part);
    if (token.empty()) fail("config: empty entry in list \"" +
                            std::string(value) + "\"");
    out.emplace_back(token);
  }
  return out;
}

char parse_delimiter(std::string_view value) {
  if (value == "tab") return '\t';
  if (value.size() != 1) {
    fail("config: delimiter must be a single character or \"tab\"");
  }
  return value[0];
}

std::string delimiter_token(char delimiter) {
  if (delimiter == '\t') return "tab";
  return std::string(1, delimiter);
}

struct Parser {
  RunConfig config;
  std::string section;

  void apply(std::string_view key, std::string_view value, size_t line_no) {
    const std::string where =
        "config line " + std::to_string(line_no) + ": ";
    if (section.empty()) {
      fail(where + "key \"" + std::string(key) +
           "\" appears before any [section] header");
    }
    try {
      dispatch(key, value);
    } catch (const FatalError& e) {
      fail(where + e.what());
    }
  }

  void dispatch(std::string_view key, std::string_view value) {
    if (section == "run") {
      if (key == "seed") config.seed = to_u64(value);
      else if (key == "threads") config.threads = to_u32(section, key, value);
      else if (key == "kernels") config.kernels = value;
      else if (key == "out") config.out_dir = value;
      else unknown_key(key);
    } else if (section == "input") {
      if (key == "events") config.events_path = value;
      else if (key == "matrix_dir") config.matrix_dir = value;
      else unknown_key(key);
    } else if (section == "event_model") {
      if (key == "delimiter") config.format.delimiter = parse_delimiter(value);
      else if (key == "sensitive_codes")
        config.sensitive_codes = split_list(value);
      else unknown_key(key);
    } else if (section == "cohort") {
      if (key == "sensitive_code") config.cohort.sensitive_code = value;
      else if (key == "case_cap") config.cohort.case_cap = to_u64(value);
      else if (key == "control_pool_size")
        config.cohort.control_pool_size = to_u64(value);
      else if (key == "matching_mode") {
        if (value == "diag_count_matched")
          config.cohort.matching_mode = MatchingMode::diag_count_matched;
        else if (value == "at_least_one_diag")
          config.cohort.matching_mode = MatchingMode::at_least_one_diag;
        else bad_value(section, key, value);
      } else if (key == "feature_set_mode") {
        const auto mode = parse_feature_set_mode(value);
        if (!mode) bad_value(section, key, value);
        config.cohort.feature_set_mode = *mode;
      } else if (key == "stratum_bins") {
        config.bins.lower_bounds.clear();
        for (const std::string& token : split_list(value)) {
          config.bins.lower_bounds.push_back(to_u32(section, key, token));
        }
      } else if (key == "match_tolerance")
        config.match_tolerance = to_f64(value);
      else unknown_key(key);
    } else if (section == "scoring") {
      if (key == "metric") {
        if (value == "chi2") config.metric = ScoreMetric::chi2;
        else if (value == "anova_f") config.metric = ScoreMetric::anova_f;
        else bad_value(section, key, value);
      } else if (key == "score_scope") {
        if (value == "train_only") config.score_on_all_rows = false;
        else if (value == "all") config.score_on_all_rows = true;
        else bad_value(section, key, value);
      } else unknown_key(key);
    } else if (section == "classifier") {
      if (key == "lambda") config.train.lambda = to_f64(value);
      else if (key == "max_iterations")
        config.train.max_iterations = to_u32(section, key, value);
      else if (key == "gradient_tolerance")
        config.train.gradient_tolerance = to_f64(value);
      else unknown_key(key);
    } else if (section == "evaluation") {
      if (key == "n_folds") config.n_folds = to_u32(section, key, value);
      else if (key == "threshold") config.threshold = to_f64(value);
      else if (key == "cv_mode") {
        if (value == "one_fold_train") config.cv_mode = CvMode::one_fold_train;
        else if (value == "standard") config.cv_mode = CvMode::standard;
        else bad_value(section, key, value);
      } else unknown_key(key);
    } else if (section == "ablation") {
      if (key == "schedule") {
        config.schedule.ks.clear();
        for (const std::string& token : split_list(value)) {
          config.schedule.ks.push_back(to_u32(section, key, token));
        }
      } else if (key == "decline_preset") {
        decline_preset(value);  // validates the name
        config.decline_preset = value;
      } else if (key == "top_n") config.top_n = to_u32(section, key, value);
      else unknown_key(key);
    } else if (section == "simulation") {
      config.has_simulation = true;
      if (key == "mode") {
        const auto mode = parse_sim_mode(value);
        if (!mode) bad_value(section, key, value);
        config.simulation.mode = *mode;
      } else if (key == "n_case")
        config.simulation.n_case = to_u32(section, key, value);
      else if (key == "n_ctrl")
        config.simulation.n_ctrl = to_u32(section, key, value);
      else if (key == "n_features")
        config.simulation.n_features = to_u32(section, key, value);
      else if (key == "n_unique_case_features")
        config.simulation.n_unique_case_features = to_u32(section, key, value);
      else if (key == "n_shifted_features")
        config.simulation.n_shifted_features = to_u32(section, key, value);
      else if (key == "shift_delta")
        config.simulation.shift_delta = to_f64(value);
      else if (key == "mix_lab")
        config.simulation.mix.lab = to_f64(value);
      else if (key == "mix_medication")
        config.simulation.mix.medication = to_f64(value);
      else if (key == "mix_procedure")
        config.simulation.mix.procedure = to_f64(value);
      else if (key == "mix_comorbidity")
        config.simulation.mix.comorbidity = to_f64(value);
      else unknown_key(key);
    } else {
      fail("unknown section [" + section + "]");
    }
  }

  [[noreturn]] void unknown_key(std::string_view key) {
    fail("unknown key \"" + std::string(key) + "\" in [" + section + "]");
  }
};

}  // namespace

RunConfig parse_config(std::string_view text) {
  Parser parser;
  size_t line_no = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        fail("config line " + std::to_string(line_no) +
             ": malformed section header \"" + std::string(line) + "\"");
      }
      parser.section = std::string(trim(line.substr(1, line.size() - 2)));
      static const std::array<std::string_view, 9> kSections = {
          "run",        "input",      "event_model",
          "cohort",     "scoring",    "classifier",
          "evaluation", "ablation",   "simulation"};
      if (std::find(kSections.begin(), kSections.end(), parser.section) ==
          kSections.end()) {
        fail("config line " + std::to_string(line_no) +
             ": unknown section [" + parser.section + "]");
      }
      if (parser.section == "simulation") {
        // The section's presence alone turns simulation input on.
        parser.config.has_simulation = true;
      }
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail("config line " + std::to_string(line_no) +
           ": expected key = value, got \"" + std::string(line) + "\"");
    }
    parser.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no);
  }
  parser.config.validate();
  return parser.config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("config: cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void RunConfig::validate() const {
  if (!events_path.empty() && !matrix_dir.empty()) {
    fail("config: [input] events and matrix_dir are mutually exclusive");
  }
  if (cohort.sensitive_code.empty()) {
    fail("config: [cohort] sensitive_code must not be empty");
  }
  if (sensitive_codes.empty()) {
    fail("config: [event_model] sensitive_codes must not be empty");
  }
  bins.validate();
  schedule.validate();
  ehrablate::decline_preset(decline_preset);  // validates the preset name
  if (match_tolerance < 0.0 || match_tolerance > 1.0) {
    fail("config: [cohort] match_tolerance must lie in [0,1]");
  }
  if (threshold < 0.0 || threshold > 1.0) {
    fail("config: [evaluation] threshold must lie in [0,1]");
  }
  if (n_folds < 2) {
    fail("config: [evaluation] n_folds must be at least 2");
  }
  if (threads == 0) {
    fail("config: [run] threads must be at least 1");
  }
  if (train.lambda < 0.0) {
    fail("config: [classifier] lambda must be non-negative");
  }
  if (has_simulation) simulation.validate();
}

namespace {

template <typename T>
std::string join_list(const std::vector<T>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, std::string>) {
      out += values[i];
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

}  // namespace

std::string serialize_config(const RunConfig& c, bool include_seed) {
  std::string out;
  out += "[run]\n";
  if (include_seed) out += "seed = " + std::to_string(c.seed) + "\n";
  out += "kernels = " + c.kernels + "\n";
  if (!c.events_path.empty() || !c.matrix_dir.empty()) {
    out += "\n[input]\n";
    if (!c.events_path.empty()) out += "events = " + c.events_path + "\n";
    if (!c.matrix_dir.empty()) out += "matrix_dir = " + c.matrix_dir + "\n";
  }
  out += "\n[event_model]\n";
  out += "delimiter = " + delimiter_token(c.format.delimiter) + "\n";
  out += "sensitive_codes = " + join_list(c.sensitive_codes) + "\n";
  out += "\n[cohort]\n";
  out += "sensitive_code = " + c.cohort.sensitive_code + "\n";
  out += "case_cap = " + std::to_string(c.cohort.case_cap) + "\n";
  out += "control_pool_size = " + std::to_string(c.cohort.control_pool_size) +
         "\n";
  out += "matching_mode = " + std::string(mode_name(c.cohort.matching_mode)) +
         "\n";
  out += "feature_set_mode = " +
         std::string(to_string(c.cohort.feature_set_mode)) + "\n";
  out += "stratum_bins = " + join_list(c.bins.lower_bounds) + "\n";
  out += "match_tolerance = " + format_double(c.match_tolerance) + "\n";
  out += "\n[scoring]\n";
  out += "metric = " + std::string(mode_name(c.metric)) + "\n";
  out += std::string("score_scope = ") +
         (c.score_on_all_rows ? "all" : "train_only") + "\n";
  out += "\n[classifier]\n";
  out += "lambda = " + format_double(c.train.lambda) + "\n";
  out += "max_iterations = " + std::to_string(c.train.max_iterations) + "\n";
  out += "gradient_tolerance = " + format_double(c.train.gradient_tolerance) +
         "\n";
  out += "\n[evaluation]\n";
  out += "n_folds = " + std::to_string(c.n_folds) + "\n";
  out += "threshold = " + format_double(c.threshold) + "\n";
  out += "cv_mode = " + std::string(mode_name(c.cv_mode)) + "\n";
  out += "\n[ablation]\n";
  out += "schedule = " + join_list(c.schedule.ks) + "\n";
  out += "decline_preset = " + c.decline_preset + "\n";
  out += "top_n = " + std::to_string(c.top_n) + "\n";
  if (c.has_simulation) {
    const SimSpec& s = c.simulation;
    out += "\n[simulation]\n";
    out += "mode = " + std::string(to_string(s.mode)) + "\n";
    out += "n_case = " + std::to_string(s.n_case) + "\n";
    out += "n_ctrl = " + std::to_string(s.n_ctrl) + "\n";
    out += "n_features = " + std::to_string(s.n_features) + "\n";
    out += "n_unique_case_features = " +
           std::to_string(s.n_unique_case_features) + "\n";
    out += "n_shifted_features = " + std::to_string(s.n_shifted_features) +
           "\n";
    out += "shift_delta = " + format_double(s.shift_delta) + "\n";
    out += "mix_lab = " + format_double(s.mix.lab) + "\n";
    out += "mix_medication = " + format_double(s.mix.medication) + "\n";
    out += "mix_procedure = " + format_double(s.mix.procedure) + "\n";
    out += "mix_comorbidity = " + format_double(s.mix.comorbidity) + "\n";
  }
  return out;
}

uint64_t config_hash(const RunConfig& config) {
  return fnv1a64(serialize_config(config, /*include_seed=*/false));
}

}  // namespace ehrablate
