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

#include "ehrablate/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace ehrablate {

std::string_view to_string(SimMode mode) {
  switch (mode) {
    case SimMode::shared_p: return "shared_p";
    case SimMode::independent_p: return "independent_p";
    case SimMode::planted: return "planted";
  }
  return "?";
}

std::optional<SimMode> parse_sim_mode(std::string_view token) {
  if (token == "shared_p") return SimMode::shared_p;
  if (token == "independent_p") return SimMode::independent_p;
  if (token == "planted") return SimMode::planted;
  return std::nullopt;
}

void SimSpec::validate() const {
  if (n_case == 0 || n_ctrl == 0) fail("simulation: both groups must be non-empty");
  if (n_features == 0) fail("simulation: need at least one feature");
  if (static_cast<uint64_t>(n_unique_case_features) + n_shifted_features >
      n_features) {
    fail("simulation: planted feature counts exceed n_features");
  }
  if (shift_delta < 0.0 || shift_delta > 1.0) {
    fail("simulation: shift_delta must lie in [0,1]");
  }
  if (mode != SimMode::planted &&
      (n_unique_case_features > 0 || n_shifted_features > 0 ||
       shift_delta != 0.0)) {
    fail("simulation: planted-mode settings require mode=planted");
  }
  const double mix_sum = mix.lab + mix.medication + mix.procedure + mix.comorbidity;
  if (mix.lab < 0 || mix.medication < 0 || mix.procedure < 0 ||
      mix.comorbidity < 0 || std::fabs(mix_sum - 1.0) > 1e-6) {
    fail("simulation: category mix must be non-negative and sum to 1");
  }
}

namespace {

struct CategoryCounts {
  size_t lab_low = 0, lab_high = 0, medication = 0, procedure = 0,
         comorbidity = 0;
};

CategoryCounts split_by_mix(uint32_t n_features, const CategoryMix& mix) {
  CategoryCounts c;
  const size_t n_lab = static_cast<size_t>(
      std::llround(mix.lab * static_cast<double>(n_features)));
  c.lab_low = (n_lab + 1) / 2;
  c.lab_high = n_lab / 2;
  c.medication = static_cast<size_t>(
      std::llround(mix.medication * static_cast<double>(n_features)));
  c.procedure = static_cast<size_t>(
      std::llround(mix.procedure * static_cast<double>(n_features)));
  const size_t assigned = n_lab + c.medication + c.procedure;
  if (assigned > n_features) {
    fail("simulation: category mix rounding exceeds n_features");
  }
  c.comorbidity = n_features - assigned;
  return c;
}

std::string padded_code(std::string_view prefix, size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%05zu", std::string(prefix).c_str(), i);
  return buf;
}

// Canonical-order feature ids: zero-padded codes keep lexicographic order
// equal to numeric order within each category.
std::vector<FeatureId> synthetic_features(const CategoryCounts& c) {
  std::vector<FeatureId> out;
  for (size_t i = 0; i < c.lab_low; ++i) {
    out.push_back({FeatureCategory::lab_low, padded_code("lab", i)});
  }
  for (size_t i = 0; i < c.lab_high; ++i) {
    out.push_back({FeatureCategory::lab_high, padded_code("lab", i)});
  }
  for (size_t i = 0; i < c.medication; ++i) {
    out.push_back({FeatureCategory::medication, padded_code("med", i)});
  }
  for (size_t i = 0; i < c.procedure; ++i) {
    out.push_back({FeatureCategory::procedure, padded_code("prc", i)});
  }
  for (size_t i = 0; i < c.comorbidity; ++i) {
    out.push_back({FeatureCategory::comorbidity, padded_code("cmb", i)});
  }
  return out;
}

std::string padded_patient(std::string_view prefix, size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%05zu", std::string(prefix).c_str(), i);
  return buf;
}

}  // namespace

LabeledDataset simulate(const SimSpec& spec, SimDiagnostics* diagnostics) {
  spec.validate();
  const uint32_t n = spec.n_features;

  // Planted column roles: 0 background, 1 unique-case, 2 shifted.
  std::vector<uint8_t> role(n, 0);
  if (spec.mode == SimMode::planted &&
      spec.n_unique_case_features + spec.n_shifted_features > 0) {
    Rng picker(derive_seed(spec.seed, "planted-select"));
    const std::vector<uint32_t> perm = picker.sample_without_replacement(n, n);
    for (uint32_t i = 0; i < spec.n_unique_case_features; ++i) {
      role[perm[i]] = 1;
    }
    for (uint32_t i = 0; i < spec.n_shifted_features; ++i) {
      role[perm[spec.n_unique_case_features + i]] = 2;
    }
  }

  std::vector<std::string> patients;
  patients.reserve(spec.n_case + spec.n_ctrl);
  for (size_t i = 0; i < spec.n_case; ++i) {
    patients.push_back(padded_patient("case", i));
  }
  for (size_t i = 0; i < spec.n_ctrl; ++i) {
    patients.push_back(padded_patient("ctrl", i));
  }

  std::vector<Cell> cells;
  std::vector<double> p_case_all(n), p_ctrl_all(n);
  for (uint32_t c = 0; c < n; ++c) {
    Rng rng(derive_seed(spec.seed, "column", c));
    double p_case = 0.0, p_ctrl = 0.0;
    switch (spec.mode) {
      case SimMode::shared_p:
        p_case = p_ctrl = rng.uniform01();
        break;
      case SimMode::independent_p:
        p_case = rng.uniform01();
        p_ctrl = rng.uniform01();
        break;
      case SimMode::planted:
        if (role[c] == 1) {
          p_case = rng.uniform(0.3, 0.9);
          p_ctrl = 0.0;
        } else if (role[c] == 2) {
          p_ctrl = rng.uniform(0.0, 1.0 - spec.shift_delta);
          p_case = p_ctrl + spec.shift_delta;
        } else {
          p_case = p_ctrl = rng.uniform01();
        }
        break;
    }
    p_case_all[c] = p_case;
    p_ctrl_all[c] = p_ctrl;
    for (uint32_t r = 0; r < spec.n_case; ++r) {
      if (rng.bernoulli(p_case)) cells.push_back({r, c});
    }
    for (uint32_t r = 0; r < spec.n_ctrl; ++r) {
      if (rng.bernoulli(p_ctrl)) cells.push_back({spec.n_case + r, c});
    }
  }

  LabeledDataset dataset;
  dataset.matrix = FeatureMatrix::from_triplets(
      std::move(patients), synthetic_features(split_by_mix(n, spec.mix)),
      std::move(cells), /*drop_empty_columns=*/false);
  dataset.labels.assign(spec.n_case + spec.n_ctrl, 0);
  std::fill(dataset.labels.begin(), dataset.labels.begin() + spec.n_case, 1);

  // Drop columns that drew no ones anywhere, keeping diagnostics aligned.
  std::vector<uint32_t> all_rows(dataset.matrix.rows());
  for (uint32_t r = 0; r < all_rows.size(); ++r) all_rows[r] = r;
  const std::vector<uint32_t> counts = dataset.matrix.column_counts(all_rows);
  std::vector<uint32_t> keep;
  keep.reserve(n);
  for (uint32_t c = 0; c < n; ++c) {
    if (counts[c] > 0) keep.push_back(c);
  }
  if (keep.size() < n) {
    dataset.matrix = dataset.matrix.select_columns(keep);
  }
  if (diagnostics) {
    diagnostics->p_case.clear();
    diagnostics->p_ctrl.clear();
    for (uint32_t c : keep) {
      diagnostics->p_case.push_back(p_case_all[c]);
      diagnostics->p_ctrl.push_back(p_ctrl_all[c]);
    }
  }
  return dataset;
}

std::vector<double> prevalence_gap_curve(const LabeledDataset& dataset) {
  dataset.validate();
  const std::vector<uint32_t> cases = dataset.case_rows();
  const std::vector<uint32_t> controls = dataset.control_rows();
  if (cases.empty() || controls.empty()) {
    fail("simulation: gap curve needs both cases and controls");
  }
  const std::vector<uint32_t> case_counts =
      dataset.matrix.column_counts(cases);
  const std::vector<uint32_t> ctrl_counts =
      dataset.matrix.column_counts(controls);
  std::vector<double> gaps;
  gaps.reserve(dataset.matrix.cols());
  for (uint32_t c = 0; c < dataset.matrix.cols(); ++c) {
    const double pc =
        static_cast<double>(case_counts[c]) / static_cast<double>(cases.size());
    const double pk = static_cast<double>(ctrl_counts[c]) /
                      static_cast<double>(controls.size());
    gaps.push_back(std::fabs(pc - pk));
  }
  std::sort(gaps.begin(), gaps.end());
  return gaps;
}

EventTemplates EventTemplates::synthetic(size_t per_category) {
  EventTemplates t;
  for (size_t i = 0; i < per_category; ++i) {
    t.lab_codes.push_back(padded_code("lab", i));
    t.medication_codes.push_back(padded_code("med", i));
    t.procedure_codes.push_back(padded_code("prc", i));
    t.comorbidity_codes.push_back(padded_code("cmb", i));
  }
  return t;
}

void EventTemplates::validate() const {
  if (!(ref_low <= ref_high)) {
    fail("simulation: template reference range is inverted");
  }
  if (!(low_value < ref_low)) {
    fail("simulation: low_value must be strictly below ref_low");
  }
  if (!(high_value > ref_high)) {
    fail("simulation: high_value must be strictly above ref_high");
  }
  if (!(normal_value >= ref_low && normal_value <= ref_high)) {
    fail("simulation: normal_value must lie inside the reference range");
  }
  if (case_marker_code.empty()) {
    fail("simulation: case marker code must not be empty");
  }
  if (lab_codes.empty()) {
    fail("simulation: need at least one lab code for the baseline event");
  }
  auto check_pool = [](const std::vector<std::string>& pool,
                       std::string_view name) {
    std::vector<std::string> sorted = pool;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      fail("simulation: duplicate code in " + std::string(name) + " pool");
    }
  };
  check_pool(lab_codes, "lab");
  check_pool(medication_codes, "medication");
  check_pool(procedure_codes, "procedure");
  check_pool(comorbidity_codes, "comorbidity");
  for (const std::string& code : comorbidity_codes) {
    if (code.substr(0, case_marker_code.size()) == case_marker_code) {
      fail("simulation: comorbidity code \"" + code +
           "\" collides with the case marker prefix");
    }
  }
}

LabeledDataset generate_event_log(const SimSpec& spec,
                                  const EventTemplates& templates,
                                  const std::filesystem::path& path) {
  templates.validate();
  LabeledDataset dataset = simulate(spec);

  // Rename the synthetic features from the template pools, preserving the
  // canonical order (pools are consumed in sorted order, category by
  // category, indexed by the generator's per-category numbering).
  auto sorted_pool = [](std::vector<std::string> pool) {
    std::sort(pool.begin(), pool.end());
    return pool;
  };
  const std::vector<std::string> lab_pool = sorted_pool(templates.lab_codes);
  const std::vector<std::string> med_pool =
      sorted_pool(templates.medication_codes);
  const std::vector<std::string> proc_pool =
      sorted_pool(templates.procedure_codes);
  const std::vector<std::string> comor_pool =
      sorted_pool(templates.comorbidity_codes);

  const CategoryCounts counts = split_by_mix(spec.n_features, spec.mix);
  if (lab_pool.size() < std::max(counts.lab_low, counts.lab_high) ||
      med_pool.size() < counts.medication ||
      proc_pool.size() < counts.procedure ||
      comor_pool.size() < counts.comorbidity) {
    fail("simulation: template pool smaller than the required feature count");
  }

  std::vector<FeatureId> renamed;
  std::vector<Cell> cells;
  renamed.reserve(dataset.matrix.cols());
  for (uint32_t c = 0; c < dataset.matrix.cols(); ++c) {
    const FeatureId& f = dataset.matrix.features()[c];
    // The synthetic code's numeric suffix indexes into the pools.
    const size_t index = static_cast<size_t>(
        std::stoul(std::string(f.code).substr(f.code.size() - 5)));
    const std::vector<std::string>* pool = nullptr;
    switch (f.category) {
      case FeatureCategory::lab_low:
      case FeatureCategory::lab_high: pool = &lab_pool; break;
      case FeatureCategory::medication: pool = &med_pool; break;
      case FeatureCategory::procedure: pool = &proc_pool; break;
      case FeatureCategory::comorbidity: pool = &comor_pool; break;
    }
    renamed.push_back({f.category, (*pool)[index]});
  }
  for (uint32_t r = 0; r < dataset.matrix.rows(); ++r) {
    for (uint32_t c : dataset.matrix.row(r)) cells.push_back({r, c});
  }
  dataset.matrix = FeatureMatrix::from_triplets(
      dataset.matrix.patient_ids(), std::move(renamed), std::move(cells),
      /*drop_empty_columns=*/false);

  std::ofstream out(path, std::ios::binary);
  if (!out) fail("simulation: cannot write event log " + path.string());
  const std::string range = format_double(templates.ref_low) + "," +
                            format_double(templates.ref_high);
  out << "patient_id,category,code,value,ref_low,ref_high\n";
  for (uint32_t r = 0; r < dataset.matrix.rows(); ++r) {
    const std::string& patient = dataset.matrix.patient_ids()[r];
    if (dataset.labels[r]) {
      out << patient << ",diagnosis," << templates.case_marker_code << ",,,\n";
    }
    // In-range baseline lab so patients with empty rows still appear.
    out << patient << ",lab," << lab_pool.front() << ','
        << format_double(templates.normal_value) << ',' << range << "\n";
    for (uint32_t c : dataset.matrix.row(r)) {
      const FeatureId& f = dataset.matrix.features()[c];
      switch (f.category) {
        case FeatureCategory::lab_low:
          out << patient << ",lab," << f.code << ','
              << format_double(templates.low_value) << ',' << range << "\n";
          break;
        case FeatureCategory::lab_high:
          out << patient << ",lab," << f.code << ','
              << format_double(templates.high_value) << ',' << range << "\n";
          break;
        case FeatureCategory::medication:
          out << patient << ",medication," << f.code << ",,,\n";
          break;
        case FeatureCategory::procedure:
          out << patient << ",procedure," << f.code << ",,,\n";
          break;
        case FeatureCategory::comorbidity:
          out << patient << ",diagnosis," << f.code << ",,,\n";
          break;
      }
    }
  }
  return dataset;
}

}  // namespace ehrablate
