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
// Synthetic cohorts. Three generators:
//   shared_p      - per feature, one prevalence p ~ U[0,1] for both groups
//                   (an unidentifiable cohort: any AUC above chance is
//                   overfitting);
//   independent_p - per feature, case and control prevalences drawn
//                   independently from U[0,1] (near-perfectly identifiable);
//   planted       - shared_p background plus designed signal features:
//                   unique-case features (p_ctrl exactly 0) and shifted
//                   features (p_case = p_ctrl + delta).
// Every feature column owns an RNG stream derived from the master seed and
// the column index, so generation is reproducible cell-for-cell no matter
// how columns are scheduled.

#ifndef EHRABLATE_SIMULATION_HPP_
#define EHRABLATE_SIMULATION_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ehrablate/dataset.hpp"

namespace ehrablate {

enum class SimMode { shared_p, independent_p, planted };
std::string_view to_string(SimMode mode);
std::optional<SimMode> parse_sim_mode(std::string_view token);

// Share of feature columns per category; lab splits evenly into lab_low
// and lab_high columns. Must sum to 1 within 1e-6.
struct CategoryMix {
  double lab = 0.20;
  double medication = 0.35;
  double procedure = 0.30;
  double comorbidity = 0.15;
};

struct SimSpec {
  uint32_t n_case = 500;
  uint32_t n_ctrl = 500;
  uint32_t n_features = 1000;
  SimMode mode = SimMode::shared_p;
  // Planted mode only. Unique-case features draw p_case ~ U[0.3, 0.9] and
  // never fire in controls; shifted features draw p_ctrl ~ U[0, 1-delta]
  // and set p_case = p_ctrl + delta. Planted columns are a seeded uniform
  // pick over all columns, so their category mix follows `mix`.
  uint32_t n_unique_case_features = 0;
  uint32_t n_shifted_features = 0;
  double shift_delta = 0.0;
  CategoryMix mix;
  uint64_t seed = 1;

  void validate() const;
};

// Per-column generating prevalences, aligned with the returned matrix
// columns (columns that drew no ones anywhere are dropped from both).
struct SimDiagnostics {
  std::vector<double> p_case;
  std::vector<double> p_ctrl;
};

// Rows are cases first (ids case00000..) then controls (ctrl00000..);
// columns follow the canonical feature order.
LabeledDataset simulate(const SimSpec& spec,
                        SimDiagnostics* diagnostics = nullptr);

// Per-feature |prevalence(case) - prevalence(control)|, ascending.
std::vector<double> prevalence_gap_curve(const LabeledDataset& dataset);

// Code pools and lab value conventions for materializing a simulated
// cohort as a raw event log.
struct EventTemplates {
  std::vector<std::string> lab_codes;
  std::vector<std::string> medication_codes;
  std::vector<std::string> procedure_codes;
  std::vector<std::string> comorbidity_codes;
  double ref_low = 10.0;
  double ref_high = 20.0;
  double low_value = 5.0;     // materializes lab_low (strictly below ref_low)
  double high_value = 25.0;   // materializes lab_high (strictly above ref_high)
  double normal_value = 15.0; // in-range; encodes to nothing
  // Sensitive diagnosis emitted once per case patient; scrubbed by the
  // encoder but visible to cohort building.
  std::string case_marker_code = "311";

  static EventTemplates synthetic(size_t per_category);
  void validate() const;
};

// Simulates per spec, renames features from the template pools, and writes
// the cohort as an event log (one event per matrix cell, an in-range
// baseline lab per patient so empty rows survive ingestion, and the case
// marker diagnosis per case). Returns the renamed dataset; encoding the
// emitted log with the case marker as the only sensitive prefix reproduces
// its matrix exactly. Pools smaller than the per-category feature counts
// are fatal.
LabeledDataset generate_event_log(const SimSpec& spec,
                                  const EventTemplates& templates,
                                  const std::filesystem::path& path);

}  // namespace ehrablate

#endif  // EHRABLATE_SIMULATION_HPP_
