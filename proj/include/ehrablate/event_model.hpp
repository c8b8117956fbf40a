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
// Event records and their binary feature encoding.
//
// An event log row is one clinical fact about one patient: a lab result
// with its reference range, a medication order, a procedure, or a coded
// diagnosis. Encoding turns a patient's history into a sparse binary row:
//   lab_low_X    = some lab event for code X had value strictly below ref_low
//   lab_high_X   = some lab event for code X had value strictly above ref_high
//   medication_X = code X was ever ordered
//   procedure_X  = code X was ever performed
//   comorbidity_X= diagnosis code X appears and matches no sensitive prefix
// Diagnosis codes matching a sensitive prefix never become features; they
// are what the downstream attacker model tries to recover, so they must not
// leak into the inputs.

#ifndef EHRABLATE_EVENT_MODEL_HPP_
#define EHRABLATE_EVENT_MODEL_HPP_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ehrablate {

enum class EventCategory : uint8_t { lab, medication, procedure, diagnosis };

// Declaration order is the canonical category order for feature sorting.
enum class FeatureCategory : uint8_t {
  lab_low,
  lab_high,
  medication,
  procedure,
  comorbidity
};

std::string_view to_string(EventCategory c);
std::string_view to_string(FeatureCategory c);
std::optional<EventCategory> parse_event_category(std::string_view token);
std::optional<FeatureCategory> parse_feature_category(std::string_view token);

// Display prefix used in ranked feature listings, e.g. "Med_aspirin".
std::string prefixed_name(FeatureCategory category, std::string_view code);

struct EventRecord {
  std::string patient_id;
  EventCategory category = EventCategory::lab;
  std::string code;
  // Present only for lab events. ref_low/ref_high may each be absent; a
  // bound that is absent cannot flag the corresponding out-of-range feature.
  std::optional<double> value;
  std::optional<double> ref_low;
  std::optional<double> ref_high;

  bool operator==(const EventRecord&) const = default;
};

struct FeatureId {
  FeatureCategory category = FeatureCategory::lab_low;
  std::string code;

  // Canonical feature order: category declaration order, then code bytewise.
  auto operator<=>(const FeatureId&) const = default;
};

struct Cell {
  uint32_t patient = 0;
  uint32_t feature = 0;
};

// Sparse binary patient-by-feature matrix, compressed row storage.
// Invariants: feature ids unique and canonically sorted; patient ids unique;
// column indices sorted within each row; no all-zero columns unless a caller
// explicitly asked to keep them.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;

  static FeatureMatrix from_triplets(std::vector<std::string> patient_ids,
                                     std::vector<FeatureId> features,
                                     std::vector<Cell> cells,
                                     bool drop_empty_columns = true);

  size_t rows() const { return patient_ids_.size(); }
  size_t cols() const { return features_.size(); }
  size_t nnz() const { return col_indices_.size(); }

  std::span<const uint32_t> row(uint32_t r) const {
    return {col_indices_.data() + row_offsets_[r],
            col_indices_.data() + row_offsets_[r + 1]};
  }
  bool cell(uint32_t r, uint32_t c) const;

  const std::vector<std::string>& patient_ids() const { return patient_ids_; }
  const std::vector<FeatureId>& features() const { return features_; }

  // New matrix over the given rows, in the given order. By default columns
  // that are all-zero in the subset are dropped (with remapping); pass
  // false to keep the full column space.
  FeatureMatrix select_rows(std::span<const uint32_t> keep_rows,
                            bool drop_empty_columns = true) const;

  // New matrix over a sorted, duplicate-free subset of column indices.
  FeatureMatrix select_columns(std::span<const uint32_t> keep_cols) const;

  // Ones per column, restricted to the given rows.
  std::vector<uint32_t> column_counts(std::span<const uint32_t> rows) const;

  // Order-sensitive digest of the feature dictionary; models refuse to
  // score matrices whose signature does not match the one they trained on.
  uint64_t feature_signature() const;

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::vector<std::string> patient_ids_;
  std::vector<FeatureId> features_;
  std::vector<uint32_t> row_offsets_{0};
  std::vector<uint32_t> col_indices_;
};

// ---------------------------------------------------------------------------
// Ingest
// ---------------------------------------------------------------------------

struct FormatConfig {
  char delimiter = ',';
};

struct IngestResult {
  std::vector<EventRecord> records;
  size_t skipped_rows = 0;
  std::vector<std::string> warnings;
};

// Parses a delimited event log. The first non-comment line must be a header
// naming at least patient_id, category and code; value/ref_low/ref_high
// columns are optional and extra columns are ignored. Malformed data rows
// (missing ids, non-numeric numbers, numeric fields on non-lab rows, lab
// rows without a value, inverted reference ranges) are skipped and counted.
// An unreadable file, a missing required header column, or an unknown
// category token is fatal.
IngestResult parse_events(std::string_view text, const FormatConfig& fmt = {});
IngestResult ingest_events(const std::filesystem::path& path,
                           const FormatConfig& fmt = {});

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

struct EncodeOptions {
  // Diagnosis codes matching any of these prefixes are excluded from the
  // comorbidity features (prefix = leading characters of the code).
  std::vector<std::string> sensitive_prefixes;
};

bool matches_sensitive_prefix(std::string_view code,
                              std::span<const std::string> prefixes);

// Builds the binary feature matrix over every patient that appears in the
// records (a patient whose events all encode to nothing keeps an all-zero
// row). Output is independent of record order.
FeatureMatrix encode(std::span<const EventRecord> records,
                     const EncodeOptions& options);

// Distinct diagnosis codes per patient (sensitive ones included), with the
// patient index space matching encode() of the same records.
struct PatientDiagnoses {
  std::vector<std::string> patient_ids;
  std::vector<std::vector<std::string>> codes;
};
PatientDiagnoses collect_diagnoses(std::span<const EventRecord> records);

struct FeatureCensus {
  size_t lab_low = 0;
  size_t lab_high = 0;
  size_t medication = 0;
  size_t procedure = 0;
  size_t comorbidity = 0;
  // Distinct codes carrying lab_low and/or lab_high columns.
  size_t distinct_lab_codes = 0;

  size_t total_columns() const {
    return lab_low + lab_high + medication + procedure + comorbidity;
  }
  bool operator==(const FeatureCensus&) const = default;
};

FeatureCensus feature_census(const FeatureMatrix& m);

// ---------------------------------------------------------------------------
// Matrix serialization (features.csv, cells.csv, patients.txt)
// ---------------------------------------------------------------------------

// Writes the matrix under dir; every file starts with "# <comment_header>".
// Returns the file names written.
std::vector<std::string> write_feature_matrix(const FeatureMatrix& m,
                                              const std::filesystem::path& dir,
                                              std::string_view comment_header);
FeatureMatrix read_feature_matrix(const std::filesystem::path& dir);

std::vector<std::string> write_diagnoses(const PatientDiagnoses& d,
                                         const std::filesystem::path& dir,
                                         std::string_view comment_header);
// Requires patients.txt from the same directory to resolve indices.
PatientDiagnoses read_diagnoses(const std::filesystem::path& dir);

}  // namespace ehrablate

#endif  // EHRABLATE_EVENT_MODEL_HPP_
