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

#include "ehrablate/event_model.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ehrablate/util.hpp"

namespace ehrablate {

namespace {

struct FeatureIdHash {
  size_t operator()(const FeatureId& f) const {
    uint64_t h = fnv1a64(f.code);
    h ^= static_cast<uint64_t>(f.category);
    h *= kFnvPrime;
    return static_cast<size_t>(h);
  }
};

void require_plain_token(std::string_view token, std::string_view what) {
  if (token.find(',') != std::string_view::npos ||
      token.find('\n') != std::string_view::npos) {
    fail(std::string("event_model: ") + std::string(what) +
         " contains a delimiter or newline: \"" + std::string(token) + "\"");
  }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("event_model: cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(std::move(line));
  return lines;
}

bool is_comment_or_blank(std::string_view line) {
  std::string_view t = trim(line);
  return t.empty() || t.front() == '#';
}

}  // namespace

std::string_view to_string(EventCategory c) {
  switch (c) {
    case EventCategory::lab: return "lab";
    case EventCategory::medication: return "medication";
    case EventCategory::procedure: return "procedure";
    case EventCategory::diagnosis: return "diagnosis";
  }
  return "?";
}

std::string_view to_string(FeatureCategory c) {
  switch (c) {
    case FeatureCategory::lab_low: return "lab_low";
    case FeatureCategory::lab_high: return "lab_high";
    case FeatureCategory::medication: return "medication";
    case FeatureCategory::procedure: return "procedure";
    case FeatureCategory::comorbidity: return "comorbidity";
  }
  return "?";
}

std::optional<EventCategory> parse_event_category(std::string_view token) {
  if (token == "lab") return EventCategory::lab;
  if (token == "medication") return EventCategory::medication;
  if (token == "procedure") return EventCategory::procedure;
  if (token == "diagnosis") return EventCategory::diagnosis;
  return std::nullopt;
}

std::optional<FeatureCategory> parse_feature_category(std::string_view token) {
  if (token == "lab_low") return FeatureCategory::lab_low;
  if (token == "lab_high") return FeatureCategory::lab_high;
  if (token == "medication") return FeatureCategory::medication;
  if (token == "procedure") return FeatureCategory::procedure;
  if (token == "comorbidity") return FeatureCategory::comorbidity;
  return std::nullopt;
}

std::string prefixed_name(FeatureCategory category, std::string_view code) {
  std::string_view prefix;
  switch (category) {
    case FeatureCategory::lab_low: prefix = "Lab_low_"; break;
    case FeatureCategory::lab_high: prefix = "Lab_high_"; break;
    case FeatureCategory::medication: prefix = "Med_"; break;
    case FeatureCategory::procedure: prefix = "Procedure_"; break;
    case FeatureCategory::comorbidity: prefix = "Comor_"; break;
  }
  return std::string(prefix) + std::string(code);
}

// ---------------------------------------------------------------------------
// FeatureMatrix
// ---------------------------------------------------------------------------

FeatureMatrix FeatureMatrix::from_triplets(std::vector<std::string> patient_ids,
                                           std::vector<FeatureId> features,
                                           std::vector<Cell> cells,
                                           bool drop_empty_columns) {
  {
    std::vector<std::string> sorted_ids = patient_ids;
    std::sort(sorted_ids.begin(), sorted_ids.end());
    if (std::adjacent_find(sorted_ids.begin(), sorted_ids.end()) !=
        sorted_ids.end()) {
      fail("event_model: duplicate patient id in matrix construction");
    }
  }

  // Canonical feature order, with cell indices remapped accordingly.
  std::vector<uint32_t> perm(features.size());
  for (uint32_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::stable_sort(perm.begin(), perm.end(), [&](uint32_t a, uint32_t b) {
    return features[a] < features[b];
  });
  std::vector<FeatureId> sorted_features;
  sorted_features.reserve(features.size());
  std::vector<uint32_t> old_to_new(features.size());
  for (uint32_t pos = 0; pos < perm.size(); ++pos) {
    old_to_new[perm[pos]] = pos;
    sorted_features.push_back(std::move(features[perm[pos]]));
  }
  for (size_t i = 1; i < sorted_features.size(); ++i) {
    if (sorted_features[i - 1] == sorted_features[i]) {
      fail("event_model: duplicate feature id (" +
           std::string(to_string(sorted_features[i].category)) + ", " +
           sorted_features[i].code + ")");
    }
  }

  for (Cell& c : cells) {
    if (c.patient >= patient_ids.size() || c.feature >= sorted_features.size()) {
      fail("event_model: cell index out of range");
    }
    c.feature = old_to_new[c.feature];
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return a.patient != b.patient ? a.patient < b.patient : a.feature < b.feature;
  });
  cells.erase(std::unique(cells.begin(), cells.end(),
                          [](const Cell& a, const Cell& b) {
                            return a.patient == b.patient && a.feature == b.feature;
                          }),
              cells.end());

  if (drop_empty_columns) {
    std::vector<uint8_t> used(sorted_features.size(), 0);
    for (const Cell& c : cells) used[c.feature] = 1;
    std::vector<uint32_t> remap(sorted_features.size(), 0);
    std::vector<FeatureId> kept;
    kept.reserve(sorted_features.size());
    for (uint32_t i = 0; i < sorted_features.size(); ++i) {
      if (used[i]) {
        remap[i] = static_cast<uint32_t>(kept.size());
        kept.push_back(std::move(sorted_features[i]));
      }
    }
    for (Cell& c : cells) c.feature = remap[c.feature];
    sorted_features = std::move(kept);
  }

  FeatureMatrix m;
  m.patient_ids_ = std::move(patient_ids);
  m.features_ = std::move(sorted_features);
  m.row_offsets_.assign(m.patient_ids_.size() + 1, 0);
  for (const Cell& c : cells) ++m.row_offsets_[c.patient + 1];
  for (size_t r = 0; r < m.patient_ids_.size(); ++r) {
    m.row_offsets_[r + 1] += m.row_offsets_[r];
  }
  m.col_indices_.reserve(cells.size());
  for (const Cell& c : cells) m.col_indices_.push_back(c.feature);
  return m;
}

bool FeatureMatrix::cell(uint32_t r, uint32_t c) const {
  auto span = row(r);
  return std::binary_search(span.begin(), span.end(), c);
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const uint32_t> keep_rows,
                                         bool drop_empty_columns) const {
  std::vector<std::string> ids;
  ids.reserve(keep_rows.size());
  std::vector<Cell> cells;
  for (uint32_t out_r = 0; out_r < keep_rows.size(); ++out_r) {
    uint32_t r = keep_rows[out_r];
    if (r >= rows()) fail("event_model: row index out of range in select_rows");
    ids.push_back(patient_ids_[r]);
    for (uint32_t c : row(r)) cells.push_back({out_r, c});
  }
  return from_triplets(std::move(ids), features_, std::move(cells),
                       drop_empty_columns);
}

FeatureMatrix FeatureMatrix::select_columns(
    std::span<const uint32_t> keep_cols) const {
  std::vector<uint32_t> remap(cols(), UINT32_MAX);
  std::vector<FeatureId> kept;
  kept.reserve(keep_cols.size());
  uint32_t prev = 0;
  bool first = true;
  for (uint32_t c : keep_cols) {
    if (c >= cols()) fail("event_model: column index out of range in select_columns");
    if (!first && c <= prev) {
      fail("event_model: select_columns requires a sorted, duplicate-free subset");
    }
    prev = c;
    first = false;
    remap[c] = static_cast<uint32_t>(kept.size());
    kept.push_back(features_[c]);
  }
  FeatureMatrix m;
  m.patient_ids_ = patient_ids_;
  m.features_ = std::move(kept);
  m.row_offsets_.assign(rows() + 1, 0);
  for (uint32_t r = 0; r < rows(); ++r) {
    for (uint32_t c : row(r)) {
      if (remap[c] != UINT32_MAX) ++m.row_offsets_[r + 1];
    }
  }
  for (size_t r = 0; r < rows(); ++r) m.row_offsets_[r + 1] += m.row_offsets_[r];
  m.col_indices_.reserve(m.row_offsets_.back());
  for (uint32_t r = 0; r < rows(); ++r) {
    for (uint32_t c : row(r)) {
      if (remap[c] != UINT32_MAX) m.col_indices_.push_back(remap[c]);
    }
  }
  return m;
}

std::vector<uint32_t> FeatureMatrix::column_counts(
    std::span<const uint32_t> use_rows) const {
  std::vector<uint32_t> counts(cols(), 0);
  for (uint32_t r : use_rows) {
    if (r >= rows()) fail("event_model: row index out of range in column_counts");
    for (uint32_t c : row(r)) ++counts[c];
  }
  return counts;
}

uint64_t FeatureMatrix::feature_signature() const {
  uint64_t h = fnv1a64_u64(features_.size());
  for (const FeatureId& f : features_) {
    h = fnv1a64_u64(static_cast<uint64_t>(f.category), h);
    h = fnv1a64(f.code, h);
    h ^= 0x1f;
    h *= kFnvPrime;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Ingest
// ---------------------------------------------------------------------------

IngestResult parse_events(std::string_view text, const FormatConfig& fmt) {
  IngestResult result;
  constexpr size_t kNoColumn = SIZE_MAX;
  size_t col_patient = kNoColumn, col_category = kNoColumn, col_code = kNoColumn;
  size_t col_value = kNoColumn, col_ref_low = kNoColumn, col_ref_high = kNoColumn;
  bool header_seen = false;
  size_t line_no = 0;
  size_t lab_without_value = 0;

  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    std::string_view line = text.substr(
        start, end == std::string_view::npos ? text.size() - start : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (is_comment_or_blank(line)) continue;

    std::vector<std::string_view> tokens = split(line, fmt.delimiter);
    if (!header_seen) {
      for (size_t i = 0; i < tokens.size(); ++i) {
        std::string_view name = trim(tokens[i]);
        if (name == "patient_id") col_patient = i;
        else if (name == "category") col_category = i;
        else if (name == "code") col_code = i;
        else if (name == "value") col_value = i;
        else if (name == "ref_low") col_ref_low = i;
        else if (name == "ref_high") col_ref_high = i;
        // Unrecognized columns are ignored.
      }
      if (col_patient == kNoColumn || col_category == kNoColumn ||
          col_code == kNoColumn) {
        fail("event_model: header must name patient_id, category and code");
      }
      header_seen = true;
      continue;
    }

    auto field = [&](size_t col) -> std::string_view {
      return col == kNoColumn || col >= tokens.size() ? std::string_view()
                                                      : trim(tokens[col]);
    };

    std::string_view patient = field(col_patient);
    std::string_view category_token = field(col_category);
    std::string_view code = field(col_code);
    std::string_view value_token = field(col_value);
    std::string_view ref_low_token = field(col_ref_low);
    std::string_view ref_high_token = field(col_ref_high);

    std::optional<EventCategory> category = parse_event_category(category_token);
    if (!category) {
      fail("event_model: unknown category \"" + std::string(category_token) +
           "\" at line " + std::to_string(line_no));
    }
    if (patient.empty() || code.empty()) {
      ++result.skipped_rows;
      continue;
    }

    EventRecord rec;
    rec.patient_id = std::string(patient);
    rec.category = *category;
    rec.code = std::string(code);

    bool malformed = false;
    auto parse_optional = [&](std::string_view token,
                              std::optional<double>& out) {
      if (token.empty()) return;
      double v;
      if (parse_double(token, v)) out = v;
      else malformed = true;
    };

    if (*category == EventCategory::lab) {
      parse_optional(value_token, rec.value);
      parse_optional(ref_low_token, rec.ref_low);
      parse_optional(ref_high_token, rec.ref_high);
      if (!rec.value) {
        ++lab_without_value;
        malformed = true;
      }
      if (rec.ref_low && rec.ref_high && *rec.ref_low > *rec.ref_high) {
        malformed = true;
      }
    } else if (!value_token.empty() || !ref_low_token.empty() ||
               !ref_high_token.empty()) {
      // Numeric fields are lab-only.
      malformed = true;
    }

    if (malformed) {
      ++result.skipped_rows;
      continue;
    }
    result.records.push_back(std::move(rec));
  }

  if (!header_seen) {
    fail("event_model: event log has no header line");
  }
  if (lab_without_value > 0) {
    result.warnings.push_back("skipped " + std::to_string(lab_without_value) +
                              " lab row(s) without a value");
  }
  if (result.skipped_rows > lab_without_value) {
    result.warnings.push_back(
        "skipped " + std::to_string(result.skipped_rows - lab_without_value) +
        " malformed row(s)");
  }
  return result;
}

IngestResult ingest_events(const std::filesystem::path& path,
                           const FormatConfig& fmt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("event_model: cannot open event log " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_events(buf.str(), fmt);
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

bool matches_sensitive_prefix(std::string_view code,
                              std::span<const std::string> prefixes) {
  for (const std::string& p : prefixes) {
    if (!p.empty() && code.substr(0, p.size()) == p) return true;
  }
  return false;
}

namespace {

std::vector<std::string> sorted_patient_ids(std::span<const EventRecord> records) {
  std::set<std::string> ids;
  for (const EventRecord& r : records) ids.insert(r.patient_id);
  return {ids.begin(), ids.end()};
}

}  // namespace

FeatureMatrix encode(std::span<const EventRecord> records,
                     const EncodeOptions& options) {
  std::vector<std::string> patients = sorted_patient_ids(records);
  std::unordered_map<std::string_view, uint32_t> patient_index;
  patient_index.reserve(patients.size());
  for (uint32_t i = 0; i < patients.size(); ++i) patient_index[patients[i]] = i;

  std::vector<FeatureId> features;
  std::unordered_map<FeatureId, uint32_t, FeatureIdHash> feature_index;
  std::vector<Cell> cells;
  auto add_cell = [&](uint32_t patient, FeatureCategory cat,
                      const std::string& code) {
    FeatureId id{cat, code};
    auto [it, inserted] = feature_index.try_emplace(id, features.size());
    if (inserted) features.push_back(std::move(id));
    cells.push_back({patient, it->second});
  };

  for (const EventRecord& r : records) {
    uint32_t p = patient_index.at(r.patient_id);
    switch (r.category) {
      case EventCategory::lab:
        if (r.value && r.ref_low && *r.value < *r.ref_low) {
          add_cell(p, FeatureCategory::lab_low, r.code);
        }
        if (r.value && r.ref_high && *r.value > *r.ref_high) {
          add_cell(p, FeatureCategory::lab_high, r.code);
        }
        break;
      case EventCategory::medication:
        add_cell(p, FeatureCategory::medication, r.code);
        break;
      case EventCategory::procedure:
        add_cell(p, FeatureCategory::procedure, r.code);
        break;
      case EventCategory::diagnosis:
        if (!matches_sensitive_prefix(r.code, options.sensitive_prefixes)) {
          add_cell(p, FeatureCategory::comorbidity, r.code);
        }
        break;
    }
  }

  return FeatureMatrix::from_triplets(std::move(patients), std::move(features),
                                      std::move(cells));
}

PatientDiagnoses collect_diagnoses(std::span<const EventRecord> records) {
  PatientDiagnoses out;
  out.patient_ids = sorted_patient_ids(records);
  std::unordered_map<std::string_view, uint32_t> patient_index;
  for (uint32_t i = 0; i < out.patient_ids.size(); ++i) {
    patient_index[out.patient_ids[i]] = i;
  }
  std::vector<std::set<std::string>> sets(out.patient_ids.size());
  for (const EventRecord& r : records) {
    if (r.category == EventCategory::diagnosis) {
      sets[patient_index.at(r.patient_id)].insert(r.code);
    }
  }
  out.codes.reserve(sets.size());
  for (auto& s : sets) out.codes.emplace_back(s.begin(), s.end());
  return out;
}

FeatureCensus feature_census(const FeatureMatrix& m) {
  FeatureCensus census;
  std::set<std::string_view> lab_codes;
  for (const FeatureId& f : m.features()) {
    switch (f.category) {
      case FeatureCategory::lab_low:
        ++census.lab_low;
        lab_codes.insert(f.code);
        break;
      case FeatureCategory::lab_high:
        ++census.lab_high;
        lab_codes.insert(f.code);
        break;
      case FeatureCategory::medication: ++census.medication; break;
      case FeatureCategory::procedure: ++census.procedure; break;
      case FeatureCategory::comorbidity: ++census.comorbidity; break;
    }
  }
  census.distinct_lab_codes = lab_codes.size();
  return census;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("event_model: cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<std::string> write_feature_matrix(const FeatureMatrix& m,
                                              const std::filesystem::path& dir,
                                              std::string_view comment_header) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out = open_out(dir / "features.csv");
    out << "# " << comment_header << "\n";
    out << "index,category,code\n";
    for (uint32_t i = 0; i < m.cols(); ++i) {
      const FeatureId& f = m.features()[i];
      require_plain_token(f.code, "feature code");
      out << i << ',' << to_string(f.category) << ',' << f.code << "\n";
    }
  }
  {
    std::ofstream out = open_out(dir / "cells.csv");
    out << "# " << comment_header << "\n";
    out << "patient_index,feature_index\n";
    for (uint32_t r = 0; r < m.rows(); ++r) {
      for (uint32_t c : m.row(r)) out << r << ',' << c << "\n";
    }
  }
  {
    std::ofstream out = open_out(dir / "patients.txt");
    out << "# " << comment_header << "\n";
    for (const std::string& id : m.patient_ids()) {
      require_plain_token(id, "patient id");
      out << id << "\n";
    }
  }
  return {"features.csv", "cells.csv", "patients.txt"};
}

namespace {

std::vector<std::string> read_patient_file(const std::filesystem::path& dir) {
  std::vector<std::string> ids;
  for (const std::string& line : read_lines(dir / "patients.txt")) {
    if (is_comment_or_blank(line)) continue;
    ids.emplace_back(trim(line));
  }
  return ids;
}

}  // namespace

FeatureMatrix read_feature_matrix(const std::filesystem::path& dir) {
  std::vector<std::string> patients = read_patient_file(dir);

  std::vector<FeatureId> features;
  bool header_seen = false;
  for (const std::string& line : read_lines(dir / "features.csv")) {
    if (is_comment_or_blank(line)) continue;
    if (!header_seen) {
      if (trim(line) != "index,category,code") {
        fail("event_model: features.csv has an unexpected header");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> tokens = split(line, ',');
    if (tokens.size() != 3) fail("event_model: malformed features.csv row: " + line);
    uint64_t index;
    if (!parse_u64(tokens[0], index) || index != features.size()) {
      fail("event_model: features.csv indices must be 0..n-1 in order");
    }
    std::optional<FeatureCategory> cat = parse_feature_category(trim(tokens[1]));
    if (!cat) fail("event_model: unknown feature category in features.csv: " + line);
    features.push_back({*cat, std::string(trim(tokens[2]))});
  }

  std::vector<Cell> cells;
  header_seen = false;
  for (const std::string& line : read_lines(dir / "cells.csv")) {
    if (is_comment_or_blank(line)) continue;
    if (!header_seen) {
      if (trim(line) != "patient_index,feature_index") {
        fail("event_model: cells.csv has an unexpected header");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> tokens = split(line, ',');
    uint64_t p, f;
    if (tokens.size() != 2 || !parse_u64(tokens[0], p) || !parse_u64(tokens[1], f)) {
      fail("event_model: malformed cells.csv row: " + line);
    }
    cells.push_back({static_cast<uint32_t>(p), static_cast<uint32_t>(f)});
  }

  return FeatureMatrix::from_triplets(std::move(patients), std::move(features),
                                      std::move(cells),
                                      /*drop_empty_columns=*/false);
}

std::vector<std::string> write_diagnoses(const PatientDiagnoses& d,
                                         const std::filesystem::path& dir,
                                         std::string_view comment_header) {
  std::filesystem::create_directories(dir);
  std::ofstream out = open_out(dir / "diagnoses.csv");
  out << "# " << comment_header << "\n";
  out << "patient_index,code\n";
  for (uint32_t p = 0; p < d.codes.size(); ++p) {
    for (const std::string& code : d.codes[p]) {
      require_plain_token(code, "diagnosis code");
      out << p << ',' << code << "\n";
    }
  }
  return {"diagnoses.csv"};
}

PatientDiagnoses read_diagnoses(const std::filesystem::path& dir) {
  PatientDiagnoses out;
  out.patient_ids = read_patient_file(dir);
  out.codes.resize(out.patient_ids.size());
  bool header_seen = false;
  for (const std::string& line : read_lines(dir / "diagnoses.csv")) {
    if (is_comment_or_blank(line)) continue;
    if (!header_seen) {
      if (trim(line) != "patient_index,code") {
        fail("event_model: diagnoses.csv has an unexpected header");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> tokens = split(line, ',');
    uint64_t p;
    if (tokens.size() != 2 || !parse_u64(tokens[0], p) || p >= out.codes.size()) {
      fail("event_model: malformed diagnoses.csv row: " + line);
    }
    out.codes[p].emplace_back(trim(tokens[1]));
  }
  for (auto& codes : out.codes) {
    std::sort(codes.begin(), codes.end());
    codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  }
  return out;
}

}  // namespace ehrablate
