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

#ifndef EHRABLATE_DATASET_HPP_
#define EHRABLATE_DATASET_HPP_

#include <cstdint>
#include <vector>

#include "ehrablate/event_model.hpp"
#include "ehrablate/util.hpp"

namespace ehrablate {

// Which feature columns a cohort dataset keeps: present in either group,
// present in at least one control, or present in both groups.
enum class FeatureSetMode { union_features, control_only, intersect };

std::string_view to_string(FeatureSetMode mode);
std::optional<FeatureSetMode> parse_feature_set_mode(std::string_view token);

// A feature matrix with a case/control label per row (1 = case).
struct LabeledDataset {
  FeatureMatrix matrix;
  std::vector<uint8_t> labels;
  FeatureSetMode feature_set_mode = FeatureSetMode::union_features;

  std::vector<uint32_t> case_rows() const { return rows_with_label(1); }
  std::vector<uint32_t> control_rows() const { return rows_with_label(0); }

  void validate() const {
    if (labels.size() != matrix.rows()) {
      fail("dataset: label count does not match row count");
    }
  }

  bool operator==(const LabeledDataset&) const = default;

 private:
  std::vector<uint32_t> rows_with_label(uint8_t want) const {
    std::vector<uint32_t> out;
    for (uint32_t r = 0; r < labels.size(); ++r) {
      if (labels[r] == want) out.push_back(r);
    }
    return out;
  }
};

}  // namespace ehrablate

#endif  // EHRABLATE_DATASET_HPP_
