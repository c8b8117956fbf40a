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
// The command layer. Each command reads a run configuration, derives all
// randomness from the single run seed, and writes a self-describing output
// directory (see report.hpp). Commands:
//   encode       - raw event log -> feature matrix directory
//   audit        - cohort assembly, attack classifier, feature ablation
//   simulate     - synthetic identifiability baselines
//   report-merge - concatenate audit grids into one table

#ifndef EHRABLATE_PIPELINE_HPP_
#define EHRABLATE_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ehrablate/config.hpp"

namespace ehrablate {

// Command-line overrides layered over the configuration file.
struct CommandOptions {
  std::filesystem::path config_path;  // empty = built-in defaults
  std::optional<uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<uint32_t> threads;
  bool force = false;
};

// Loads the file (when given), applies the overrides, validates, and
// installs the configured compute kernels (the EHRABLATE_KERNELS
// environment variable wins over the file).
RunConfig resolve_config(const CommandOptions& options);

void cmd_encode(const CommandOptions& options);
void cmd_audit(const CommandOptions& options);
void cmd_simulate(const CommandOptions& options);
void cmd_report_merge(const std::vector<std::filesystem::path>& inputs,
                      const std::filesystem::path& out_path, bool force);

}  // namespace ehrablate

#endif  // EHRABLATE_PIPELINE_HPP_
