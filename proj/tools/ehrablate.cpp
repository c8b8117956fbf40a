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

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ehrablate/pipeline.hpp"
#include "ehrablate/util.hpp"

namespace {

void add_common(CLI::App* cmd, ehrablate::CommandOptions& options,
                std::string& config_path, uint64_t& seed, std::string& out_dir,
                uint32_t& threads) {
  cmd->add_option("--config", config_path, "Configuration file (INI)");
  cmd->add_option("--seed", seed, "Master seed, overrides the config file")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", out_dir, "Output directory");
  cmd->add_option("--threads", threads, "Worker thread count");
  cmd->add_flag("--force", options.force,
                "Overwrite an existing output directory");
}

ehrablate::CommandOptions finish_common(CLI::App* cmd,
                                        ehrablate::CommandOptions options,
                                        const std::string& config_path,
                                        uint64_t seed,
                                        const std::string& out_dir,
                                        uint32_t threads) {
  options.config_path = config_path;
  if (cmd->count("--seed")) options.seed = seed;
  if (cmd->count("--out")) options.out_dir = out_dir;
  if (cmd->count("--threads")) options.threads = threads;
  return options;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Measures and reduces how identifiable sensitive conditions are in "
      "binary-encoded health event records"};
  app.set_version_flag("--version", std::string(ehrablate::kToolName) + " " +
                                        std::string(ehrablate::kToolVersion));
  app.require_subcommand(1);

  ehrablate::CommandOptions options;
  std::string config_path, out_dir;
  uint64_t seed = 0;
  uint32_t threads = 1;

  CLI::App* encode = app.add_subcommand(
      "encode", "Turn a raw event log into a feature matrix directory");
  add_common(encode, options, config_path, seed, out_dir, threads);

  CLI::App* audit = app.add_subcommand(
      "audit",
      "Assemble a case/control cohort, attack it with a classifier, and "
      "ablate the top features");
  add_common(audit, options, config_path, seed, out_dir, threads);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Run the synthetic identifiability baselines");
  add_common(simulate, options, config_path, seed, out_dir, threads);

  CLI::App* merge = app.add_subcommand(
      "report-merge", "Concatenate audit grid files into one table");
  std::vector<std::string> merge_inputs;
  std::string merge_out;
  bool merge_force = false;
  merge->add_option("inputs", merge_inputs, "grid.csv files to merge")
      ->required()
      ->expected(-1);
  merge->add_option("--out", merge_out, "Merged output file")->required();
  merge->add_flag("--force", merge_force, "Overwrite an existing output file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (encode->parsed()) {
      ehrablate::cmd_encode(finish_common(encode, options, config_path, seed,
                                          out_dir, threads));
    } else if (audit->parsed()) {
      ehrablate::cmd_audit(finish_common(audit, options, config_path, seed,
                                         out_dir, threads));
    } else if (simulate->parsed()) {
      ehrablate::cmd_simulate(finish_common(simulate, options, config_path,
                                            seed, out_dir, threads));
    } else if (merge->parsed()) {
      std::vector<std::filesystem::path> inputs(merge_inputs.begin(),
                                                merge_inputs.end());
      ehrablate::cmd_report_merge(inputs, merge_out, merge_force);
    }
  } catch (const std::exception& e) {
    std::cerr << ehrablate::kToolName << ": error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
