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

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ehrablate/simulation.hpp"
#include "ehrablate/util.hpp"
#include "json.hpp"

namespace ehrablate {
namespace {

namespace fs = std::filesystem;

struct RunOutput {
  int exit_code = 0;
  std::string out;
  std::string err;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file: " << path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("ehrablate_cli_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunOutput run_cli(const TempDir& tmp, const std::string& args) {
  const fs::path out_file = tmp.path / "stdout.txt";
  const fs::path err_file = tmp.path / "stderr.txt";
  const std::string cmd = std::string(EHRABLATE_BIN) + " " + args + " > " +
                          out_file.string() + " 2> " + err_file.string();
  RunOutput result;
  const int status = std::system(cmd.c_str());
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = read_file(out_file);
  result.err = read_file(err_file);
  return result;
}

// Relative path -> content for every regular file under root, skipping the
// cli capture files.
std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    out[fs::relative(entry.path(), root).string()] = read_file(entry.path());
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

const char* kSmallAuditConfig =
    "[simulation]\n"
    "mode = planted\n"
    "n_case = 60\n"
    "n_ctrl = 60\n"
    "n_features = 50\n"
    "n_unique_case_features = 5\n"
    "[ablation]\n"
    "schedule = 0,10,20,30\n"
    "[classifier]\n"
    "max_iterations = 200\n";

TEST_CASE("version flag") {
  TempDir tmp("version");
  const RunOutput r = run_cli(tmp, "--version");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("0.1.0") != std::string::npos);
}

TEST_CASE("a subcommand is required") {
  TempDir tmp("nosub");
  const RunOutput r = run_cli(tmp, "");
  CHECK(r.exit_code != 0);
}

TEST_CASE("errors use the tool-prefixed single-line format") {
  TempDir tmp("badconfig");
  write_text(tmp.path / "c.ini", "[run]\nseed=oops\n");
  const RunOutput r = run_cli(tmp, "audit --config " +
                                       (tmp.path / "c.ini").string() +
                                       " --out " + (tmp.path / "out").string());
  CHECK(r.exit_code == 1);
  CHECK(r.err.rfind("ehrablate: error:", 0) == 0);
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("simulate writes the panel summary and per-mode files") {
  TempDir tmp("simulate");
  write_text(tmp.path / "c.ini",
             "[simulation]\n"
             "mode = planted\n"
             "n_case = 50\n"
             "n_ctrl = 50\n"
             "n_features = 40\n"
             "n_unique_case_features = 4\n");
  const fs::path out = tmp.path / "out";
  const RunOutput r = run_cli(tmp, "simulate --config " +
                                       (tmp.path / "c.ini").string() +
                                       " --seed 5 --out " + out.string());
  CAPTURE(r.err);
  CHECK(r.exit_code == 0);

  for (const char* name :
       {"manifest.json", "summary.csv", "config_resolved.ini",
        "metrics_shared_p.csv", "metrics_independent_p.csv",
        "metrics_planted.csv", "roc_shared_p.csv", "gaps_planted.csv"}) {
    CHECK_MESSAGE(fs::exists(out / name), name);
  }

  const auto manifest = nlohmann::json::parse(read_file(out / "manifest.json"));
  CHECK(manifest["tool"] == "ehrablate");
  CHECK(manifest["command"] == "simulate");
  CHECK(manifest["seed"] == 5);
  CHECK(manifest["mean_auc"].contains("planted"));
  const auto& files = manifest["files"];
  CHECK(std::is_sorted(files.begin(), files.end()));
  // Every listed file exists and every written csv/ini/txt is listed.
  for (const auto& f : files) {
    CHECK(fs::exists(out / f.get<std::string>()));
  }

  const std::string summary = read_file(out / "summary.csv");
  CHECK(summary.find("mode,mean_auc") != std::string::npos);
  CHECK(summary.find("planted,") != std::string::npos);

  // Outputs carry the run header with the config hash.
  const std::string metrics = read_file(out / "metrics_shared_p.csv");
  CHECK(metrics.rfind("# ehrablate 0.1.0 command=simulate seed=5", 0) == 0);
}

TEST_CASE("audit produces the full report tree deterministically") {
  TempDir tmp("audit");
  write_text(tmp.path / "c.ini", kSmallAuditConfig);
  const std::string config_arg = (tmp.path / "c.ini").string();

  const fs::path out1 = tmp.path / "a";
  const fs::path out2 = tmp.path / "b";
  const RunOutput r1 = run_cli(tmp, "audit --config " + config_arg +
                                        " --seed 11 --threads 1 --out " +
                                        out1.string());
  CAPTURE(r1.err);
  CHECK(r1.exit_code == 0);
  const RunOutput r2 = run_cli(tmp, "audit --config " + config_arg +
                                        " --seed 11 --threads 3 --out " +
                                        out2.string());
  CHECK(r2.exit_code == 0);

  for (const char* name :
       {"manifest.json", "grid.csv", "grid_flags.csv", "metrics.csv",
        "roc.csv", "scores.csv", "top_features.csv", "composition.csv",
        "decline.txt", "census.txt", "config_resolved.ini"}) {
    CHECK_MESSAGE(fs::exists(out1 / name), name);
  }

  // Same seed and config: byte-identical trees for any thread count.
  const auto tree1 = tree_bytes(out1);
  const auto tree2 = tree_bytes(out2);
  REQUIRE(tree1.size() == tree2.size());
  for (const auto& [rel, bytes] : tree1) {
    REQUIRE(tree2.count(rel) == 1);
    CHECK_MESSAGE(tree2.at(rel) == bytes, "differs: " << rel);
  }

  // A different seed changes the results.
  const fs::path out3 = tmp.path / "c";
  const RunOutput r3 = run_cli(tmp, "audit --config " + config_arg +
                                        " --seed 12 --out " + out3.string());
  CHECK(r3.exit_code == 0);
  CHECK(read_file(out3 / "grid.csv") != read_file(out1 / "grid.csv"));

  // The grid holds one flag row per band rule and data row per disease.
  const std::string grid = read_file(out1 / "grid.csv");
  CHECK(grid.find("disease,All,10,20,30") != std::string::npos);
  CHECK(grid.find("planted,") != std::string::npos);
}

TEST_CASE("an existing output tree is refused without force") {
  TempDir tmp("force");
  write_text(tmp.path / "c.ini", kSmallAuditConfig);
  const std::string base = "audit --config " + (tmp.path / "c.ini").string() +
                           " --seed 2 --out " + (tmp.path / "out").string();
  CHECK(run_cli(tmp, base).exit_code == 0);
  const RunOutput refused = run_cli(tmp, base);
  CHECK(refused.exit_code == 1);
  CHECK(refused.err.find("--force") != std::string::npos);
  CHECK(run_cli(tmp, base + " --force").exit_code == 0);
}

TEST_CASE("encode then audit from the encoded matrix") {
  TempDir tmp("encode");
  // Materialize a simulated cohort as a raw event log.
  SimSpec spec;
  spec.n_case = 40;
  spec.n_ctrl = 40;
  spec.n_features = 50;
  spec.seed = 31;
  generate_event_log(spec, EventTemplates::synthetic(40),
                     tmp.path / "events.csv");

  write_text(tmp.path / "encode.ini",
             "[input]\n"
             "events = " + (tmp.path / "events.csv").string() + "\n" +
             "[event_model]\n"
             "sensitive_codes = 311\n");
  const fs::path enc_out = tmp.path / "encoded";
  const RunOutput enc = run_cli(tmp, "encode --config " +
                                         (tmp.path / "encode.ini").string() +
                                         " --out " + enc_out.string());
  CAPTURE(enc.err);
  CHECK(enc.exit_code == 0);
  for (const char* name : {"features.csv", "cells.csv", "patients.txt",
                           "diagnoses.csv", "census.txt", "manifest.json"}) {
    CHECK_MESSAGE(fs::exists(enc_out / name), name);
  }
  const auto manifest =
      nlohmann::json::parse(read_file(enc_out / "manifest.json"));
  CHECK(manifest["command"] == "encode");
  CHECK(manifest["patients"] == 80);
  CHECK(manifest["skipped_rows"] == 0);

  // Audit the encoded matrix; the case marker code is the target disease.
  write_text(tmp.path / "audit.ini",
             "[input]\n"
             "matrix_dir = " + enc_out.string() + "\n" +
             "[event_model]\n"
             "sensitive_codes = 311\n"
             "[cohort]\n"
             "sensitive_code = 311\n"
             "matching_mode = at_least_one_diag\n"
             "[ablation]\n"
             "schedule = 0,10,20\n");
  const fs::path audit_out = tmp.path / "audited";
  const RunOutput audit = run_cli(tmp, "audit --config " +
                                           (tmp.path / "audit.ini").string() +
                                           " --seed 3 --out " +
                                           audit_out.string());
  CAPTURE(audit.err);
  CHECK(audit.exit_code == 0);
  const auto audit_manifest =
      nlohmann::json::parse(read_file(audit_out / "manifest.json"));
  CHECK(audit_manifest["disease"] == "311");
  CHECK(audit_manifest["n_cases"] == 40);
  const std::string decline = read_file(audit_out / "decline.txt");
  CHECK(decline.find("disease,category") != std::string::npos);
  CHECK(decline.find("311,") != std::string::npos);
}

TEST_CASE("report-merge concatenates grids with matching headers") {
  TempDir tmp("merge");
  write_text(tmp.path / "g1.csv",
             "# ehrablate 0.1.0 command=audit seed=1 config=00\n"
             "disease,All,10,20\n"
             "300,0.870,0.820,0.700\n");
  write_text(tmp.path / "g2.csv",
             "# ehrablate 0.1.0 command=audit seed=1 config=00\n"
             "disease,All,10,20\n"
             "626,0.910,0.880,0.840\n");
  const fs::path merged = tmp.path / "grid_all.csv";
  const RunOutput r = run_cli(tmp, "report-merge " +
                                       (tmp.path / "g1.csv").string() + " " +
                                       (tmp.path / "g2.csv").string() +
                                       " --out " + merged.string());
  CAPTURE(r.err);
  CHECK(r.exit_code == 0);
  const std::string text = read_file(merged);
  CHECK(text.find("disease,All,10,20\n") != std::string::npos);
  CHECK(text.find("300,0.870,0.820,0.700\n") != std::string::npos);
  CHECK(text.find("626,0.910,0.880,0.840\n") != std::string::npos);
  // One header line only.
  CHECK(text.find("disease,All,10,20") ==
        text.rfind("disease,All,10,20"));

  // Refuses to overwrite without force, merges again with it.
  CHECK(run_cli(tmp, "report-merge " + (tmp.path / "g1.csv").string() +
                         " --out " + merged.string())
            .exit_code == 1);
  CHECK(run_cli(tmp, "report-merge " + (tmp.path / "g1.csv").string() +
                         " --out " + merged.string() + " --force")
            .exit_code == 0);

  // Conflicting headers are an error.
  write_text(tmp.path / "g3.csv",
             "disease,All,10\n"
             "042,0.800,0.750\n");
  const RunOutput bad = run_cli(tmp, "report-merge " +
                                         (tmp.path / "g1.csv").string() + " " +
                                         (tmp.path / "g3.csv").string() +
                                         " --out " +
                                         (tmp.path / "bad.csv").string());
  CHECK(bad.exit_code == 1);
  CHECK(bad.err.find("header") != std::string::npos);
}

TEST_CASE("simulate honors a forced kernel variant") {
  TempDir tmp("kernels");
  write_text(tmp.path / "c.ini",
             "[run]\n"
             "kernels = scalar\n"
             "[simulation]\n"
             "n_case = 30\n"
             "n_ctrl = 30\n"
             "n_features = 20\n");
  const RunOutput r = run_cli(tmp, "simulate --config " +
                                       (tmp.path / "c.ini").string() +
                                       " --seed 1 --out " +
                                       (tmp.path / "out").string());
  CAPTURE(r.err);
  CHECK(r.exit_code == 0);
  write_text(tmp.path / "bad.ini", "[run]\nkernels = quantum\n"
                                   "[simulation]\nn_case = 10\nn_ctrl = 10\n"
                                   "n_features = 10\n");
  const RunOutput bad = run_cli(tmp, "simulate --config " +
                                         (tmp.path / "bad.ini").string() +
                                         " --seed 1 --out " +
                                         (tmp.path / "out2").string());
  CHECK(bad.exit_code == 1);
  CHECK(bad.err.find("kernel") != std::string::npos);
}

}  // namespace
}  // namespace ehrablate
