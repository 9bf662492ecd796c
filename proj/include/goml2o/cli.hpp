// Copyright 2026 The gom-l2o Authors.
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

#ifndef GOML2O_CLI_HPP
#define GOML2O_CLI_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "goml2o/problems.hpp"
#include "goml2o/theory.hpp"
#include "goml2o/training.hpp"

namespace goml2o {

enum class Trigger { kNone, kShiftS0, kTranslateT };

std::string to_string(Trigger t);
Trigger trigger_from_string(const std::string& s);

// Resolved configuration of one command invocation. Values come from a flat
// key=value config file; seed/out/force flags override the file.
struct ExperimentConfig {
  std::string command;  // gen | train | eval | verify
  std::map<std::string, std::string> values;
  bool force = false;

  static ExperimentConfig from_file(const std::string& command, const std::string& path);
  void override_value(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values.count(key) != 0; }
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;
  double get_double_or(const std::string& key, double fallback) const;

  // "# ..." provenance lines: tool version plus the resolved config.
  std::string provenance_header() const;
};

void run_gen(const ExperimentConfig& cfg);
void run_train(const ExperimentConfig& cfg);
void run_eval(const ExperimentConfig& cfg);

// Returns true when any check reported violations (process exit code 3).
bool run_verify(const ExperimentConfig& cfg);

// Dataset manifest I/O (text; one record per line after the header).
void save_dataset_manifest(const std::string& path, const ExperimentConfig& cfg,
                           const std::vector<DatasetRecord>& records, bool force);
std::vector<DatasetRecord> load_dataset_manifest(const std::string& path);

}  // namespace goml2o

#endif  // GOML2O_CLI_HPP
