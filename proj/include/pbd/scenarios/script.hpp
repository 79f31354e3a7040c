// Copyright 2026 The pbd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Declarative scenario scripts and the transcript a run produces.
//
//   # comment
//   consent patient=0 verb=scan-analysis object=HospitalA scope=DT2/*
//   analyse patient=0 expect=grant
//
// One step per line: an action word, then key=value arguments. `expect`
// is compared verbatim against the step's outcome string.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pbd/regulator/regulator.hpp"

namespace pbd::scenarios {

struct ScriptStep {
  int line = 0;
  std::string action;
  std::map<std::string, std::string> args;
  std::optional<std::string> expect;

  // Throw Error(kConfig) naming the line.
  const std::string& arg(const std::string& key) const;
  std::int64_t int_arg(const std::string& key) const;
  std::string arg_or(const std::string& key, std::string fallback) const;
  std::int64_t int_arg_or(const std::string& key, std::int64_t fallback) const;
};

struct Script {
  std::vector<ScriptStep> steps;

  // Throws Error(kConfig).
  static Script parse(std::string_view text);
  static Script load(const std::string& path);
};

struct StepResult {
  int line = 0;
  std::string action;
  std::string outcome;
  std::optional<std::string> expected;

  bool matched() const { return !expected || *expected == outcome; }
};

struct InvariantResult {
  std::string name;
  bool holds = false;
  std::string detail;
};

struct ScenarioResult {
  std::string scenario;
  std::vector<StepResult> steps;
  std::vector<InvariantResult> invariants;
  // "GRANT" or "DENY:<REASON>" -> count, over every regulator in the run.
  std::map<std::string, std::size_t> decisions;
  // Label -> hex SHA-256 of an output the run produced.
  std::map<std::string, std::string> output_digests;
  // One line per envelope, access request and decision, in order.
  std::vector<std::string> transcript;
  // Regulator name -> serialized audit log.
  std::map<std::string, std::string> audit_logs;

  bool expectations_met() const;
  bool invariants_hold() const;
};

void tally_decisions(const regulator::Regulator& r,
                     std::map<std::string, std::size_t>& out);

// Unknown action in a script; always a config error.
[[noreturn]] void unknown_action(const ScriptStep& step);

}  // namespace pbd::scenarios
