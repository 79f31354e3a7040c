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
// The `pbd` operator tool:
//
//   pbd run --scenario ehr|dbt|contact-tracing --config <kv file> --seed <n>
//           [--script <file>] [--rules <file or dir>] [--manifests <dir>]
//           [--audit-out <dir>] [--report-out <file>]
//   pbd audit-verify <audit file>
//   pbd check-rules <rule file>
//   pbd check-manifest <manifest file>
//
// Exit codes: 0 success, 1 an expectation or invariant failed (or the audit
// log is tampered), 2 configuration or usage error.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pbd/scenarios/script.hpp"

namespace pbd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitConfig = 2;

// Deterministic JSON run report. Equal (config, seed) give equal bytes.
std::string render_report(const scenarios::ScenarioResult& result,
                          std::uint64_t seed);

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace pbd::cli
