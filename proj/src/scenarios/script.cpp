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
#include "pbd/scenarios/script.hpp"

#include <algorithm>
#include <sstream>

#include "pbd/common/error.hpp"
#include "pbd/common/kv.hpp"

namespace pbd::scenarios {
namespace {

[[noreturn]] void config_error(int line, const std::string& what) {
  throw Error(ErrorCode::kConfig, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

const std::string& ScriptStep::arg(const std::string& key) const {
  auto it = args.find(key);
  if (it == args.end()) config_error(line, action + " needs " + key + "=");
  return it->second;
}

std::int64_t ScriptStep::int_arg(const std::string& key) const {
  try {
    return parse_int(arg(key));
  } catch (const Error& e) {
    if (e.detail().rfind("line ", 0) == 0) throw;
    config_error(line, key + " is not an integer");
  }
}

std::string ScriptStep::arg_or(const std::string& key, std::string fallback) const {
  auto it = args.find(key);
  return it == args.end() ? fallback : it->second;
}

std::int64_t ScriptStep::int_arg_or(const std::string& key,
                                    std::int64_t fallback) const {
  return args.contains(key) ? int_arg(key) : fallback;
}

Script Script::parse(std::string_view text) {
  Script s;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view t = trim(raw);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream words{std::string(t)};
    ScriptStep step;
    step.line = line;
    words >> step.action;
    std::string word;
    while (words >> word) {
      const auto eq = word.find('=');
      if (eq == std::string::npos || eq == 0) {
        config_error(line, "expected key=value, got '" + word + "'");
      }
      std::string key = word.substr(0, eq);
      std::string value = word.substr(eq + 1);
      if (key == "expect") {
        step.expect = value;
      } else if (!step.args.emplace(key, value).second) {
        config_error(line, "duplicate argument " + key);
      }
    }
    s.steps.push_back(std::move(step));
  }
  return s;
}

Script Script::load(const std::string& path) { return parse(read_file(path)); }

bool ScenarioResult::expectations_met() const {
  return std::all_of(steps.begin(), steps.end(),
                     [](const StepResult& s) { return s.matched(); });
}

bool ScenarioResult::invariants_hold() const {
  return std::all_of(invariants.begin(), invariants.end(),
                     [](const InvariantResult& i) { return i.holds; });
}

void tally_decisions(const regulator::Regulator& r,
                     std::map<std::string, std::size_t>& out) {
  for (const auto& d : r.decisions()) {
    ++out[d.granted ? "GRANT"
                    : "DENY:" + std::string(regulator::to_string(d.reason))];
  }
}

void unknown_action(const ScriptStep& step) {
  config_error(step.line, "unknown action '" + step.action + "'");
}

}  // namespace pbd::scenarios
