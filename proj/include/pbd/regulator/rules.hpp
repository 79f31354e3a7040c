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
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pbd/common/bytes.hpp"
#include "pbd/common/clock.hpp"
#include "pbd/crypto/type_id.hpp"

namespace pbd::regulator {

// Variables are a lowercase letter optionally followed by digits (x, y, x0).
// Every other predicate argument is a constant.
bool is_variable(std::string_view token);

using Bindings = std::map<std::string, std::string>;

//   consent(subject, verb, object)
//   approval(approver, subject, attribute)
struct PredicateTemplate {
  enum class Kind { kConsent, kApproval };
  Kind kind = Kind::kConsent;
  std::string a, b, c;

  // Throws Error(kConfig).
  static PredicateTemplate parse(std::string_view text);
  std::string canonical() const;
  // Substitutes bound variables; unbound variables are left as-is.
  PredicateTemplate instantiate(const Bindings& bindings) const;
  bool operator==(const PredicateTemplate&) const = default;
};

// `*`, `name:<te name>` or `sha256:<hex measurement>`.
struct TePattern {
  enum class Kind { kAny, kName, kMeasurement };
  Kind kind = Kind::kAny;
  std::string name;
  Digest measurement{};

  static TePattern parse(std::string_view text);
  std::string canonical() const;
  bool matches(std::string_view te_name, const Digest& te_measurement) const;
  bool operator==(const TePattern&) const = default;
};

// `role(var)`.
struct RequesterPattern {
  std::string role;
  std::string variable;
  bool operator==(const RequesterPattern&) const = default;
};

struct ValidityWindow {
  Timestamp not_before = 0;
  Timestamp not_after = 0;
  bool contains(Timestamp t) const { return t >= not_before && t <= not_after; }
  bool operator==(const ValidityWindow&) const = default;
};

// One line of a rule file:
//
//   rule id=<id> priority=<int> te=<TePattern> data=<TypePattern>
//        requester=<role(var)|-> requires=<t1;t2;...|-> window=<a..b|->
//
// Fields are space separated and values carry no spaces.
struct AuthRule {
  std::string rule_id;
  std::int64_t priority = 0;
  TePattern te;
  crypto::TypePattern data = crypto::TypePattern::parse("-");
  std::optional<RequesterPattern> requester;
  std::vector<PredicateTemplate> required;
  std::optional<ValidityWindow> window;

  std::string serialize() const;
  // Variables bound by the data and requester patterns.
  std::set<std::string> bound_variables() const;
  bool operator==(const AuthRule&) const = default;
};

// Rule file contents. Lines are `rule ...` or `link purpose=<p>` (purposes
// for which the regulator grants identity linking). Rules are kept in
// evaluation order: priority descending, then rule_id ascending.
struct RuleSet {
  std::vector<AuthRule> rules;
  std::set<std::string> link_purposes;

  // Throws Error(kConfig) naming the line: unknown fields, duplicate ids,
  // unbound predicate variables, malformed patterns.
  static RuleSet parse(std::string_view text);
  static RuleSet load(const std::string& path);
  std::string serialize() const;
};

}  // namespace pbd::regulator
