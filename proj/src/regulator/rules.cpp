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
#include "pbd/regulator/rules.hpp"

#include <algorithm>

#include "pbd/common/error.hpp"
#include "pbd/common/kv.hpp"

namespace pbd::regulator {
namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::kConfig, what);
}

// "head(arg,arg)" -> head and args.
std::pair<std::string, std::vector<std::string>> parse_call(
    std::string_view text) {
  const std::size_t open = text.find('(');
  if (open == std::string_view::npos || open == 0 || text.back() != ')') {
    config_error("expected name(args): " + std::string(text));
  }
  std::vector<std::string> args;
  for (const std::string& a :
       split(text.substr(open + 1, text.size() - open - 2), ',')) {
    const std::string_view t = trim(a);
    if (t.empty()) config_error("empty argument in " + std::string(text));
    args.emplace_back(t);
  }
  return {std::string(text.substr(0, open)), std::move(args)};
}

}  // namespace

bool is_variable(std::string_view token) {
  if (token.empty() || token[0] < 'a' || token[0] > 'z') return false;
  return std::all_of(token.begin() + 1, token.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

PredicateTemplate PredicateTemplate::parse(std::string_view text) {
  auto [head, args] = parse_call(trim(text));
  PredicateTemplate t;
  if (head == "consent") {
    t.kind = Kind::kConsent;
  } else if (head == "approval") {
    t.kind = Kind::kApproval;
  } else {
    config_error("unknown predicate " + head);
  }
  if (args.size() != 3) config_error(head + " takes 3 arguments");
  t.a = args[0];
  t.b = args[1];
  t.c = args[2];
  return t;
}

std::string PredicateTemplate::canonical() const {
  return std::string(kind == Kind::kConsent ? "consent" : "approval") + "(" +
         a + "," + b + "," + c + ")";
}

PredicateTemplate PredicateTemplate::instantiate(const Bindings& bindings) const {
  auto sub = [&](const std::string& s) {
    auto it = bindings.find(s);
    return (is_variable(s) && it != bindings.end()) ? it->second : s;
  };
  return PredicateTemplate{kind, sub(a), sub(b), sub(c)};
}

TePattern TePattern::parse(std::string_view text) {
  TePattern p;
  if (text == "*") return p;
  if (text.rfind("name:", 0) == 0 && text.size() > 5) {
    p.kind = Kind::kName;
    p.name = std::string(text.substr(5));
    return p;
  }
  if (text.rfind("sha256:", 0) == 0) {
    p.kind = Kind::kMeasurement;
    try {
      p.measurement = digest_from_hex(text.substr(7));
    } catch (const Error&) {
      config_error("bad measurement in te pattern");
    }
    return p;
  }
  config_error("te pattern must be *, name:<n> or sha256:<hex>");
}

std::string TePattern::canonical() const {
  switch (kind) {
    case Kind::kAny: return "*";
    case Kind::kName: return "name:" + name;
    case Kind::kMeasurement: return "sha256:" + hex(measurement);
  }
  return "*";
}

bool TePattern::matches(std::string_view te_name,
                        const Digest& te_measurement) const {
  switch (kind) {
    case Kind::kAny: return true;
    case Kind::kName: return te_name == name;
    case Kind::kMeasurement: return te_measurement == measurement;
  }
  return false;
}

std::set<std::string> AuthRule::bound_variables() const {
  std::set<std::string> vars;
  if (data.variable()) vars.insert(*data.variable());
  if (requester) vars.insert(requester->variable);
  return vars;
}

std::string AuthRule::serialize() const {
  std::string out = "rule id=" + rule_id + " priority=" +
                    std::to_string(priority) + " te=" + te.canonical() +
                    " data=" + data.canonical() + " requester=";
  out += requester ? requester->role + "(" + requester->variable + ")" : "-";
  out += " requires=";
  if (required.empty()) {
    out += "-";
  } else {
    std::vector<std::string> parts;
    for (const auto& p : required) parts.push_back(p.canonical());
    out += join(parts, ";");
  }
  out += " window=";
  out += window ? std::to_string(window->not_before) + ".." +
                      std::to_string(window->not_after)
                : "-";
  return out;
}

RuleSet RuleSet::parse(std::string_view text) {
  RuleSet set;
  std::set<std::string> ids;
  int line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    try {
      std::vector<std::string> tokens;
      for (const std::string& t : split(line, ' ')) {
        if (!t.empty()) tokens.push_back(t);
      }
      std::map<std::string, std::string> fields;
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        const std::size_t eq = tokens[i].find('=');
        if (eq == std::string::npos || eq == 0) {
          config_error("expected key=value, got " + tokens[i]);
        }
        if (!fields.emplace(tokens[i].substr(0, eq), tokens[i].substr(eq + 1))
                 .second) {
          config_error("duplicate field " + tokens[i].substr(0, eq));
        }
      }
      auto take = [&](const std::string& key) {
        auto it = fields.find(key);
        if (it == fields.end()) config_error("missing field " + key);
        std::string v = it->second;
        fields.erase(it);
        return v;
      };

      if (tokens[0] == "link") {
        set.link_purposes.insert(take("purpose"));
      } else if (tokens[0] == "rule") {
        AuthRule r;
        r.rule_id = take("id");
        r.priority = parse_int(take("priority"));
        r.te = TePattern::parse(take("te"));
        try {
          r.data = crypto::TypePattern::parse(take("data"));
        } catch (const Error& e) {
          if (e.code() == ErrorCode::kConfig) throw;
          config_error("bad data pattern: " + e.detail());
        }
        const std::string req = take("requester");
        if (req != "-") {
          auto [role, args] = parse_call(req);
          if (args.size() != 1 || !is_variable(args[0])) {
            config_error("requester must be role(variable)");
          }
          r.requester = RequesterPattern{role, args[0]};
        }
        const std::string requires_text = take("requires");
        if (requires_text != "-") {
          for (const std::string& p : split(requires_text, ';')) {
            r.required.push_back(PredicateTemplate::parse(p));
          }
        }
        const std::string win = take("window");
        if (win != "-") {
          const std::size_t dots = win.find("..");
          if (dots == std::string::npos) config_error("window must be a..b");
          ValidityWindow w{parse_int(win.substr(0, dots)),
                           parse_int(win.substr(dots + 2))};
          if (w.not_after < w.not_before) config_error("empty window");
          r.window = w;
        }
        if (r.data.variable() && r.requester &&
            *r.data.variable() == r.requester->variable) {
          config_error("data and requester variables must differ");
        }
        const auto bound = r.bound_variables();
        for (const auto& p : r.required) {
          for (const std::string* arg : {&p.a, &p.b, &p.c}) {
            if (is_variable(*arg) && !bound.contains(*arg)) {
              config_error("variable " + *arg + " in " + p.canonical() +
                           " is not bound by the data or requester pattern");
            }
          }
          if (p.kind == PredicateTemplate::Kind::kConsent && !is_variable(p.a)) {
            config_error("consent subject must be a variable");
          }
        }
        if (!ids.insert(r.rule_id).second) {
          config_error("duplicate rule id " + r.rule_id);
        }
        set.rules.push_back(std::move(r));
      } else {
        config_error("unknown record " + tokens[0]);
      }
      if (!fields.empty()) config_error("unknown field " + fields.begin()->first);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, where + e.detail());
    }
  }
  std::stable_sort(set.rules.begin(), set.rules.end(),
                   [](const AuthRule& x, const AuthRule& y) {
                     if (x.priority != y.priority) return x.priority > y.priority;
                     return x.rule_id < y.rule_id;
                   });
  return set;
}

RuleSet RuleSet::load(const std::string& path) { return parse(read_file(path)); }

std::string RuleSet::serialize() const {
  std::string out;
  for (const AuthRule& r : rules) out += r.serialize() + "\n";
  for (const std::string& p : link_purposes) out += "link purpose=" + p + "\n";
  return out;
}

}  // namespace pbd::regulator
