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
#include "pbd/cli/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <json.hpp>
#include <ostream>

#include "pbd/common/error.hpp"
#include "pbd/common/kv.hpp"
#include "pbd/crypto/hash.hpp"
#include "pbd/regulator/audit_log.hpp"
#include "pbd/regulator/rules.hpp"
#include "pbd/scenarios/contact_tracing.hpp"
#include "pbd/scenarios/dbt.hpp"
#include "pbd/scenarios/ehr.hpp"
#include "pbd/te/manifest.hpp"

namespace pbd::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using scenarios::ScenarioResult;
using scenarios::Script;

struct RunFlags {
  std::string scenario;
  std::string config;
  std::uint64_t seed = 0;
  std::string script;
  std::string rules;
  std::string manifests;
  std::string audit_out;
  std::string report_out;
};

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

std::string read_existing(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::kConfig, what + " not found: " + path.string());
  }
  return read_file(path.string());
}

// Manifest name -> text for every *.manifest file in `dir`.
std::map<std::string, std::string> load_manifests(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kConfig, "manifest directory not found: " + dir.string());
  }
  std::map<std::string, std::string> out;
  std::vector<fs::path> files;
  for (const auto& f : fs::directory_iterator(dir)) {
    if (f.path().extension() == ".manifest") files.push_back(f.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const std::string text = read_file(f.string());
    out[te::Manifest::parse(text).name] = text;
  }
  return out;
}

ScenarioResult run_scenario(const RunFlags& flags) {
  const fs::path config_path(flags.config);
  const KvDocument doc = KvDocument::parse(read_existing(config_path, "config"));
  const fs::path base = config_path.parent_path();
  if (const auto declared = doc.get("scenario"); declared && *declared != flags.scenario) {
    throw Error(ErrorCode::kConfig, "config is for scenario " + *declared);
  }
  std::optional<std::string> script_text;
  if (!flags.script.empty()) {
    script_text = read_existing(flags.script, "script");
  } else if (const auto s = doc.get("script")) {
    script_text = read_existing(resolve(base, *s), "script");
  }

  if (flags.scenario == "ehr") {
    scenarios::EhrConfig c = scenarios::EhrConfig::from_kv(doc);
    if (!flags.rules.empty()) c.rules = read_existing(flags.rules, "rules");
    if (!flags.manifests.empty()) {
      for (auto& [name, text] : load_manifests(flags.manifests)) c.manifests[name] = text;
    }
    regulator::RuleSet::parse(c.rules);
    return scenarios::ehr_run(
        c, Script::parse(script_text.value_or(scenarios::ehr_default_script())),
        flags.seed);
  }
  if (flags.scenario == "dbt") {
    scenarios::DbtConfig c = scenarios::DbtConfig::from_kv(doc);
    if (c.work_dir) c.work_dir = resolve(base, c.work_dir->string());
    c.rules = scenarios::dbt_default_rules(c.banks);
    if (!flags.rules.empty()) {
      // One <regulator>.rules file per overridden regulator.
      if (!fs::is_directory(flags.rules)) {
        throw Error(ErrorCode::kConfig, "dbt --rules takes a directory");
      }
      for (auto& [name, text] : c.rules) {
        const fs::path f = fs::path(flags.rules) / (name + ".rules");
        if (fs::exists(f)) text = read_file(f.string());
      }
    }
    if (!flags.manifests.empty()) {
      throw Error(ErrorCode::kConfig, "dbt manifests are derived from the bank list");
    }
    for (const auto& [name, text] : c.rules) regulator::RuleSet::parse(text);
    return scenarios::dbt_run(
        c, Script::parse(script_text.value_or(scenarios::dbt_default_script())),
        flags.seed);
  }
  if (flags.scenario == "contact-tracing") {
    scenarios::CtConfig c = scenarios::CtConfig::from_kv(doc);
    if (c.trajectories) c.trajectories = resolve(base, c.trajectories->string());
    if (!flags.rules.empty()) c.rules = read_existing(flags.rules, "rules");
    if (!flags.manifests.empty()) {
      const auto m = load_manifests(flags.manifests);
      const auto it = m.find("ct-trace");
      if (it == m.end()) {
        throw Error(ErrorCode::kConfig, "no ct-trace manifest in " + flags.manifests);
      }
      c.manifest = it->second;
    }
    regulator::RuleSet::parse(c.rules);
    return scenarios::ct_run(
        c, Script::parse(script_text.value_or(scenarios::ct_default_script())),
        flags.seed);
  }
  throw Error(ErrorCode::kConfig, "unknown scenario " + flags.scenario);
}

int do_run(const RunFlags& flags, std::ostream& out, std::ostream& err) {
  const ScenarioResult result = run_scenario(flags);
  const std::string report = render_report(result, flags.seed);
  if (!flags.audit_out.empty()) {
    fs::create_directories(flags.audit_out);
    for (const auto& [name, text] : result.audit_logs) {
      write_file((fs::path(flags.audit_out) / (name + ".audit")).string(), text);
    }
  }
  if (flags.report_out.empty()) {
    out << report;
  } else {
    write_file(flags.report_out, report);
  }
  for (const auto& s : result.steps) {
    if (!s.matched()) {
      err << "line " << s.line << ": " << s.action << " gave " << s.outcome
          << ", expected " << *s.expected << "\n";
    }
  }
  for (const auto& i : result.invariants) {
    if (!i.holds) err << "invariant " << i.name << " failed: " << i.detail << "\n";
  }
  return result.expectations_met() && result.invariants_hold() ? kExitOk
                                                                : kExitFailed;
}

int do_audit_verify(const std::string& path, std::ostream& out) {
  const std::string text = read_existing(path, "audit log");
  const regulator::AuditVerdict v = regulator::verify_audit_text(text);
  if (v.ok) {
    out << "ok\n";
    return kExitOk;
  }
  out << "first-bad-entry " << v.first_bad.value_or(0) << ": " << v.reason << "\n";
  return kExitFailed;
}

}  // namespace

std::string render_report(const ScenarioResult& result, std::uint64_t seed) {
  json steps = json::array();
  for (const auto& s : result.steps) {
    json j{{"line", s.line}, {"action", s.action}, {"outcome", s.outcome},
           {"matched", s.matched()}};
    if (s.expected) j["expected"] = *s.expected;
    steps.push_back(std::move(j));
  }
  json invariants = json::array();
  for (const auto& i : result.invariants) {
    invariants.push_back({{"name", i.name}, {"holds", i.holds}, {"detail", i.detail}});
  }
  std::string transcript;
  for (const auto& line : result.transcript) transcript += line + "\n";
  json audit = json::object();
  for (const auto& [name, text] : result.audit_logs) {
    audit[name] = hex(crypto::hash(text));
  }
  const json report{
      {"scenario", result.scenario},
      {"seed", seed},
      {"step_count", result.steps.size()},
      {"steps", steps},
      {"decisions", result.decisions},
      {"invariants", invariants},
      {"output_digests", result.output_digests},
      {"audit_log_digests", audit},
      {"transcript_digest", hex(crypto::hash(transcript))},
      {"expectations_met", result.expectations_met()},
      {"invariants_hold", result.invariants_hold()},
  };
  return report.dump(2) + "\n";
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Regulated trusted-executable scenarios and audit tools", "pbd"};
  app.require_subcommand(1);

  RunFlags flags;
  CLI::App* run_cmd = app.add_subcommand("run", "Run a scenario script");
  run_cmd->add_option("--scenario", flags.scenario, "ehr, dbt or contact-tracing")
      ->required()
      ->check(CLI::IsMember({"ehr", "dbt", "contact-tracing"}));
  run_cmd->add_option("--config", flags.config, "Scenario config (key = value)")
      ->required();
  run_cmd->add_option("--seed", flags.seed, "Seed for every random choice")
      ->required();
  run_cmd->add_option("--script", flags.script, "Step list; default per scenario");
  run_cmd->add_option("--rules", flags.rules,
                      "Rule file (dbt: directory of <Rn>.rules)");
  run_cmd->add_option("--manifests", flags.manifests,
                      "Directory of *.manifest overrides");
  run_cmd->add_option("--audit-out", flags.audit_out,
                      "Directory for <regulator>.audit files");
  run_cmd->add_option("--report-out", flags.report_out,
                      "Report path; standard output by default");

  std::string audit_path;
  CLI::App* audit_cmd =
      app.add_subcommand("audit-verify", "Verify an audit log hash chain");
  audit_cmd->add_option("path", audit_path, "Audit log file")->required();

  std::string rules_path;
  CLI::App* rules_cmd =
      app.add_subcommand("check-rules", "Parse a rule file and print it canonically");
  rules_cmd->add_option("path", rules_path, "Rule file")->required();

  std::string manifest_path;
  CLI::App* manifest_cmd = app.add_subcommand(
      "check-manifest", "Parse a manifest and print it canonically");
  manifest_cmd->add_option("path", manifest_path, "Manifest file")->required();

  // CLI11 wants argv order reversed for its vector overload.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kExitConfig;
  }

  try {
    if (*run_cmd) return do_run(flags, out, err);
    if (*audit_cmd) return do_audit_verify(audit_path, out);
    if (*rules_cmd) {
      out << regulator::RuleSet::parse(read_existing(rules_path, "rules")).serialize();
      return kExitOk;
    }
    if (*manifest_cmd) {
      out << te::Manifest::parse(read_existing(manifest_path, "manifest")).serialize();
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace pbd::cli
