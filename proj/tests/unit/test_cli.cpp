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
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "doctest.h"
#include "pbd/cli/cli.hpp"
#include "pbd/common/kv.hpp"

using namespace pbd;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = PBD_FIXTURE_DIR;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome pbd_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string fixture(const std::string& name) { return (kFixtures / name).string(); }

Outcome run_ehr(const std::string& script, const std::string& seed = "1") {
  return pbd_cli({"run", "--scenario", "ehr", "--config", fixture("ehr.conf"),
                  "--seed", seed, "--script", fixture(script)});
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pbd-cli-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("happy-path fixture exits 0 with the fixture's grant count") {
  const Outcome o = run_ehr("ehr-happy.script");
  CHECK(o.code == cli::kExitOk);
  const auto report = nlohmann::json::parse(o.out);
  CHECK(report["scenario"] == "ehr");
  CHECK(report["step_count"] == 6);
  CHECK(report["decisions"]["GRANT"] == 2);
  CHECK(report["expectations_met"] == true);
  CHECK(report["invariants_hold"] == true);
}

TEST_CASE("a missing consent is an expected deny, not a failure") {
  const Outcome o = run_ehr("ehr-missing-consent.script");
  CHECK(o.code == cli::kExitOk);
  const auto report = nlohmann::json::parse(o.out);
  CHECK(report["decisions"]["DENY:PREDICATE_MISSING"] == 1);
  CHECK_FALSE(report["decisions"].contains("GRANT"));
}

TEST_CASE("an unmet expectation exits 1 and names the line") {
  const Outcome o = run_ehr("ehr-wrong-expectation.script");
  CHECK(o.code == cli::kExitFailed);
  CHECK(o.err.find("line 3") != std::string::npos);
}

TEST_CASE("configuration and usage errors exit 2") {
  CHECK(pbd_cli({"run", "--scenario", "ehr", "--config", fixture("ehr-bad.conf"),
                 "--seed", "1"})
            .code == cli::kExitConfig);
  CHECK(pbd_cli({"run", "--scenario", "ehr", "--config", fixture("nope.conf"),
                 "--seed", "1"})
            .code == cli::kExitConfig);
  CHECK(pbd_cli({"run", "--scenario", "voting", "--config", fixture("ehr.conf"),
                 "--seed", "1"})
            .code == cli::kExitConfig);
  CHECK(pbd_cli({"run", "--scenario", "ehr", "--config", fixture("ehr.conf")}).code ==
        cli::kExitConfig);
  CHECK(pbd_cli({"run", "--scenario", "dbt", "--config", fixture("ehr.conf"),
                 "--seed", "1"})
            .code == cli::kExitConfig);
  CHECK(pbd_cli({}).code == cli::kExitConfig);
}

TEST_CASE("equal seeds give byte-identical reports") {
  const Outcome a = run_ehr("ehr-happy.script", "9");
  const Outcome b = run_ehr("ehr-happy.script", "9");
  const Outcome c = run_ehr("ehr-happy.script", "10");
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);

  const fs::path dir = scratch("report");
  const std::string path = (dir / "r.json").string();
  CHECK(pbd_cli({"run", "--scenario", "ehr", "--config", fixture("ehr.conf"),
                 "--seed", "9", "--script", fixture("ehr-happy.script"),
                 "--report-out", path})
            .code == cli::kExitOk);
  CHECK(read_file(path) == a.out);
  fs::remove_all(dir);
}

TEST_CASE("rule and manifest overrides change the run") {
  const Outcome base = pbd_cli({"run", "--scenario", "ehr", "--config",
                                fixture("ehr.conf"), "--seed", "1", "--script",
                                fixture("ehr-analyst.script")});
  CHECK(base.code == cli::kExitOk);
  const Outcome o = pbd_cli({"run", "--scenario", "ehr", "--config",
                             fixture("ehr.conf"), "--seed", "1", "--script",
                             fixture("ehr-analyst.script"), "--rules",
                             fixture("ehr.rules")});
  // Without the analyst rule the stats step hits NO_RULE.
  CHECK(o.code == cli::kExitFailed);
  CHECK(o.err.find("NO_RULE") != std::string::npos);
  const Outcome happy = pbd_cli({"run", "--scenario", "ehr", "--config",
                                 fixture("ehr.conf"), "--seed", "1", "--manifests",
                                 fixture("manifests")});
  CHECK(happy.code == cli::kExitOk);
}

TEST_CASE("dbt and contact-tracing fixtures pass") {
  CHECK(pbd_cli({"run", "--scenario", "dbt", "--config", fixture("dbt.conf"),
                 "--seed", "2"})
            .code == cli::kExitOk);
  CHECK(pbd_cli({"run", "--scenario", "dbt", "--config", fixture("dbt.conf"),
                 "--seed", "2", "--rules", fixture("dbt-rules"), "--script",
                 fixture("dbt-strict.script")})
            .code == cli::kExitOk);
  CHECK(pbd_cli({"run", "--scenario", "contact-tracing", "--config",
                 fixture("contact-tracing-file.conf"), "--seed", "3"})
            .code == cli::kExitOk);
}

TEST_CASE("audit-verify reports the first bad entry") {
  const fs::path dir = scratch("audit");
  REQUIRE(pbd_cli({"run", "--scenario", "ehr", "--config", fixture("ehr.conf"),
                   "--seed", "4", "--script", fixture("ehr-happy.script"),
                   "--audit-out", dir.string()})
              .code == cli::kExitOk);
  const std::string path = (dir / "R.audit").string();
  const Outcome ok = pbd_cli({"audit-verify", path});
  CHECK(ok.code == cli::kExitOk);
  CHECK(ok.out == "ok\n");

  const std::string text = read_file(path);
  std::vector<std::string> lines = split(text, '\n');
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  const std::size_t entries = lines.size() - 1;
  REQUIRE(entries >= 4);

  // Bit flip in entry k.
  for (std::size_t k = 0; k < entries; ++k) {
    std::vector<std::string> flipped = lines;
    std::string& line = flipped[k + 1];
    line[line.size() / 2] ^= 0x01;
    write_file(path, join(flipped, "\n") + "\n");
    const Outcome o = pbd_cli({"audit-verify", path});
    CAPTURE(k);
    CHECK(o.code == cli::kExitFailed);
    CHECK(o.out.rfind("first-bad-entry " + std::to_string(k) + ":", 0) == 0);
  }
  // Truncation after entry 2.
  std::vector<std::string> cut(lines.begin(), lines.begin() + 3);
  write_file(path, join(cut, "\n") + "\n");
  const Outcome t = pbd_cli({"audit-verify", path});
  CHECK(t.code == cli::kExitFailed);
  CHECK(t.out.rfind("first-bad-entry 2:", 0) == 0);

  CHECK(pbd_cli({"audit-verify", (dir / "missing.audit").string()}).code ==
        cli::kExitConfig);
  fs::remove_all(dir);
}

TEST_CASE("check-rules and check-manifest print canonical forms") {
  const Outcome r = pbd_cli({"check-rules", fixture("ehr.rules")});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("rule id=doctor-view") != std::string::npos);
  const Outcome m =
      pbd_cli({"check-manifest", fixture("manifests/doctor-terminal.manifest")});
  CHECK(m.code == cli::kExitOk);
  CHECK(m.out.find("name = doctor-terminal") != std::string::npos);
  CHECK(pbd_cli({"check-manifest", fixture("ehr.rules")}).code == cli::kExitConfig);
}
