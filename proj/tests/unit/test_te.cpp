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
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "pbd/crypto/hash.hpp"
#include "pbd/te/manifest.hpp"
#include "pbd/te/runtime.hpp"
#include "support/mini_world.hpp"
#include "support/oracles.hpp"
#include "support/scan.hpp"

using namespace pbd;
using namespace pbd::te;
using pbd::testing::contains_text;
using pbd::testing::error_code_of;
using pbd::testing::MiniWorld;

namespace {

constexpr std::string_view kSinkManifest =
    "name = stats\nversion = 3\ninput_types = DT4/MedicalRecord(x), local:Gps\n"
    "output_types = DT7/CohortStats\nsink = true\n"
    "minimisation_policy = projection\n"
    "minimisation_policy.allowed_fields = diagnosis, age\n"
    "minimisation_policy.aggregate_only = true\ncallback = true\n";

std::size_t count_channel(const ChannelTap& tap, std::string_view channel) {
  std::size_t n = 0;
  for (const auto& [c, b] : tap.traffic()) n += c == channel;
  return n;
}

}  // namespace

TEST_CASE("manifest round-trips through its canonical form") {
  const Manifest m = Manifest::parse(kSinkManifest);
  CHECK(m.name == "stats");
  CHECK(m.sink);
  REQUIRE(m.minimisation);
  CHECK(m.minimisation->allowed_fields ==
        std::vector<std::string>{"diagnosis", "age"});
  CHECK(m.minimisation->aggregate_only);
  CHECK(Manifest::parse(m.serialize()) == m);
  CHECK(m.accepts_input(crypto::TypeId("DT4/MedicalRecord")));
  CHECK_FALSE(m.accepts_input(crypto::TypeId("DT2/MRIScan")));
  CHECK(m.declares_output(crypto::TypeId("DT7/CohortStats")));
}

TEST_CASE("manifest parser rejects unknown, duplicate and missing keys") {
  const std::string base(kSinkManifest);
  CHECK(error_code_of([&] { Manifest::parse(base + "colour = red\n"); }) ==
        ErrorCode::kConfig);
  CHECK(error_code_of([&] { Manifest::parse(base + "sink = false\n"); }) ==
        ErrorCode::kConfig);
  CHECK(error_code_of([&] { Manifest::parse("version = 1\n"); }) ==
        ErrorCode::kConfig);
}

TEST_CASE("measurement is deterministic and sensitive to every byte") {
  const Manifest m = Manifest::parse(kSinkManifest);
  const Bytes code = to_bytes("int main() { return 0; }");
  CHECK(measure(m, code) == measure(Manifest::parse(m.serialize()), code));

  std::set<Digest> seen{measure(m, code)};
  for (std::size_t i = 0; i < code.size(); ++i) {
    Bytes c = code;
    c[i] ^= 0x01;
    seen.insert(measure(m, c));
  }
  for (int v = 0; v < 100 - static_cast<int>(code.size()); ++v) {
    Manifest mv = m;
    mv.version = "4." + std::to_string(v);
    seen.insert(measure(mv, code));
  }
  CHECK(seen.size() == 101);
}

TEST_CASE("record encoding round-trips and rejects garbage") {
  const Record r{{"a", ""}, {"name", "Zoë"}, {"z", std::string(1000, 'x')}};
  CHECK(decode_record(encode_record(r)) == r);
  CHECK(error_code_of([] { decode_record(to_bytes("nope")); }) ==
        ErrorCode::kMalformed);
}

TEST_CASE("projection keeps only allowed fields") {
  const MinimisationPolicy p{{"diagnosis", "findings"}, false, std::nullopt};
  const Record full{{"name", "Jane"}, {"diagnosis", "lesion"},
                    {"findings", "4mm"}, {"age", "41"}};
  CHECK(minimise(full, p) == Record{{"diagnosis", "lesion"}, {"findings", "4mm"}});
  CHECK(minimise({{"name", "Jane"}}, p).empty());
}

TEST_CASE("aggregate-only minimisation matches an independent recount") {
  const MinimisationPolicy p{{"diagnosis", "age"}, true, std::nullopt};
  Rng rng(7);
  std::vector<Record> rows;
  std::map<std::string, std::map<std::string, int>> oracle;
  const char* diagnoses[] = {"clear", "lesion", "cyst"};
  for (int i = 0; i < 50; ++i) {
    Record r{{"name", "person" + std::to_string(i)},
             {"diagnosis", diagnoses[std::uniform_int_distribution<int>(0, 2)(rng)]},
             {"age", std::to_string(20 + std::uniform_int_distribution<int>(0, 3)(rng) * 10)}};
    for (const auto& f : {"diagnosis", "age"}) ++oracle[f][r.at(f)];
    rows.push_back(r);
  }
  const std::vector<Record> agg = minimise_batch(rows, p);
  REQUIRE(agg.size() == 1);
  CHECK_FALSE(agg[0].contains("name"));
  for (const auto& [field, counts] : oracle) {
    std::string expect;
    for (const auto& [value, n] : counts) {
      if (!expect.empty()) expect += ",";
      expect += value + ":" + std::to_string(n);
    }
    CHECK(agg[0].at(field) == expect);
  }
}

TEST_CASE("granted run decrypts inputs and seals typed outputs") {
  MiniWorld w;
  ChannelTap tap;
  TeRuntime rt(w.platform, Rng(9), &tap);
  REQUIRE(w.consent(w.patient, "scan-analysis", "HospitalA", "DT2/*") ==
          regulator::ConsentOutcome::kStored);

  const RunResult r = rt.run(w.mri, {w.scan(w.patient)}, w.reg);
  REQUIRE(r.outputs.size() == 1);
  CHECK(r.outputs[0].envelope.type_id == crypto::TypeId("DT4/MedicalRecord"));
  CHECK(r.outputs[0].envelope.subject == w.patient.vid.value);
  CHECK(w.reg.key_releases() == 1);

  // Plaintext never crosses a channel outside the execution context.
  for (const auto& [channel, bytes] : tap.traffic()) {
    CHECK_FALSE(contains_text(bytes, "Jane Roe"));
    CHECK_FALSE(contains_text(bytes, "lesion"));
  }

  // The order of milestones is fixed.
  std::vector<RuntimeEventKind> kinds;
  for (const auto& e : rt.events()) kinds.push_back(e.kind);
  CHECK(kinds == std::vector<RuntimeEventKind>{
                     RuntimeEventKind::kAttested, RuntimeEventKind::kKeyRequested,
                     RuntimeEventKind::kKeyProvisioned,
                     RuntimeEventKind::kDecrypted, RuntimeEventKind::kOutput});
}

TEST_CASE("sink output is minimised before it reaches the terminal") {
  MiniWorld w;
  ChannelTap tap;
  TeRuntime rt(w.platform, Rng(9), &tap);
  w.consent(w.patient, "scan-analysis", "HospitalA", "DT2/*");
  w.consent(w.patient, "consulted", regulator::vid_object(w.doctor.vid.value),
            "DT4/*");
  w.approve_doctor();
  const RunResult stage1 = rt.run(w.mri, {w.scan(w.patient)}, w.reg);
  RunOptions opts;
  opts.requester = w.doctor_requester();
  const RunResult stage2 = rt.run(w.terminal, stage1.outputs, w.reg, opts);
  REQUIRE(stage2.sink_rows.size() == 1);
  CHECK(stage2.sink_rows[0] ==
        Record{{"diagnosis", "lesion"}, {"findings", "size=4mm"}});
  CHECK(stage2.outputs.empty());
  for (const auto& [channel, bytes] : tap.traffic()) {
    CHECK_FALSE(contains_text(bytes, "Jane Roe"));
  }
}

TEST_CASE("a DENY aborts the run with no outputs and no key release") {
  MiniWorld w;
  ChannelTap tap;
  TeRuntime rt(w.platform, Rng(9), &tap);
  try {
    rt.run(w.mri, {w.scan(w.patient)}, w.reg);
    FAIL("run without consent succeeded");
  } catch (const AccessDenied& e) {
    CHECK(e.reason() == regulator::DenyReason::kPredicateMissing);
  }
  CHECK(w.reg.key_releases() == 0);
  CHECK(count_channel(tap, "output") == 0);
  CHECK(rt.events().back().kind == RuntimeEventKind::kAborted);
}

TEST_CASE("tampered code is unknown to the regulator") {
  MiniWorld w;
  w.consent(w.patient, "scan-analysis", "HospitalA", "DT2/*");
  TeRuntime rt(w.platform, Rng(9));
  TeInstance evil = w.mri;
  evil.code.back() ^= 0x80;
  try {
    rt.run(evil, {w.scan(w.patient)}, w.reg);
    FAIL("tampered TE was served");
  } catch (const AccessDenied& e) {
    CHECK(e.reason() == regulator::DenyReason::kTeUnknown);
  }
  CHECK(w.reg.key_releases() == 0);
}

TEST_CASE("undeclared output types abort every time with nothing sealed") {
  MiniWorld w;
  w.consent(w.patient, "scan-analysis", "HospitalA", "DT2/*");
  ChannelTap tap;
  TeRuntime rt(w.platform, Rng(9), &tap);
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    TeInstance leaky = w.mri;
    leaky.logic = [i](const std::vector<TypedValue>& in, const Record&) {
      std::vector<TypedValue> out;
      // A declared output first, so abort must also drop it.
      out.push_back({crypto::TypeId("DT4/MedicalRecord"), in[0].subject,
                     in[0].record});
      out.push_back({crypto::TypeId("Leak" + std::to_string(i)), std::nullopt,
                     in[0].record});
      return out;
    };
    try {
      rt.run(leaky, {w.scan(w.patient)}, w.reg);
    } catch (const Error& e) {
      violations += e.code() == ErrorCode::kTypeViolation;
    }
  }
  CHECK(violations == 100);
  CHECK(count_channel(tap, "output") == 0);
}

TEST_CASE("undeclared inputs are rejected before any key request") {
  MiniWorld w;
  TeRuntime rt(w.platform, Rng(9));
  const Delivery wrong{
      crypto::seal(crypto::TypeId("DT9/Genome"), w.patient.vid.value,
                   encode_record({{"g", "ACGT"}}), w.reg.public_key(),
                   w.scanner, w.rng),
      w.scanner.public_key};
  CHECK(error_code_of([&] { rt.run(w.mri, {wrong}, w.reg); }) ==
        ErrorCode::kTypeViolation);
  CHECK(w.reg.decisions().empty());

  RunOptions opts;
  opts.local_inputs.push_back(
      {crypto::TypeId("local:Gps"), std::nullopt, {{"x", "1"}}});
  CHECK(error_code_of([&] { rt.run(w.mri, {}, w.reg, opts); }) ==
        ErrorCode::kTypeViolation);
}

TEST_CASE("a producer key substitution is caught at open") {
  MiniWorld w;
  w.consent(w.patient, "scan-analysis", "HospitalA", "DT2/*");
  TeRuntime rt(w.platform, Rng(9));
  Delivery d = w.scan(w.patient);
  d.producer_public_key = crypto::generate_signing_keypair(w.rng).public_key;
  CHECK(error_code_of([&] { rt.run(w.mri, {d}, w.reg); }) ==
        ErrorCode::kSignatureInvalid);
}
