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
#include <numeric>

#include "doctest.h"
#include "pbd/scenarios/dbt.hpp"
#include "support/oracles.hpp"
#include "support/scan.hpp"

using namespace pbd;
using namespace pbd::scenarios;
using pbd::testing::error_code_of;

namespace {

DbtConfig small_config(std::size_t n) {
  DbtConfig c;
  c.beneficiaries = n;
  c.rsa_bits = 1024;
  return c;
}

std::int64_t ledger_sum(const std::vector<Posting>& postings) {
  std::int64_t s = 0;
  for (const Posting& p : postings) s += p.amount;
  return s;
}

}  // namespace

TEST_CASE("payment files round-trip and reject any edit") {
  Rng rng(3);
  const crypto::KeyPair ministry = crypto::generate_signing_keypair(rng);
  const PaymentFile f = sign_payment_file(
      {{rng.digest(), "PM-KISAN", 2000}, {rng.digest(), "SCHOLARSHIP", 1}},
      ministry);
  CHECK_NOTHROW(verify_payment_file(f, ministry.public_key));
  const PaymentFile g = PaymentFile::parse(f.serialize());
  CHECK(g.entries == f.entries);
  CHECK(g.signature == f.signature);

  PaymentFile edited = f;
  edited.entries[1].amount = 10;
  CHECK(error_code_of([&] { verify_payment_file(edited, ministry.public_key); }) ==
        ErrorCode::kBadPaymentFile);
  const PaymentFile zero = sign_payment_file({{rng.digest(), "X", 0}}, ministry);
  CHECK(error_code_of([&] { verify_payment_file(zero, ministry.public_key); }) ==
        ErrorCode::kBadPaymentFile);
  Bytes wire = f.serialize();
  wire.resize(wire.size() - 3);
  CHECK(error_code_of([&] { PaymentFile::parse(wire); }) == ErrorCode::kMalformed);
}

TEST_CASE("three beneficiaries are credited at their own banks") {
  DbtWorld w(small_config(3), 5);
  w.onboard();
  const PaymentFile f = w.make_payment_file();
  const DbtRunResult r = w.pay(f);
  REQUIRE_FALSE(r.file_rejected);
  CHECK(r.credited() == 3);
  CHECK(r.total_debits == r.total_credits);
  CHECK(ledger_sum(w.postings()) == 0);

  // Each credit lands on the bank-specific vid, never the DBT vid.
  for (std::size_t i = 0; i < 3; ++i) {
    const Beneficiary& b = w.beneficiaries()[i];
    const std::string account = b.bank + ":" + hex(b.bank_vid.value);
    bool found = false;
    for (const Posting& p : w.postings()) {
      if (p.account == account) {
        found = true;
        CHECK(p.amount == f.entries[i].amount);
        CHECK(p.memo == f.entries[i].scheme);
      }
      CHECK(p.account.find(hex(b.dbt_vid.value)) == std::string::npos);
    }
    CHECK(found);
  }
  CHECK(w.mapper_cooccurrences() == 3);
  CHECK(w.regulator("R3").key_releases() == 3);
}

TEST_CASE("a tampered payment file moves no money") {
  DbtWorld w(small_config(3), 5);
  w.onboard();
  PaymentFile f = w.make_payment_file();
  f.entries[0].amount *= 2;
  const DbtRunResult r = w.pay(f);
  CHECK(r.file_rejected);
  CHECK(r.outcomes.empty());
  CHECK(w.postings().empty());
  for (const auto* reg : w.regulators()) CHECK(reg->decisions().empty());
}

TEST_CASE("a missing mapping is reversed and conservation still holds") {
  DbtWorld w(small_config(4), 6);
  w.onboard({2});
  const DbtRunResult r = w.pay(w.make_payment_file());
  CHECK(r.credited() == 3);
  CHECK(r.outcomes[2].error == "MISSING_MAPPING");
  CHECK(r.total_debits == r.total_credits);
  CHECK(ledger_sum(w.postings()) == 0);
}

TEST_CASE("a deny inside NPCI reverses the treasury debit") {
  // Without an eligibility approval at R2 the transfer cannot enter NPCI.
  DbtConfig c = small_config(2);
  c.rules = dbt_default_rules(c.banks);
  c.rules["R2"] =
      "rule id=npci-transfer priority=10 te=name:npci-mapper "
      "data=DBT/Transfer(x) requester=- requires=approval(ministry,x,never) "
      "window=-\n";
  DbtWorld strict(c, 8);
  strict.onboard();
  const DbtRunResult r = strict.pay(strict.make_payment_file());
  CHECK(r.credited() == 0);
  for (const auto& o : r.outcomes) CHECK(o.error == "deny:PREDICATE_MISSING@npci");
  CHECK(r.total_debits == r.total_credits);
  CHECK(strict.mapper_cooccurrences() == 0);
}

TEST_CASE("only the mapper context ever holds both vids of a person") {
  const auto dir = std::filesystem::temp_directory_path() / "pbd-dbt-scan";
  DbtConfig c = small_config(100);
  c.work_dir = dir;
  DbtWorld w(c, 11);
  w.onboard();
  const DbtRunResult r = w.pay(w.make_payment_file());
  CHECK(r.credited() == 100);
  CHECK(r.total_debits == r.total_credits);
  CHECK(std::filesystem::exists(dir / "npci-mappings.sto"));

  const auto artifacts = w.artifacts();
  std::size_t both = 0, dbt_seen = 0, bank_seen = 0;
  for (const Beneficiary& b : w.beneficiaries()) {
    const std::string dh = hex(b.dbt_vid.value), bh = hex(b.bank_vid.value);
    for (const auto& [label, bytes] : artifacts) {
      const bool d = pbd::testing::contains_bytes(bytes, b.dbt_vid.value) ||
                     pbd::testing::contains_text(bytes, dh);
      const bool k = pbd::testing::contains_bytes(bytes, b.bank_vid.value) ||
                     pbd::testing::contains_text(bytes, bh);
      both += d && k;
      dbt_seen += d;
      bank_seen += k;
    }
  }
  CHECK(both == 0);
  // The scan is not vacuous: each vid shows up somewhere on its own.
  CHECK(dbt_seen >= 100);
  CHECK(bank_seen >= 100);
  CHECK(w.mapper_cooccurrences() == 100);
  std::filesystem::remove_all(dir);
}

TEST_CASE("the default DBT script meets every expectation") {
  const ScenarioResult r =
      dbt_run(small_config(100), Script::parse(dbt_default_script()), 42);
  for (const StepResult& s : r.steps) {
    CAPTURE(s.line);
    CAPTURE(s.outcome);
    CHECK(s.matched());
  }
  for (const InvariantResult& i : r.invariants) {
    CAPTURE(i.name);
    CAPTURE(i.detail);
    CHECK(i.holds);
  }
}

TEST_CASE("DBT configuration errors name the line") {
  const KvDocument bad = KvDocument::parse("beneficiaries = 0\n");
  CHECK(error_code_of([&] { DbtConfig::from_kv(bad); }) == ErrorCode::kConfig);
  const KvDocument unknown = KvDocument::parse("colour = red\n");
  CHECK(error_code_of([&] { DbtConfig::from_kv(unknown); }) == ErrorCode::kConfig);
  const KvDocument ok = KvDocument::parse("beneficiaries = 7\nbanks = X, Y\n");
  const DbtConfig c = DbtConfig::from_kv(ok);
  CHECK(c.beneficiaries == 7);
  CHECK(c.banks == std::vector<std::string>{"X", "Y"});
  CHECK(error_code_of([&] {
          dbt_run(small_config(3), Script::parse("onboard skip=9\n"), 1);
        }) == ErrorCode::kConfig);
}
