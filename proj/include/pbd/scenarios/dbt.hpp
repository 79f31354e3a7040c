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
// Direct benefit transfer. The ministry signs a payment file against
// DBT-specific vids; the PFMS TE (gated by R1) turns entries into transfers;
// the NPCI mapper TE (transfers gated by R2, mappings by R3) converts each
// to a credit against the bank-specific vid; the bank TE (R4) posts it.
// Only the mapper's execution context ever holds both vids of a person.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pbd/common/clock.hpp"
#include "pbd/common/kv.hpp"
#include "pbd/identity/credential.hpp"
#include "pbd/identity/identity.hpp"
#include "pbd/regulator/regulator.hpp"
#include "pbd/scenarios/common.hpp"
#include "pbd/scenarios/script.hpp"
#include "pbd/store/store.hpp"
#include "pbd/te/runtime.hpp"

namespace pbd::scenarios {

struct PaymentEntry {
  Digest dbt_vid{};
  std::string scheme;
  std::int64_t amount = 0;  // integer currency units

  bool operator==(const PaymentEntry&) const = default;
};

struct PaymentFile {
  std::vector<PaymentEntry> entries;
  Bytes signature;  // Ed25519 by the ministry

  Bytes signed_portion() const;
  Bytes serialize() const;  // "PAY1"
  // Throws Error(kMalformed).
  static PaymentFile parse(ByteView data);
};

PaymentFile sign_payment_file(std::vector<PaymentEntry> entries,
                              const crypto::KeyPair& ministry);
// Throws Error(kBadPaymentFile) if the signature fails or an amount is not
// positive.
void verify_payment_file(const PaymentFile& file, ByteView ministry_public_key);

// Regulator name (R1..R4) -> rule text.
std::map<std::string, std::string> dbt_default_rules(
    const std::vector<std::string>& banks);
std::string dbt_default_script();

struct DbtConfig {
  std::size_t beneficiaries = 100;
  std::vector<std::string> banks{"BankA", "BankB", "BankC"};
  std::vector<std::string> schemes{"PM-KISAN", "LPG-SUBSIDY", "SCHOLARSHIP"};
  std::int64_t max_amount = 6000;
  int rsa_bits = 2048;
  // Stores persist here when set.
  std::optional<std::filesystem::path> work_dir;
  // Empty means dbt_default_rules(banks).
  std::map<std::string, std::string> rules;

  // Keys: beneficiaries, banks, schemes (comma lists), max_amount,
  // rsa_bits, work_dir.
  static DbtConfig from_kv(const KvDocument& doc);
};

struct Beneficiary {
  identity::MasterIdentity master;
  identity::VirtualIdentity dbt_vid;
  crypto::KeyPair dbt_key;
  identity::VidKeyCertificate dbt_cert;
  std::string bank;
  identity::VirtualIdentity bank_vid;
  bool mapped = false;
};

struct Posting {
  std::string account;
  std::int64_t amount = 0;  // negative is a debit
  std::string memo;
};

struct TransferOutcome {
  std::size_t entry = 0;
  bool credited = false;
  std::string error;  // "MISSING_MAPPING", "deny:<REASON>@<stage>", or empty
};

struct DbtRunResult {
  bool file_rejected = false;
  std::string rejection;
  std::vector<TransferOutcome> outcomes;
  std::int64_t total_debits = 0;
  std::int64_t total_credits = 0;

  std::size_t credited() const;
};

class DbtWorld {
 public:
  DbtWorld(const DbtConfig& config, std::uint64_t seed);
  ~DbtWorld();

  DbtWorld(const DbtWorld&) = delete;
  DbtWorld& operator=(const DbtWorld&) = delete;

  // Onboards every beneficiary: dual vids, eligibility and KYC approvals,
  // mapping consent, and a mapping envelope in the NPCI store unless the
  // index is in `skip_mapping`.
  void onboard(const std::set<std::size_t>& skip_mapping = {});

  // One entry per onboarded beneficiary, random scheme and amount.
  PaymentFile make_payment_file();
  const crypto::KeyPair& ministry_key() const { return ministry_; }

  DbtRunResult pay(const PaymentFile& file);

  const std::vector<Beneficiary>& beneficiaries() const { return people_; }
  const std::vector<Posting>& postings() const { return postings_; }
  std::size_t mapper_cooccurrences() const { return *cooccurrences_; }
  regulator::Regulator& regulator(const std::string& name);
  std::vector<const regulator::Regulator*> regulators() const;
  te::ChannelTap& tap() { return tap_; }

  // Every component log and persisted file, by label.
  std::vector<std::pair<std::string, Bytes>> artifacts() const;

 private:
  struct Runtimes;
  te::Delivery seal_to(const std::string& regulator, const crypto::TypeId& type,
                       const Digest& subject, const te::Record& record,
                       const crypto::KeyPair& producer);

  DbtConfig config_;
  Rng rng_;
  ManualClock clock_;
  identity::IdentityAuthority authority_;
  std::map<std::string, std::unique_ptr<regulator::Regulator>> regs_;
  identity::CredentialIssuer ministry_issuer_;
  identity::CredentialIssuer kyc_;
  identity::CredentialIssuer banking_;
  crypto::KeyPair ministry_;
  std::unique_ptr<Runtimes> rt_;
  te::ChannelTap tap_;
  std::unique_ptr<store::EncryptedStore> npci_store_;
  std::optional<PaymentFile> last_file_;
  std::map<std::string, te::TeInstance> tes_;
  std::map<std::string, Party> clerks_;
  std::vector<Beneficiary> people_;
  std::vector<Posting> postings_;
  std::shared_ptr<std::size_t> cooccurrences_;
};

ScenarioResult dbt_run(const DbtConfig& config, const Script& script,
                       std::uint64_t seed);

}  // namespace pbd::scenarios
