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
// Hospital EHR pipeline: a scanner seals DT2 scans, the MRI TE turns them
// into DT4 records in the encrypted store, a doctor's terminal shows a
// minimised DT5 view and an analyst sink sees only aggregates.
#pragma once

#include <map>
#include <memory>
#include <optional>
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

std::string ehr_default_rules();
// Manifest name -> manifest text for mri-analysis, doctor-terminal and
// analyst-stats.
std::map<std::string, std::string> ehr_default_manifests();
std::string ehr_default_script();

struct EhrConfig {
  std::size_t patients = 3;
  std::size_t doctors = 2;
  std::size_t analysts = 1;
  Timestamp consent_ttl = 86400;
  int rsa_bits = 2048;
  std::string rules = ehr_default_rules();
  std::map<std::string, std::string> manifests = ehr_default_manifests();

  // Keys: patients, doctors, analysts, consent_ttl, rsa_bits. Throws
  // Error(kConfig) for unknown keys.
  static EhrConfig from_kv(const KvDocument& doc);
};

using EhrParty = Party;

class EhrWorld {
 public:
  EhrWorld(const EhrConfig& config, std::uint64_t seed);

  EhrWorld(const EhrWorld&) = delete;
  EhrWorld& operator=(const EhrWorld&) = delete;

  // Objects name a party as "doctor:<i>", "analyst:<i>" or a literal.
  regulator::ConsentOutcome consent(std::size_t patient, const std::string& verb,
                                    const std::string& object,
                                    const std::string& scope,
                                    std::optional<Timestamp> ttl = std::nullopt);
  // Revokes the patient's most recent stored consent with `verb`.
  regulator::ConsentOutcome revoke(std::size_t patient, const std::string& verb);
  // `blind` obtains the credential under the council's vid for the doctor
  // and presents it under the hospital vid.
  regulator::ApprovalOutcome approve_doctor(std::size_t doctor, bool blind);
  regulator::ApprovalOutcome approve_analyst(std::size_t analyst);

  // Scanner seals a DT2 scan for the patient into the pending queue.
  void scan(std::size_t patient);
  // Step outcomes: "grant", "deny:<REASON>", "violation".
  std::string analyse(std::size_t patient);
  std::string view(std::size_t doctor, std::size_t patient);
  std::string stats(std::size_t analyst, bool rows);
  // Runs the MRI TE with one byte of its code flipped.
  std::string analyse_tampered(std::size_t patient);
  // Presents the patient's pending scan under another patient's subject.
  std::string analyse_swapped(std::size_t patient, std::size_t claimed);

  void advance(std::int64_t seconds) { clock_.advance(seconds); }

  regulator::Regulator& regulator() { return *reg_; }
  const regulator::Regulator& regulator() const { return *reg_; }
  te::ChannelTap& tap() { return tap_; }
  store::EncryptedStore& store() { return store_; }
  te::TeRuntime& runtime() { return runtime_; }
  const std::vector<EhrParty>& patients() const { return patients_; }
  const std::vector<EhrParty>& doctors() const { return doctors_; }
  const std::vector<te::Record>& doctor_outputs() const { return doctor_outputs_; }
  const std::vector<te::Record>& analyst_outputs() const { return analyst_outputs_; }
  // Plaintext record contents the scanner produced, for leak scans.
  const std::vector<te::Record>& ground_truth() const { return truth_; }
  const te::TeInstance& te(const std::string& name) const;
  ManualClock& clock() { return clock_; }

 private:
  std::string run(const te::TeInstance& te,
                  const std::vector<te::Delivery>& inputs,
                  const te::RunOptions& options, te::RunResult* result);
  std::string resolve_object(const std::string& object) const;

  EhrConfig config_;
  Rng rng_;
  ManualClock clock_;
  identity::IdentityAuthority authority_;
  te::Platform platform_;
  std::unique_ptr<regulator::Regulator> reg_;
  identity::CredentialIssuer council_;
  identity::CredentialIssuer ethics_;
  store::EncryptedStore store_;
  te::ChannelTap tap_;
  te::TeRuntime runtime_;
  crypto::KeyPair scanner_;
  std::map<std::string, te::TeInstance> tes_;
  std::vector<EhrParty> patients_, doctors_, analysts_;
  std::vector<std::vector<te::Delivery>> pending_;
  std::map<std::pair<std::size_t, std::string>, std::vector<Bytes>> consent_nonces_;
  std::vector<te::Record> doctor_outputs_, analyst_outputs_, truth_;
};

// Runs `script` against a fresh world. Throws Error(kConfig) for script
// errors.
ScenarioResult ehr_run(const EhrConfig& config, const Script& script,
                       std::uint64_t seed);

}  // namespace pbd::scenarios
