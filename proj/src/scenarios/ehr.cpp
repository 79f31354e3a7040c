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
#include "pbd/scenarios/ehr.hpp"

#include <algorithm>

#include "pbd/common/error.hpp"
#include "pbd/crypto/hash.hpp"
#include "pbd/scenarios/common.hpp"

namespace pbd::scenarios {
namespace {

using te::Record;
using te::TypedValue;

constexpr std::string_view kHospital = "HospitalA";
constexpr std::string_view kCouncilOrg = "MedicalCouncil";

const crypto::TypeId& scan_type() {
  static const crypto::TypeId t("DT2/MRIScan");
  return t;
}
const crypto::TypeId& record_type() {
  static const crypto::TypeId t("DT4/MedicalRecord");
  return t;
}

std::vector<TypedValue> mri_logic(const std::vector<TypedValue>& in,
                                  const Record&) {
  std::vector<TypedValue> out;
  for (const TypedValue& v : in) {
    const Record& s = v.record;
    Record r{{"name", s.at("name")},
             {"age", s.at("age")},
             {"diagnosis", s.at("scan") == "dark-spot" ? "lesion" : "clear"},
             {"findings", "size=" + s.at("size")},
             {"scan_id", s.at("scan_id")}};
    out.push_back({record_type(), v.subject, std::move(r)});
  }
  return out;
}

std::vector<TypedValue> terminal_logic(const std::vector<TypedValue>& in,
                                       const Record&) {
  std::vector<TypedValue> out;
  for (const TypedValue& v : in) {
    out.push_back({crypto::TypeId("DT5/MedicalSummary"), v.subject, v.record});
  }
  return out;
}

// With mode=rows the analyst tries to pass records through unchanged; DT4
// is not a declared output so the runtime aborts.
std::vector<TypedValue> analyst_logic(const std::vector<TypedValue>& in,
                                      const Record& params) {
  const bool rows = params.contains("mode") && params.at("mode") == "rows";
  std::vector<TypedValue> out;
  for (const TypedValue& v : in) {
    if (rows) {
      out.push_back({record_type(), v.subject, v.record});
      continue;
    }
    const int age = std::stoi(v.record.at("age"));
    out.push_back({crypto::TypeId("DT7/CohortStats"), std::nullopt,
                   {{"diagnosis", v.record.at("diagnosis")},
                    {"age_band", std::to_string(age / 10 * 10) + "s"}}});
  }
  return out;
}

te::TeLogic logic_for(const std::string& name) {
  if (name == "mri-analysis") return mri_logic;
  if (name == "doctor-terminal") return terminal_logic;
  if (name == "analyst-stats") return analyst_logic;
  throw Error(ErrorCode::kConfig, "no TE code named " + name);
}

}  // namespace

std::string ehr_default_rules() {
  return "# Hospital regulator R\n"
         "rule id=mri-ingest priority=10 te=name:mri-analysis "
         "data=DT2/MRIScan(x) requester=- "
         "requires=consent(x,scan-analysis,HospitalA) window=-\n"
         "rule id=doctor-view priority=10 te=name:doctor-terminal "
         "data=DT4/MedicalRecord(x) requester=doctor(y) "
         "requires=consent(x,consulted,y);approval(medical-council,y,licensed-doctor) "
         "window=-\n"
         "rule id=analyst-stats priority=5 te=name:analyst-stats "
         "data=DT4/MedicalRecord(x) requester=analyst(y) "
         "requires=consent(x,research,HospitalA);"
         "approval(ethics-board,y,approved-researcher) window=-\n";
}

std::map<std::string, std::string> ehr_default_manifests() {
  return {
      {"mri-analysis",
       "name = mri-analysis\nversion = 1\ninput_types = DT2/MRIScan(x)\n"
       "output_types = DT4/MedicalRecord(x)\nsink = false\n"
       "minimisation_policy = none\ncallback = true\n"},
      {"doctor-terminal",
       "name = doctor-terminal\nversion = 1\ninput_types = DT4/MedicalRecord(x)\n"
       "output_types = DT5/MedicalSummary(x)\nsink = true\n"
       "minimisation_policy = projection\n"
       "minimisation_policy.allowed_fields = diagnosis,findings\n"
       "minimisation_policy.aggregate_only = false\ncallback = true\n"},
      {"analyst-stats",
       "name = analyst-stats\nversion = 1\ninput_types = DT4/MedicalRecord(x)\n"
       "output_types = DT7/CohortStats\nsink = true\n"
       "minimisation_policy = projection\n"
       "minimisation_policy.allowed_fields = diagnosis,age_band\n"
       "minimisation_policy.aggregate_only = true\ncallback = true\n"},
  };
}

std::string ehr_default_script() {
  return R"(# Scans flow to records, a doctor views one, an analyst sees aggregates.
consent patient=0 verb=scan-analysis object=HospitalA scope=DT2/* expect=STORED
consent patient=1 verb=scan-analysis object=HospitalA scope=DT2/* expect=STORED
consent patient=2 verb=scan-analysis object=HospitalA scope=DT2/* expect=STORED
scan patient=0
scan patient=1
scan patient=2
analyse patient=0 expect=grant
analyse patient=1 expect=grant
analyse patient=2 expect=grant
view doctor=0 patient=0 expect=deny:PREDICATE_MISSING
consent patient=0 verb=consulted object=doctor:0 scope=DT4/* expect=STORED
approve doctor=0 via=blind expect=STORED
view doctor=0 patient=0 expect=grant
view doctor=1 patient=0 expect=deny:PREDICATE_MISSING
consent patient=0 verb=research object=HospitalA scope=DT4/* expect=STORED
consent patient=1 verb=research object=HospitalA scope=DT4/* expect=STORED
stats analyst=0 expect=deny:PREDICATE_MISSING
consent patient=2 verb=research object=HospitalA scope=DT4/* expect=STORED
approve analyst=0 expect=STORED
stats analyst=0 expect=grant
stats analyst=0 mode=rows expect=violation
revoke patient=0 verb=consulted expect=STORED
view doctor=0 patient=0 expect=deny:PREDICATE_MISSING
scan patient=1
tamper patient=1 expect=deny:TE_UNKNOWN
swap patient=1 as=2 expect=deny:TYPE_UNAUTHENTICATED
advance seconds=90000
analyse patient=1 expect=deny:EXPIRED_CONSENT
)";
}

EhrConfig EhrConfig::from_kv(const KvDocument& doc) {
  EhrConfig c;
  for (const KvEntry& e : doc.entries()) {
    if (e.key == "scenario" || e.key == "script") continue;
    if (e.key == "patients") {
      c.patients = static_cast<std::size_t>(parse_positive(e));
    } else if (e.key == "doctors") {
      c.doctors = static_cast<std::size_t>(parse_positive(e));
    } else if (e.key == "analysts") {
      c.analysts = static_cast<std::size_t>(parse_positive(e));
    } else if (e.key == "consent_ttl") {
      c.consent_ttl = parse_positive(e);
    } else if (e.key == "rsa_bits") {
      c.rsa_bits = static_cast<int>(parse_positive(e));
    } else {
      unknown_key(e);
    }
  }
  return c;
}

EhrWorld::EhrWorld(const EhrConfig& config, std::uint64_t seed)
    : config_(config),
      rng_(seed),
      authority_("identity-authority", rng_.fork("authority")),
      platform_("hospital-platform", rng_),
      reg_(std::make_unique<regulator::Regulator>("R", rng_.fork("regulator"),
                                                  clock_, authority_)),
      council_("medical-council", rng_.fork("council"), config.rsa_bits),
      ethics_("ethics-board", rng_.fork("ethics"), config.rsa_bits),
      store_(rng_.fork("store-index").digest(), [&] {
        crypto::AeadKey k;
        Rng r = rng_.fork("store-key");
        r.fill(k);
        return k;
      }()),
      runtime_(platform_, rng_.fork("runtime"), &tap_),
      scanner_(crypto::generate_signing_keypair(rng_)) {
  reg_->trust_platform(platform_.id(), platform_.public_key());
  reg_->load_rules(regulator::RuleSet::parse(config_.rules));
  reg_->trust_approver("medical-council", "licensed-doctor",
                       council_.public_key("licensed-doctor"));
  reg_->trust_approver("ethics-board", "approved-researcher",
                       ethics_.public_key("approved-researcher"));
  authority_.trust_regulator(reg_->signing_public_key());

  for (const auto& [name, text] : config_.manifests) {
    te::TeInstance t;
    t.manifest = te::Manifest::parse(text);
    t.code = code_image(t.manifest);
    t.logic = logic_for(t.manifest.name);
    reg_->approve_te(t.manifest, t.code,
                     "hospital " + t.manifest.name + " reviewed");
    tes_.emplace(t.manifest.name, std::move(t));
  }
  for (std::size_t i = 0; i < config_.patients; ++i) {
    patients_.push_back(enroll_party(authority_, "patient-" + std::to_string(i),
                                   std::string(kHospital)));
  }
  for (std::size_t i = 0; i < config_.doctors; ++i) {
    doctors_.push_back(enroll_party(authority_, "doctor-" + std::to_string(i),
                                   std::string(kHospital)));
  }
  for (std::size_t i = 0; i < config_.analysts; ++i) {
    analysts_.push_back(enroll_party(authority_, "analyst-" + std::to_string(i),
                                   std::string(kHospital)));
  }
  pending_.resize(patients_.size());
}

const te::TeInstance& EhrWorld::te(const std::string& name) const {
  auto it = tes_.find(name);
  if (it == tes_.end()) throw Error(ErrorCode::kConfig, "no manifest for " + name);
  return it->second;
}

std::string EhrWorld::resolve_object(const std::string& object) const {
  const auto colon = object.find(':');
  if (colon == std::string::npos) return object;
  const std::string kind = object.substr(0, colon);
  const std::size_t i = std::stoul(object.substr(colon + 1));
  const auto& group = kind == "doctor" ? doctors_ : analysts_;
  if ((kind != "doctor" && kind != "analyst") || i >= group.size()) {
    throw Error(ErrorCode::kConfig, "unknown party " + object);
  }
  return regulator::vid_object(group[i].vid.value);
}

regulator::ConsentOutcome EhrWorld::consent(std::size_t patient,
                                            const std::string& verb,
                                            const std::string& object,
                                            const std::string& scope,
                                            std::optional<Timestamp> ttl) {
  const EhrParty& p = patients_.at(patient);
  auto pred = regulator::sign_consent(
      p.cert, p.key, verb, resolve_object(object),
      {crypto::TypePattern::parse(scope)},
      clock_.now() + ttl.value_or(config_.consent_ttl), rng_);
  const auto outcome = reg_->record_consent(pred);
  if (outcome == regulator::ConsentOutcome::kStored) {
    consent_nonces_[{patient, verb}].push_back(pred.nonce);
  }
  return outcome;
}

regulator::ConsentOutcome EhrWorld::revoke(std::size_t patient,
                                           const std::string& verb) {
  const EhrParty& p = patients_.at(patient);
  auto& nonces = consent_nonces_[{patient, verb}];
  const Bytes nonce = nonces.empty() ? Bytes{} : nonces.back();
  const auto outcome = reg_->revoke_consent(
      regulator::sign_revocation(p.cert, p.key, nonce, clock_.now()));
  if (outcome == regulator::ConsentOutcome::kStored) nonces.pop_back();
  return outcome;
}

regulator::ApprovalOutcome EhrWorld::approve_doctor(std::size_t doctor,
                                                    bool blind) {
  const EhrParty& d = doctors_.at(doctor);
  if (!blind) {
    council_.record_evidence("licensed-doctor", d.vid.value);
    return reg_->record_approval(
        {council_.issue_plain(d.vid.value, "licensed-doctor"),
         regulator::ApprovalVia::kDirect});
  }
  // The council knows the doctor only under its own vid.
  const auto at_council = identity::derive_vid(d.master, kCouncilOrg);
  council_.record_evidence("licensed-doctor", at_council.value);
  const auto& pk = council_.public_key("licensed-doctor");
  const auto state = identity::begin_blind_issuance(
      d.vid.value, "licensed-doctor", "medical-council", pk, rng_);
  const Bytes bsig = council_.issue_blinded(at_council.value, "licensed-doctor",
                                            state.blinded.value);
  return reg_->record_approval(
      {identity::finish_blind_issuance(state, bsig, pk),
       regulator::ApprovalVia::kBlindCredential});
}

regulator::ApprovalOutcome EhrWorld::approve_analyst(std::size_t analyst) {
  const EhrParty& a = analysts_.at(analyst);
  ethics_.record_evidence("approved-researcher", a.vid.value);
  return reg_->record_approval(
      {ethics_.issue_plain(a.vid.value, "approved-researcher"),
       regulator::ApprovalVia::kDirect});
}

void EhrWorld::scan(std::size_t patient) {
  const EhrParty& p = patients_.at(patient);
  const Record r{
      {"name", "Patient-" + std::to_string(patient) + "-" + hex(rng_.bytes(4))},
      {"age", std::to_string(25 + rng_() % 50)},
      {"scan", rng_() % 2 ? "dark-spot" : "clear-field"},
      {"size", std::to_string(2 + rng_() % 9) + "mm"},
      {"scan_id", hex(rng_.bytes(6))}};
  truth_.push_back(r);
  crypto::Envelope env =
      crypto::seal(scan_type(), p.vid.value, te::encode_record(r),
                   reg_->public_key(), scanner_, rng_);
  tap_.record("scanner", env.serialize());
  pending_.at(patient).push_back({std::move(env), scanner_.public_key});
}

std::string EhrWorld::run(const te::TeInstance& t,
                          const std::vector<te::Delivery>& inputs,
                          const te::RunOptions& options, te::RunResult* result) {
  if (inputs.empty()) return "empty";
  try {
    *result = runtime_.run(t, inputs, *reg_, options);
    return "grant";
  } catch (const te::AccessDenied& e) {
    return "deny:" + std::string(regulator::to_string(e.reason()));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kTypeViolation) return "violation";
    throw;
  }
}

std::string EhrWorld::analyse(std::size_t patient) {
  te::RunResult r;
  const std::string outcome = run(te("mri-analysis"), pending_.at(patient), {}, &r);
  if (outcome != "grant") return outcome;
  pending_[patient].clear();
  for (const te::Delivery& d : r.outputs) {
    store_.put(d.envelope, d.producer_public_key);
    tap_.record("store-put", d.envelope.serialize());
  }
  return outcome;
}

std::string EhrWorld::analyse_tampered(std::size_t patient) {
  te::TeInstance evil = te("mri-analysis");
  evil.code.at(evil.code.size() / 2) ^= 0x01;
  te::RunResult r;
  return run(evil, pending_.at(patient), {}, &r);
}

std::string EhrWorld::analyse_swapped(std::size_t patient, std::size_t claimed) {
  std::vector<te::Delivery> inputs = pending_.at(patient);
  for (auto& d : inputs) d.envelope.subject = patients_.at(claimed).vid.value;
  te::RunResult r;
  return run(te("mri-analysis"), inputs, {}, &r);
}

std::string EhrWorld::view(std::size_t doctor, std::size_t patient) {
  const te::TeInstance& t = te("doctor-terminal");
  std::vector<te::Delivery> inputs;
  for (auto& s : store_.get(patients_.at(patient).vid.value, record_type(),
                            t.measurement())) {
    inputs.push_back({std::move(s.envelope), std::move(s.producer_public_key)});
  }
  const EhrParty& d = doctors_.at(doctor);
  te::RunOptions opts;
  opts.requester = te::Requester{"doctor", d.cert, d.key, std::nullopt};
  te::RunResult r;
  const std::string outcome = run(t, inputs, opts, &r);
  for (auto& row : r.sink_rows) doctor_outputs_.push_back(std::move(row));
  return outcome;
}

std::string EhrWorld::stats(std::size_t analyst, bool rows) {
  const te::TeInstance& t = te("analyst-stats");
  std::vector<te::Delivery> inputs;
  for (const EhrParty& p : patients_) {
    for (auto& s : store_.get(p.vid.value, record_type(), t.measurement())) {
      inputs.push_back({std::move(s.envelope), std::move(s.producer_public_key)});
    }
  }
  const EhrParty& a = analysts_.at(analyst);
  te::RunOptions opts;
  opts.requester = te::Requester{"analyst", a.cert, a.key, std::nullopt};
  if (rows) opts.params["mode"] = "rows";
  te::RunResult r;
  const std::string outcome = run(t, inputs, opts, &r);
  for (auto& row : r.sink_rows) analyst_outputs_.push_back(std::move(row));
  return outcome;
}

ScenarioResult ehr_run(const EhrConfig& config, const Script& script,
                       std::uint64_t seed) {
  EhrWorld w(config, seed);
  ScenarioResult out;
  out.scenario = "ehr";
  auto index = [](const ScriptStep& s, const std::string& key) {
    return static_cast<std::size_t>(s.int_arg(key));
  };
  for (const ScriptStep& s : script.steps) {
    std::string outcome;
    try {
      if (s.action == "consent") {
        const auto ttl = s.args.contains("ttl")
                             ? std::optional<Timestamp>(s.int_arg("ttl"))
                             : std::nullopt;
        outcome = std::string(regulator::to_string(
            w.consent(index(s, "patient"), s.arg("verb"), s.arg("object"),
                      s.arg("scope"), ttl)));
      } else if (s.action == "revoke") {
        outcome = std::string(regulator::to_string(
            w.revoke(index(s, "patient"), s.arg("verb"))));
      } else if (s.action == "approve") {
        const auto o = s.args.contains("doctor")
                           ? w.approve_doctor(index(s, "doctor"),
                                              s.arg_or("via", "direct") == "blind")
                           : w.approve_analyst(index(s, "analyst"));
        outcome = std::string(regulator::to_string(o));
      } else if (s.action == "scan") {
        w.scan(index(s, "patient"));
        outcome = "sealed";
      } else if (s.action == "analyse") {
        outcome = w.analyse(index(s, "patient"));
      } else if (s.action == "view") {
        outcome = w.view(index(s, "doctor"), index(s, "patient"));
      } else if (s.action == "stats") {
        outcome = w.stats(index(s, "analyst"), s.arg_or("mode", "") == "rows");
      } else if (s.action == "tamper") {
        outcome = w.analyse_tampered(index(s, "patient"));
      } else if (s.action == "swap") {
        outcome = w.analyse_swapped(index(s, "patient"), index(s, "as"));
      } else if (s.action == "advance") {
        w.advance(s.int_arg("seconds"));
        outcome = "advanced";
      } else {
        unknown_action(s);
      }
    } catch (const std::out_of_range&) {
      throw Error(ErrorCode::kConfig,
                  "line " + std::to_string(s.line) + ": party index out of range");
    }
    out.steps.push_back({s.line, s.action, outcome, s.expect});
  }

  const regulator::Regulator& reg = w.regulator();
  tally_decisions(reg, out.decisions);
  out.audit_logs[reg.name()] = reg.audit().serialize();
  out.transcript = transcript_lines(w.tap(), {&reg});

  const auto& allowed =
      w.te("doctor-terminal").manifest.minimisation->allowed_fields;
  bool minimised = true;
  for (const te::Record& row : w.doctor_outputs()) {
    for (const auto& [k, v] : row) {
      minimised &= std::find(allowed.begin(), allowed.end(), k) != allowed.end();
    }
  }
  out.invariants.push_back({"doctor-output-minimised", minimised,
                            std::to_string(w.doctor_outputs().size()) + " rows"});
  bool aggregate = true;
  for (const te::Record& row : w.analyst_outputs()) {
    aggregate &= !row.contains("name") && !row.contains("scan_id");
  }
  out.invariants.push_back({"analyst-output-aggregate", aggregate,
                            std::to_string(w.analyst_outputs().size()) + " rows"});
  add_common_invariants(out, {&reg});

  std::vector<std::string> secrets;
  for (const te::Record& r : w.ground_truth()) {
    secrets.push_back(r.at("name"));
    secrets.push_back(r.at("scan_id"));
  }
  std::size_t leaks = 0;
  for (const auto& [channel, bytes] : w.tap().traffic()) {
    for (const auto& s : secrets) leaks += contains(bytes, as_bytes(s));
  }
  out.invariants.push_back({"no-plaintext-on-channels", leaks == 0,
                            std::to_string(leaks) + " hits"});
  std::size_t store_leaks = 0;
  for (const auto& rec : w.store().records()) {
    for (const auto& s : secrets) store_leaks += contains(rec.sealed, as_bytes(s));
    for (const auto& p : w.patients()) store_leaks += contains(rec.sealed, p.vid.value);
  }
  out.invariants.push_back({"store-holds-no-plaintext", store_leaks == 0,
                            std::to_string(store_leaks) + " hits"});

  for (std::size_t i = 0; i < w.doctor_outputs().size(); ++i) {
    out.output_digests["doctor-row-" + std::to_string(i)] =
        hex(crypto::hash(te::encode_record(w.doctor_outputs()[i])));
  }
  for (std::size_t i = 0; i < w.analyst_outputs().size(); ++i) {
    out.output_digests["analyst-row-" + std::to_string(i)] =
        hex(crypto::hash(te::encode_record(w.analyst_outputs()[i])));
  }
  return out;
}

}  // namespace pbd::scenarios
