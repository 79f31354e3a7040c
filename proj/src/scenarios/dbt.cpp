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
#include "pbd/scenarios/dbt.hpp"

#include <algorithm>
#include <numeric>

#include "pbd/common/error.hpp"
#include "pbd/crypto/hash.hpp"
#include "pbd/scenarios/common.hpp"

namespace pbd::scenarios {
namespace {

using te::Record;
using te::TypedValue;

constexpr std::string_view kPayMagic = "PAY1";
constexpr std::string_view kPaySignedMagic = "PAY0";
constexpr std::string_view kDbtOrg = "DBT";
constexpr Timestamp kSchemeYear = 365 * 24 * 3600;
const char* const kRegulators[] = {"R1", "R2", "R3", "R4"};

const crypto::TypeId kOrderType("DBT/PaymentOrder");
const crypto::TypeId kTransferType("DBT/Transfer");
const crypto::TypeId kMappingType("DBT/Mapping");

crypto::TypeId credit_type(const std::string& bank) {
  return crypto::TypeId("Credit/" + bank);
}

std::string scheme_window() {
  const Timestamp start = ManualClock().now();
  return std::to_string(start) + ".." + std::to_string(start + kSchemeYear);
}

Bytes encode_entries(FrameWriter w, const std::vector<PaymentEntry>& entries) {
  w.field_u64(entries.size());
  for (const PaymentEntry& e : entries) {
    w.field(e.dbt_vid).field(e.scheme).field_i64(e.amount);
  }
  return w.finish();
}

std::vector<TypedValue> pfms_logic(const std::vector<TypedValue>& in,
                                   const Record&) {
  std::vector<TypedValue> out;
  for (const TypedValue& v : in) {
    out.push_back({kTransferType, v.subject, v.record});
  }
  return out;
}

// Holds the only plaintext (dbt_vid, bank_vid) pair. `seen` counts how often
// both were in this context at once.
te::TeLogic mapper_logic(std::shared_ptr<std::size_t> seen) {
  return [seen](const std::vector<TypedValue>& in, const Record&) {
    std::vector<TypedValue> out;
    const TypedValue* transfer = nullptr;
    const TypedValue* mapping = nullptr;
    for (const TypedValue& v : in) {
      if (v.type == kTransferType) transfer = &v;
      if (v.type == kMappingType) mapping = &v;
    }
    if (!transfer || !mapping || transfer->subject != mapping->subject) {
      return out;
    }
    const Digest bank_vid = digest_from_hex(mapping->record.at("bank_vid"));
    ++*seen;
    out.push_back({credit_type(mapping->record.at("bank")), bank_vid,
                   {{"account", hex(bank_vid)},
                    {"amount", transfer->record.at("amount")},
                    {"scheme", transfer->record.at("scheme")}}});
    return out;
  };
}

std::vector<TypedValue> bank_logic(const std::vector<TypedValue>& in,
                                   const Record&) {
  std::vector<TypedValue> out;
  for (const TypedValue& v : in) {
    out.push_back({crypto::TypeId("Bank/Posting"), v.subject, v.record});
  }
  return out;
}

std::string manifest_text(const std::string& name, const std::string& inputs,
                          const std::string& outputs, bool sink,
                          const std::string& allowed = "") {
  std::string m = "name = " + name + "\nversion = 1\ninput_types = " + inputs +
                  "\noutput_types = " + outputs +
                  "\nsink = " + (sink ? "true" : "false") + "\n";
  if (sink) {
    m += "minimisation_policy = projection\nminimisation_policy.allowed_fields = " +
         allowed + "\nminimisation_policy.aggregate_only = false\n";
  } else {
    m += "minimisation_policy = none\n";
  }
  return m + "callback = true\n";
}

}  // namespace

Bytes PaymentFile::signed_portion() const {
  return encode_entries(FrameWriter(kPaySignedMagic), entries);
}

Bytes PaymentFile::serialize() const {
  FrameWriter w(kPayMagic);
  w.field(signed_portion()).field(signature);
  return w.finish();
}

PaymentFile PaymentFile::parse(ByteView data) {
  FrameReader outer(data, kPayMagic);
  const Bytes body = outer.field_bytes();
  PaymentFile f;
  f.signature = outer.field_bytes();
  outer.expect_end();
  FrameReader in(body, kPaySignedMagic);
  const std::uint64_t n = in.field_u64();
  if (n > body.size()) throw Error(ErrorCode::kMalformed, "entry count");
  for (std::uint64_t i = 0; i < n; ++i) {
    PaymentEntry e;
    e.dbt_vid = in.field_digest();
    e.scheme = in.field_string();
    e.amount = in.field_i64();
    f.entries.push_back(std::move(e));
  }
  in.expect_end();
  return f;
}

PaymentFile sign_payment_file(std::vector<PaymentEntry> entries,
                              const crypto::KeyPair& ministry) {
  PaymentFile f{std::move(entries), {}};
  f.signature = crypto::sign(ministry.private_key, f.signed_portion());
  return f;
}

void verify_payment_file(const PaymentFile& file, ByteView ministry_public_key) {
  if (!crypto::verify(ministry_public_key, file.signed_portion(), file.signature)) {
    throw Error(ErrorCode::kBadPaymentFile, "ministry signature does not verify");
  }
  for (const PaymentEntry& e : file.entries) {
    if (e.amount <= 0) {
      throw Error(ErrorCode::kBadPaymentFile, "non-positive amount");
    }
  }
}

std::map<std::string, std::string> dbt_default_rules(
    const std::vector<std::string>& banks) {
  const std::string w = " window=" + scheme_window() + "\n";
  std::map<std::string, std::string> r;
  r["R1"] =
      "# R1: ministry regulator, gates PFMS\n"
      "rule id=pfms-order priority=10 te=name:pfms data=DBT/PaymentOrder(x) "
      "requester=- requires=approval(ministry,x,eligible)" + w;
  r["R2"] =
      "# R2: transfer hand-off to NPCI\n"
      "rule id=npci-transfer priority=10 te=name:npci-mapper "
      "data=DBT/Transfer(x) requester=- requires=approval(ministry,x,eligible)" + w;
  r["R3"] =
      "# R3: financial regulator, controls the vid mapping\n"
      "rule id=npci-mapping priority=10 te=name:npci-mapper data=DBT/Mapping(x) "
      "requester=- requires=consent(x,map-accounts,NPCI)" + w;
  std::string r4 = "# R4: banking regulator\n";
  for (const std::string& b : banks) {
    r4 += "rule id=credit-" + b + " priority=10 te=name:bank-credit data=Credit/" +
          b + "(x) requester=bank-clerk(y) requires=approval(kyc-registry,x,kyc-verified);"
          "approval(banking-regulator,y,clerk-" + b + ")" + w;
  }
  r["R4"] = r4;
  return r;
}

std::string dbt_default_script() {
  return R"(# Onboard, pay, then try a tampered payment file.
onboard skip=7,42 expect=onboarded:100
pay expect=credited:98;missing:2
pay tamper=signature expect=rejected
pay tamper=amount expect=rejected
)";
}

DbtConfig DbtConfig::from_kv(const KvDocument& doc) {
  DbtConfig c;
  auto list = [](const KvEntry& e) {
    std::vector<std::string> out;
    for (const auto& s : split(e.value, ',')) {
      if (!trim(s).empty()) out.emplace_back(trim(s));
    }
    if (out.empty()) {
      throw Error(ErrorCode::kConfig,
                  "line " + std::to_string(e.line) + ": empty list for " + e.key);
    }
    return out;
  };
  for (const KvEntry& e : doc.entries()) {
    if (e.key == "scenario" || e.key == "script") continue;
    if (e.key == "beneficiaries") {
      c.beneficiaries = static_cast<std::size_t>(parse_positive(e));
    } else if (e.key == "banks") {
      c.banks = list(e);
    } else if (e.key == "schemes") {
      c.schemes = list(e);
    } else if (e.key == "max_amount") {
      c.max_amount = parse_positive(e);
    } else if (e.key == "rsa_bits") {
      c.rsa_bits = static_cast<int>(parse_positive(e));
    } else if (e.key == "work_dir") {
      c.work_dir = e.value;
    } else {
      unknown_key(e);
    }
  }
  return c;
}

std::size_t DbtRunResult::credited() const {
  return static_cast<std::size_t>(std::count_if(
      outcomes.begin(), outcomes.end(), [](const auto& o) { return o.credited; }));
}

struct DbtWorld::Runtimes {
  te::Platform ministry_platform;
  te::Platform npci_platform;
  te::Platform bank_platform;
  te::TeRuntime pfms;
  te::TeRuntime npci;
  te::TeRuntime bank;

  Runtimes(Rng& rng, te::ChannelTap* tap)
      : ministry_platform("pfms-platform", rng),
        npci_platform("npci-platform", rng),
        bank_platform("bank-platform", rng),
        pfms(ministry_platform, rng.fork("pfms-runtime"), tap),
        npci(npci_platform, rng.fork("npci-runtime"), tap),
        bank(bank_platform, rng.fork("bank-runtime"), tap) {}
};

DbtWorld::DbtWorld(const DbtConfig& config, std::uint64_t seed)
    : config_(config),
      rng_(seed),
      authority_("identity-authority", rng_.fork("authority")),
      ministry_issuer_("ministry", rng_.fork("ministry-issuer"), config.rsa_bits),
      kyc_("kyc-registry", rng_.fork("kyc"), config.rsa_bits),
      banking_("banking-regulator", rng_.fork("banking"), config.rsa_bits),
      ministry_(crypto::generate_signing_keypair(rng_)),
      cooccurrences_(std::make_shared<std::size_t>(0)) {
  rt_ = std::make_unique<Runtimes>(rng_, &tap_);
  if (config_.rules.empty()) config_.rules = dbt_default_rules(config_.banks);
  for (const char* name : kRegulators) {
    auto r = std::make_unique<regulator::Regulator>(name, rng_.fork(name), clock_,
                                                    authority_);
    auto rules = config_.rules.find(name);
    if (rules == config_.rules.end()) {
      throw Error(ErrorCode::kConfig, std::string("no rules for ") + name);
    }
    r->load_rules(regulator::RuleSet::parse(rules->second));
    regs_.emplace(name, std::move(r));
  }
  auto& r1 = *regs_["R1"];
  auto& r2 = *regs_["R2"];
  auto& r3 = *regs_["R3"];
  auto& r4 = *regs_["R4"];
  r1.trust_platform(rt_->ministry_platform.id(), rt_->ministry_platform.public_key());
  r2.trust_platform(rt_->npci_platform.id(), rt_->npci_platform.public_key());
  r3.trust_platform(rt_->npci_platform.id(), rt_->npci_platform.public_key());
  r4.trust_platform(rt_->bank_platform.id(), rt_->bank_platform.public_key());
  const auto& eligible = ministry_issuer_.public_key("eligible");
  r1.trust_approver("ministry", "eligible", eligible);
  r2.trust_approver("ministry", "eligible", eligible);
  r4.trust_approver("kyc-registry", "kyc-verified", kyc_.public_key("kyc-verified"));

  std::string credit_outputs;
  for (const std::string& b : config_.banks) {
    if (!credit_outputs.empty()) credit_outputs += ", ";
    credit_outputs += "Credit/" + b + "(x)";
  }
  auto add_te = [&](const std::string& text, te::TeLogic logic,
                    std::vector<regulator::Regulator*> approvers) {
    te::TeInstance t;
    t.manifest = te::Manifest::parse(text);
    t.code = code_image(t.manifest);
    t.logic = std::move(logic);
    for (auto* r : approvers) {
      r->approve_te(t.manifest, t.code, t.manifest.name + " reviewed for DBT");
    }
    tes_.emplace(t.manifest.name, std::move(t));
  };
  add_te(manifest_text("pfms", "DBT/PaymentOrder(x)", "DBT/Transfer(x)", false),
         pfms_logic, {&r1});
  add_te(manifest_text("npci-mapper", "DBT/Transfer(x), DBT/Mapping(x)",
                       credit_outputs, false),
         mapper_logic(cooccurrences_), {&r2, &r3});
  add_te(manifest_text("bank-credit", "Credit/*(x)", "Bank/Posting(x)", true,
                       "account,amount,scheme"),
         bank_logic, {&r4});

  for (const std::string& b : config_.banks) {
    const std::string attr = "clerk-" + b;
    Party clerk = enroll_party(authority_, "clerk@" + b, b);
    r4.trust_approver("banking-regulator", attr, banking_.public_key(attr));
    banking_.record_evidence(attr, clerk.vid.value);
    r4.record_approval({banking_.issue_plain(clerk.vid.value, attr),
                        regulator::ApprovalVia::kDirect});
    clerks_.emplace(b, std::move(clerk));
  }

  Rng keys = rng_.fork("npci-store");
  crypto::AeadKey storage;
  keys.fill(storage);
  std::optional<std::filesystem::path> path;
  if (config_.work_dir) {
    std::filesystem::create_directories(*config_.work_dir);
    path = *config_.work_dir / "npci-mappings.sto";
    std::filesystem::remove(*path);
  }
  npci_store_ = std::make_unique<store::EncryptedStore>(keys.digest(), storage, path);
}

DbtWorld::~DbtWorld() = default;

regulator::Regulator& DbtWorld::regulator(const std::string& name) {
  auto it = regs_.find(name);
  if (it == regs_.end()) throw Error(ErrorCode::kInvalidArgument, "no " + name);
  return *it->second;
}

std::vector<const regulator::Regulator*> DbtWorld::regulators() const {
  std::vector<const regulator::Regulator*> out;
  for (const char* name : kRegulators) out.push_back(regs_.at(name).get());
  return out;
}

void DbtWorld::onboard(const std::set<std::size_t>& skip_mapping) {
  auto& r1 = *regs_["R1"];
  auto& r2 = *regs_["R2"];
  auto& r3 = *regs_["R3"];
  auto& r4 = *regs_["R4"];
  for (std::size_t i = people_.size(); i < config_.beneficiaries; ++i) {
    Beneficiary b;
    b.master = authority_.enroll("citizen-" + std::to_string(i));
    b.dbt_vid = identity::derive_vid(b.master, kDbtOrg);
    b.dbt_key = identity::derive_vid_signing_key(b.master, kDbtOrg);
    b.dbt_cert = authority_.certify_vid_key(b.dbt_vid.value, b.master.master_id,
                                            kDbtOrg, 0, b.dbt_key.public_key);
    b.bank = config_.banks[i % config_.banks.size()];
    b.bank_vid = identity::derive_vid(b.master, b.bank);

    ministry_issuer_.record_evidence("eligible", b.dbt_vid.value);
    const auto eligible = ministry_issuer_.issue_plain(b.dbt_vid.value, "eligible");
    r1.record_approval({eligible, regulator::ApprovalVia::kDirect});
    r2.record_approval({eligible, regulator::ApprovalVia::kDirect});
    kyc_.record_evidence("kyc-verified", b.bank_vid.value);
    r4.record_approval({kyc_.issue_plain(b.bank_vid.value, "kyc-verified"),
                        regulator::ApprovalVia::kDirect});
    r3.record_consent(regulator::sign_consent(
        b.dbt_cert, b.dbt_key, "map-accounts", "NPCI",
        {crypto::TypePattern::parse("DBT/Mapping")}, clock_.now() + kSchemeYear,
        rng_));

    // The beneficiary seals the mapping under R3; NPCI stores it opaque.
    if (!skip_mapping.contains(i)) {
      const te::Delivery d =
          seal_to("R3", kMappingType, b.dbt_vid.value,
                  {{"bank_vid", hex(b.bank_vid.value)}, {"bank", b.bank}},
                  b.dbt_key);
      npci_store_->put(d.envelope, d.producer_public_key);
      b.mapped = true;
    }
    people_.push_back(std::move(b));
  }
}

te::Delivery DbtWorld::seal_to(const std::string& reg, const crypto::TypeId& type,
                               const Digest& subject, const te::Record& record,
                               const crypto::KeyPair& producer) {
  return {crypto::seal(type, subject, te::encode_record(record),
                       regs_.at(reg)->public_key(), producer, rng_),
          producer.public_key};
}

PaymentFile DbtWorld::make_payment_file() {
  std::vector<PaymentEntry> entries;
  for (const Beneficiary& b : people_) {
    entries.push_back(
        {b.dbt_vid.value, config_.schemes[rng_() % config_.schemes.size()],
         static_cast<std::int64_t>(1 + rng_() % config_.max_amount)});
  }
  return sign_payment_file(std::move(entries), ministry_);
}

DbtRunResult DbtWorld::pay(const PaymentFile& file) {
  DbtRunResult result;
  last_file_ = file;
  try {
    verify_payment_file(file, ministry_.public_key);
  } catch (const Error& e) {
    result.file_rejected = true;
    result.rejection = e.detail();
    return result;
  }
  const std::size_t first_posting = postings_.size();
  auto& r1 = *regs_["R1"];
  auto& r2 = *regs_["R2"];
  auto& r3 = *regs_["R3"];
  auto& r4 = *regs_["R4"];
  te::RoutingEndpoint npci_gate(r2);
  npci_gate.add("DBT/Transfer", r2);
  npci_gate.add("DBT/Mapping", r3);

  auto denied = [](const te::AccessDenied& e, const char* stage) {
    return "deny:" + std::string(regulator::to_string(e.reason())) + "@" + stage;
  };

  for (std::size_t i = 0; i < file.entries.size(); ++i) {
    const PaymentEntry& entry = file.entries[i];
    TransferOutcome outcome{i, false, ""};
    const std::string order = "order-" + std::to_string(i);

    const te::Delivery order_env = seal_to(
        "R1", kOrderType, entry.dbt_vid,
        {{"scheme", entry.scheme}, {"amount", std::to_string(entry.amount)}},
        ministry_);
    te::RunResult pfms;
    try {
      te::RunOptions o;
      o.output_sealing_key = r2.public_key();
      pfms = rt_->pfms.run(tes_.at("pfms"), {order_env}, r1, o);
    } catch (const te::AccessDenied& e) {
      outcome.error = denied(e, "pfms");
      result.outcomes.push_back(outcome);
      continue;
    }
    postings_.push_back({"treasury", -entry.amount, order});

    auto reverse = [&](std::string why) {
      postings_.push_back({"treasury", entry.amount, "reversal " + order});
      outcome.error = std::move(why);
    };

    const te::Delivery& transfer = pfms.outputs.at(0);
    const te::TeInstance& mapper = tes_.at("npci-mapper");
    const auto mappings = npci_store_->get(transfer.envelope.subject, kMappingType,
                                           mapper.measurement());
    if (mappings.empty()) {
      reverse("MISSING_MAPPING");
      result.outcomes.push_back(outcome);
      continue;
    }
    const auto& m = mappings.back();
    te::RunResult mapped;
    try {
      te::RunOptions o;
      o.output_sealing_key = r4.public_key();
      mapped = rt_->npci.run(mapper, {transfer, {m.envelope, m.producer_public_key}},
                             npci_gate, o);
    } catch (const te::AccessDenied& e) {
      reverse(denied(e, "npci"));
      result.outcomes.push_back(outcome);
      continue;
    }
    if (mapped.outputs.size() != 1) {
      reverse("MAPPING_MISMATCH");
      result.outcomes.push_back(outcome);
      continue;
    }

    const te::Delivery& credit = mapped.outputs[0];
    const std::string bank = credit.envelope.type_id.name().substr(7);
    const Party& clerk = clerks_.at(bank);
    te::RunResult posted;
    try {
      te::RunOptions o;
      o.requester = te::Requester{"bank-clerk", clerk.cert, clerk.key, std::nullopt};
      posted = rt_->bank.run(tes_.at("bank-credit"), {credit}, r4, o);
    } catch (const te::AccessDenied& e) {
      reverse(denied(e, "bank"));
      result.outcomes.push_back(outcome);
      continue;
    }
    for (const te::Record& row : posted.sink_rows) {
      postings_.push_back({bank + ":" + row.at("account"),
                           parse_int(row.at("amount")), row.at("scheme")});
    }
    outcome.credited = true;
    result.outcomes.push_back(outcome);
  }
  for (std::size_t i = first_posting; i < postings_.size(); ++i) {
    const std::int64_t a = postings_[i].amount;
    (a < 0 ? result.total_debits : result.total_credits) += a < 0 ? -a : a;
  }
  return result;
}

std::vector<std::pair<std::string, Bytes>> DbtWorld::artifacts() const {
  std::vector<std::pair<std::string, Bytes>> out;
  for (const auto& [name, r] : regs_) {
    out.emplace_back("audit:" + name, to_bytes(r->audit().serialize()));
    std::string decisions;
    for (const auto& d : r->decisions()) {
      decisions += d.decision_id + " " + d.rule_id + " " + d.type.canonical();
      for (const auto& [k, v] : d.bindings) decisions += " " + k + "=" + v;
      for (const auto& p : d.instantiated) decisions += " " + p.canonical();
      decisions += "\n";
    }
    out.emplace_back("decisions:" + name, to_bytes(decisions));
  }
  std::size_t n = 0;
  for (const auto& [channel, bytes] : tap_.traffic()) {
    out.emplace_back("tap:" + channel + ":" + std::to_string(n++), bytes);
  }
  for (const te::TeRuntime* rt : {&rt_->pfms, &rt_->npci, &rt_->bank}) {
    std::string events;
    for (const auto& e : rt->events()) {
      events += std::string(te::to_string(e.kind)) + " " + e.te + " " + e.type + "\n";
    }
    out.emplace_back("runtime-events", to_bytes(events));
  }
  if (config_.work_dir) {
    for (const auto& f : std::filesystem::directory_iterator(*config_.work_dir)) {
      out.emplace_back("file:" + f.path().filename().string(),
                       to_bytes(read_file(f.path().string())));
    }
  } else {
    for (const auto& r : npci_store_->records()) {
      out.emplace_back("store:npci", r.sealed);
    }
  }
  std::string ledger;
  for (const Posting& p : postings_) {
    ledger += p.account + " " + std::to_string(p.amount) + " " + p.memo + "\n";
  }
  out.emplace_back("ledger", to_bytes(ledger));
  if (last_file_) out.emplace_back("payment-file", last_file_->serialize());
  std::string derivations;
  for (const auto& c : authority_.derivation_log()) {
    derivations += hex(c.master_id) + " " + c.org_tag + " " +
                   std::to_string(c.counter) + "\n";
  }
  out.emplace_back("authority-log", to_bytes(derivations));
  return out;
}

ScenarioResult dbt_run(const DbtConfig& config, const Script& script,
                       std::uint64_t seed) {
  DbtWorld w(config, seed);
  ScenarioResult out;
  out.scenario = "dbt";
  std::int64_t debits = 0, credits = 0;
  for (const ScriptStep& s : script.steps) {
    std::string outcome;
    if (s.action == "onboard") {
      std::set<std::size_t> skip;
      for (const auto& part : split(s.arg_or("skip", ""), ',')) {
        if (trim(part).empty()) continue;
        const std::int64_t v = parse_int(trim(part));
        if (v < 0 || static_cast<std::size_t>(v) >= config.beneficiaries) {
          throw Error(ErrorCode::kConfig, "line " + std::to_string(s.line) +
                                              ": skip index out of range");
        }
        skip.insert(static_cast<std::size_t>(v));
      }
      w.onboard(skip);
      outcome = "onboarded:" + std::to_string(w.beneficiaries().size());
    } else if (s.action == "pay") {
      PaymentFile file = w.make_payment_file();
      const std::string tamper = s.arg_or("tamper", "none");
      if (tamper == "signature") {
        file.signature.at(0) ^= 0x01;
      } else if (tamper == "amount") {
        if (!file.entries.empty()) file.entries[0].amount += 1000;
      } else if (tamper != "none") {
        throw Error(ErrorCode::kConfig,
                    "line " + std::to_string(s.line) + ": unknown tamper " + tamper);
      }
      const DbtRunResult r = w.pay(file);
      debits += r.total_debits;
      credits += r.total_credits;
      if (r.file_rejected) {
        outcome = "rejected";
      } else {
        std::size_t missing = 0;
        for (const auto& o : r.outcomes) missing += o.error == "MISSING_MAPPING";
        outcome = "credited:" + std::to_string(r.credited()) +
                  ";missing:" + std::to_string(missing);
      }
    } else {
      unknown_action(s);
    }
    out.steps.push_back({s.line, s.action, outcome, s.expect});
  }

  const auto regs = w.regulators();
  for (const auto* r : regs) {
    tally_decisions(*r, out.decisions);
    out.audit_logs[r->name()] = r->audit().serialize();
  }
  out.transcript = transcript_lines(w.tap(), regs);
  out.invariants.push_back({"conservation", debits == credits,
                            std::to_string(debits) + " debited, " +
                                std::to_string(credits) + " credited"});

  // Ground-truth join: no artifact outside the mapper holds both vids.
  const auto artifacts = w.artifacts();
  std::size_t cooccur = 0;
  for (const Beneficiary& b : w.beneficiaries()) {
    const std::string dh = hex(b.dbt_vid.value), bh = hex(b.bank_vid.value);
    for (const auto& [label, bytes] : artifacts) {
      const bool has_dbt = contains(bytes, b.dbt_vid.value) ||
                           contains(bytes, as_bytes(dh));
      const bool has_bank = contains(bytes, b.bank_vid.value) ||
                            contains(bytes, as_bytes(bh));
      cooccur += has_dbt && has_bank;
    }
  }
  out.invariants.push_back({"vids-cooccur-only-in-mapper", cooccur == 0,
                            std::to_string(cooccur) + " artifacts, mapper saw " +
                                std::to_string(w.mapper_cooccurrences())});
  add_common_invariants(out, regs);

  std::string ledger;
  for (const Posting& p : w.postings()) {
    ledger += p.account + " " + std::to_string(p.amount) + " " + p.memo + "\n";
  }
  out.output_digests["ledger"] = hex(crypto::hash(ledger));
  return out;
}

}  // namespace pbd::scenarios
