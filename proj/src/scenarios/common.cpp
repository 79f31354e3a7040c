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
#include "pbd/scenarios/common.hpp"

#include "pbd/common/error.hpp"
#include "pbd/crypto/hash.hpp"

namespace pbd::scenarios {

Party enroll_party(identity::IdentityAuthority& authority,
                   const std::string& dedup, const std::string& org) {
  Party p;
  p.master = authority.enroll(dedup);
  p.vid = identity::derive_vid(p.master, org);
  p.key = identity::derive_vid_signing_key(p.master, org);
  p.cert = authority.certify_vid_key(p.vid.value, p.master.master_id, org, 0,
                                     p.key.public_key);
  return p;
}

Bytes code_image(const te::Manifest& manifest) {
  return to_bytes("pbd-te-code:" + manifest.name + ":" + manifest.version);
}

std::int64_t parse_positive(const KvEntry& entry) {
  std::int64_t v = 0;
  try {
    v = parse_int(entry.value);
  } catch (const Error&) {
    v = 0;
  }
  if (v <= 0) {
    throw Error(ErrorCode::kConfig, "line " + std::to_string(entry.line) + ": " +
                                        entry.key + " must be a positive integer");
  }
  return v;
}

void unknown_key(const KvEntry& entry) {
  throw Error(ErrorCode::kConfig, "line " + std::to_string(entry.line) +
                                      ": unknown key " + entry.key);
}

std::vector<std::string> transcript_lines(
    const te::ChannelTap& tap,
    const std::vector<const regulator::Regulator*>& regulators) {
  std::vector<std::string> out;
  for (const auto& [channel, bytes] : tap.traffic()) {
    out.push_back(channel + " " + hex(crypto::hash(bytes)).substr(0, 16));
  }
  for (const regulator::Regulator* r : regulators) {
    for (const auto& d : r->decisions()) {
      out.push_back("decision " + d.decision_id + " " +
                    (d.granted ? "GRANT " + d.rule_id
                               : "DENY:" + std::string(regulator::to_string(d.reason))));
    }
  }
  return out;
}

void add_common_invariants(
    ScenarioResult& out,
    const std::vector<const regulator::Regulator*>& regulators) {
  for (const regulator::Regulator* r : regulators) {
    const auto verdict = r->audit().verify();
    out.invariants.push_back({"audit-chain-verifies:" + r->name(), verdict.ok,
                              verdict.ok ? "ok" : verdict.reason});
    std::size_t audited = 0;
    for (const auto& e : r->audit().entries()) {
      audited += e.event == "access" && e.detail.rfind("GRANT:", 0) == 0;
    }
    out.invariants.push_back(
        {"key-releases-match-grants:" + r->name(), audited == r->key_releases(),
         std::to_string(r->key_releases()) + " releases, " +
             std::to_string(audited) + " audited"});
    std::size_t grants = 0, replayed = 0;
    for (const auto& d : r->decisions()) {
      if (!d.granted) continue;
      ++grants;
      replayed += r->replay_decision(d.decision_id);
    }
    out.invariants.push_back({"grants-replay:" + r->name(), grants == replayed,
                              std::to_string(replayed) + "/" +
                                  std::to_string(grants)});
  }
}

}  // namespace pbd::scenarios
