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
#include "pbd/te/runtime.hpp"

#include <openssl/crypto.h>

#include "pbd/crypto/box.hpp"

namespace pbd::te {
namespace {

// Per-execution secrets. Wiped on every exit path.
struct ExecutionContext {
  crypto::BoxKeyPair session;
  crypto::KeyPair producer;
  std::vector<crypto::DataKey> keys;

  ~ExecutionContext() {
    OPENSSL_cleanse(session.private_key.data(), session.private_key.size());
    OPENSSL_cleanse(producer.private_key.data(), producer.private_key.size());
    for (auto& k : keys) OPENSSL_cleanse(k.data(), k.size());
  }
};

bool is_local(const crypto::TypeId& type) {
  return type.name().rfind("local:", 0) == 0;
}

}  // namespace

std::string_view to_string(RuntimeEventKind kind) {
  switch (kind) {
    case RuntimeEventKind::kAttested: return "attested";
    case RuntimeEventKind::kKeyRequested: return "key-requested";
    case RuntimeEventKind::kKeyProvisioned: return "key-provisioned";
    case RuntimeEventKind::kDecrypted: return "decrypted";
    case RuntimeEventKind::kOutput: return "output";
    case RuntimeEventKind::kAborted: return "aborted";
  }
  return "unknown";
}

void ChannelTap::record(std::string channel, ByteView bytes) {
  std::lock_guard lock(mu_);
  traffic_.emplace_back(std::move(channel), to_bytes(bytes));
}

std::vector<std::pair<std::string, Bytes>> ChannelTap::traffic() const {
  std::lock_guard lock(mu_);
  return traffic_;
}

TeRuntime::TeRuntime(const Platform& platform, Rng rng, ChannelTap* tap)
    : platform_(platform), rng_(std::move(rng)), tap_(tap) {}

void TeRuntime::event(RuntimeEventKind kind, const std::string& te,
                      const std::string& type) {
  std::lock_guard lock(mu_);
  events_.push_back({kind, te, type});
}

void TeRuntime::tap(std::string channel, ByteView bytes) {
  if (tap_) tap_->record(std::move(channel), bytes);
}

std::vector<RuntimeEvent> TeRuntime::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

RunResult TeRuntime::run(const TeInstance& te,
                         const std::vector<Delivery>& inputs,
                         RegulatorEndpoint& endpoint,
                         const RunOptions& options) {
  const Manifest& m = te.manifest;
  const Digest measurement = te.measurement();
  ExecutionContext ctx;
  {
    std::lock_guard lock(mu_);
    ctx.session = crypto::generate_box_keypair(rng_);
    ctx.producer = crypto::generate_signing_keypair(rng_);
  }

  std::vector<TypedValue> plain;
  for (const Delivery& in : inputs) {
    const crypto::Envelope& env = in.envelope;
    const std::string type = env.type_id.canonical();
    if (!m.accepts_input(env.type_id) || is_local(env.type_id)) {
      event(RuntimeEventKind::kAborted, m.name, type);
      throw Error(ErrorCode::kTypeViolation, "input type " + type +
                                                 " not declared by " + m.name);
    }
    RegulatorEndpoint& gate = endpoint.route(env.type_id);
    const Bytes nonce = gate.issue_nonce();
    regulator::AccessRequest q;
    q.attestation = platform_.attest(measurement, ctx.session.public_key,
                                     ctx.producer.public_key, nonce);
    event(RuntimeEventKind::kAttested, m.name, type);
    q.claimed_input_type = env.type_id;
    q.subject = env.subject;
    q.wrapped_key = env.wrapped_key;
    q.request_nonce = nonce;
    if (options.requester) {
      const Requester& r = *options.requester;
      q.requester = regulator::RequesterProof{r.role, r.certificate, {},
                                              r.role_credential};
      q.requester->possession_signature =
          crypto::sign(r.key.private_key, q.possession_message());
    }
    const Bytes wire = q.serialize();
    tap("regulator-request", wire);
    event(RuntimeEventKind::kKeyRequested, m.name, type);
    const regulator::AccessDecision d = gate.handle(wire);
    tap("regulator-response", d.wrapped_key);
    if (!d.granted) {
      event(RuntimeEventKind::kAborted, m.name, type);
      throw AccessDenied(d.reason);
    }
    auto raw = crypto::box_open(
        ctx.session.private_key, d.wrapped_key,
        regulator::grant_aad(d.decision_id, env.type_id, env.subject));
    if (!raw || raw->size() != crypto::kAeadKeySize) {
      event(RuntimeEventKind::kAborted, m.name, type);
      throw Error(ErrorCode::kKeyMismatch, "provisioned key does not unwrap");
    }
    crypto::DataKey key;
    std::copy(raw->begin(), raw->end(), key.begin());
    OPENSSL_cleanse(raw->data(), raw->size());
    ctx.keys.push_back(key);
    event(RuntimeEventKind::kKeyProvisioned, m.name, type);
    const Bytes payload = crypto::open(
        env, key, {env.type_id, env.subject, in.producer_public_key});
    event(RuntimeEventKind::kDecrypted, m.name, type);
    plain.push_back({env.type_id, env.subject, decode_record(payload)});
  }
  for (const TypedValue& v : options.local_inputs) {
    if (!is_local(v.type) || !m.accepts_input(v.type)) {
      event(RuntimeEventKind::kAborted, m.name, v.type.canonical());
      throw Error(ErrorCode::kTypeViolation,
                  "local input " + v.type.canonical() + " not declared");
    }
    plain.push_back(v);
  }

  const std::vector<TypedValue> produced = te.logic(plain, options.params);
  for (const TypedValue& out : produced) {
    if (!m.declares_output(out.type)) {
      event(RuntimeEventKind::kAborted, m.name, out.type.canonical());
      throw Error(ErrorCode::kTypeViolation, "output type " +
                                                 out.type.canonical() +
                                                 " not declared by " + m.name);
    }
  }

  RunResult result;
  result.producer_public_key = ctx.producer.public_key;
  if (m.sink) {
    if (!m.minimisation) {
      throw Error(ErrorCode::kStructuralReject, "sink without minimisation");
    }
    std::vector<Record> rows;
    for (const TypedValue& out : produced) rows.push_back(out.record);
    result.sink_rows = minimise_batch(rows, *m.minimisation);
    for (const Record& row : result.sink_rows) {
      tap("sink", encode_record(row));
      event(RuntimeEventKind::kOutput, m.name, "sink");
    }
    return result;
  }
  const Bytes& sealing_key =
      options.output_sealing_key ? *options.output_sealing_key
                                 : endpoint.sealing_key();
  std::lock_guard lock(mu_);
  for (const TypedValue& out : produced) {
    crypto::Envelope env = crypto::seal(out.type, out.subject,
                                        encode_record(out.record), sealing_key,
                                        ctx.producer, rng_);
    if (tap_) tap_->record("output", env.serialize());
    events_.push_back({RuntimeEventKind::kOutput, m.name, out.type.canonical()});
    result.outputs.push_back({std::move(env), ctx.producer.public_key});
  }
  return result;
}

}  // namespace pbd::te
