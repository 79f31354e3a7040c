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
#pragma once

#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pbd/common/bytes.hpp"
#include "pbd/common/error.hpp"
#include "pbd/common/rng.hpp"
#include "pbd/crypto/envelope.hpp"
#include "pbd/identity/credential.hpp"
#include "pbd/identity/identity.hpp"
#include "pbd/regulator/access.hpp"
#include "pbd/te/attestation.hpp"
#include "pbd/te/endpoint.hpp"
#include "pbd/te/manifest.hpp"

namespace pbd::te {

struct TypedValue {
  crypto::TypeId type{"-"};
  crypto::SubjectTag subject;
  Record record;
};

// TE logic is a pure function from decrypted inputs (plus request
// parameters) to typed outputs. It has no other channel.
using TeLogic = std::function<std::vector<TypedValue>(
    const std::vector<TypedValue>& inputs, const Record& params)>;

struct TeInstance {
  Manifest manifest;
  Bytes code;
  TeLogic logic;

  Digest measurement() const { return measure(manifest, code); }
};

// An envelope plus the producer key it claims to come from.
struct Delivery {
  crypto::Envelope envelope;
  Bytes producer_public_key;
};

// Human at a sink terminal.
struct Requester {
  std::string role;
  identity::VidKeyCertificate certificate;
  crypto::KeyPair key;
  std::optional<identity::Credential> role_credential;
};

struct RunOptions {
  std::optional<Requester> requester;
  Record params;
  // Device-captured values; their types must match a `local:` input pattern.
  std::vector<TypedValue> local_inputs;
  // Outputs are sealed to this key; defaults to the endpoint's sealing key.
  std::optional<Bytes> output_sealing_key;
};

struct RunResult {
  std::vector<Delivery> outputs;
  std::vector<Record> sink_rows;
  Bytes producer_public_key;
};

enum class RuntimeEventKind {
  kAttested,
  kKeyRequested,
  kKeyProvisioned,
  kDecrypted,
  kOutput,
  kAborted,
};
std::string_view to_string(RuntimeEventKind kind);

struct RuntimeEvent {
  RuntimeEventKind kind;
  std::string te;
  std::string type;
};

// Everything that crosses a channel outside an execution context.
class ChannelTap {
 public:
  void record(std::string channel, ByteView bytes);
  std::vector<std::pair<std::string, Bytes>> traffic() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::pair<std::string, Bytes>> traffic_;
};

class AccessDenied : public Error {
 public:
  explicit AccessDenied(regulator::DenyReason reason)
      : Error(ErrorCode::kAccessDenied, std::string(regulator::to_string(reason))),
        reason_(reason) {}
  regulator::DenyReason reason() const { return reason_; }

 private:
  regulator::DenyReason reason_;
};

class TeRuntime {
 public:
  TeRuntime(const Platform& platform, Rng rng, ChannelTap* tap = nullptr);

  // For every input: attest, send an ARQ1 request, and decrypt only after a
  // GRANT. Throws AccessDenied on any DENY (no outputs are produced),
  // Error(kTypeViolation) if the logic emits an undeclared type or an input
  // type is not declared.
  RunResult run(const TeInstance& te, const std::vector<Delivery>& inputs,
                RegulatorEndpoint& endpoint, const RunOptions& options = {});

  std::vector<RuntimeEvent> events() const;

 private:
  void event(RuntimeEventKind kind, const std::string& te,
             const std::string& type);
  void tap(std::string channel, ByteView bytes);

  const Platform& platform_;
  mutable std::mutex mu_;
  Rng rng_;
  ChannelTap* tap_;
  std::vector<RuntimeEvent> events_;
};

}  // namespace pbd::te
