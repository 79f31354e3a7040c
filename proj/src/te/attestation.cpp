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
#include "pbd/te/attestation.hpp"

namespace pbd::te {

Bytes AttestationReport::signed_portion() const {
  return FrameWriter("ATT0")
      .field(platform_id)
      .field(measurement)
      .field(session_public_key)
      .field(producer_public_key)
      .field(nonce)
      .finish();
}

Bytes AttestationReport::serialize() const {
  return FrameWriter("ATT1")
      .field(platform_id)
      .field(measurement)
      .field(session_public_key)
      .field(producer_public_key)
      .field(nonce)
      .field(signature)
      .finish();
}

AttestationReport AttestationReport::parse(ByteView data) {
  FrameReader r(data, "ATT1");
  AttestationReport a;
  a.platform_id = r.field_string();
  a.measurement = r.field_digest();
  a.session_public_key = r.field_bytes();
  a.producer_public_key = r.field_bytes();
  a.nonce = r.field_bytes();
  a.signature = r.field_bytes();
  r.expect_end();
  return a;
}

Platform::Platform(std::string id, Rng& rng)
    : id_(std::move(id)), key_(crypto::generate_signing_keypair(rng)) {}

AttestationReport Platform::attest(const Digest& loaded_measurement,
                                   ByteView session_public_key,
                                   ByteView producer_public_key,
                                   ByteView nonce) const {
  AttestationReport r{id_,
                      loaded_measurement,
                      to_bytes(session_public_key),
                      to_bytes(producer_public_key),
                      to_bytes(nonce),
                      {}};
  r.signature = crypto::sign(key_.private_key, r.signed_portion());
  return r;
}

bool verify_report(const AttestationReport& report,
                   ByteView platform_public_key) {
  return crypto::verify(platform_public_key, report.signed_portion(),
                        report.signature);
}

}  // namespace pbd::te
