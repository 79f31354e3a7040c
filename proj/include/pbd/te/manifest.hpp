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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pbd/common/bytes.hpp"
#include "pbd/crypto/type_id.hpp"

namespace pbd::te {

struct MinimisationPolicy {
  std::vector<std::string> allowed_fields;
  bool aggregate_only = false;
  std::optional<std::string> notification_template;

  bool operator==(const MinimisationPolicy&) const = default;
};

// Key/value document, canonical order:
//
//   name = mri-analysis
//   version = 1
//   input_types = DT2/MRIScan(x)
//   output_types = DT4/MedicalRecord(x)
//   sink = false
//   minimisation_policy = none | projection
//   minimisation_policy.allowed_fields = diagnosis,findings
//   minimisation_policy.aggregate_only = false
//   minimisation_policy.notification_template = ...
//   callback = true
//
// The three sub-keys appear only for `projection`. Type lists are
// comma-separated TypePatterns.
struct Manifest {
  std::string name;
  std::string version;
  std::vector<crypto::TypePattern> input_types;
  std::vector<crypto::TypePattern> output_types;
  bool sink = false;
  std::optional<MinimisationPolicy> minimisation;  // nullopt is "none"
  bool callback = false;

  // Throws Error(kConfig).
  static Manifest parse(std::string_view text);
  static Manifest load(const std::string& path);
  std::string serialize() const;
  Bytes canonical_bytes() const { return to_bytes(serialize()); }

  bool accepts_input(const crypto::TypeId& type) const;
  bool declares_output(const crypto::TypeId& type) const;

  bool operator==(const Manifest&) const = default;
};

// hash("MSR1" framed: canonical manifest bytes, code image).
Digest measure(const Manifest& manifest, ByteView code_image);

// Field map carried inside envelope payloads. Encoded as "REC1" followed by
// alternating key and value fields in key order.
using Record = std::map<std::string, std::string>;

Bytes encode_record(const Record& record);
// Throws Error(kMalformed).
Record decode_record(ByteView data);

// Projection onto allowed_fields. A notification_template overwrites the
// `message` field with the template text. For aggregate_only policies use
// minimise_batch.
Record minimise(const Record& record, const MinimisationPolicy& policy);

// aggregate_only: one row; each allowed field maps to "value:count" pairs
// sorted by value and joined with ','. Otherwise, per-record projection.
std::vector<Record> minimise_batch(const std::vector<Record>& records,
                                   const MinimisationPolicy& policy);

}  // namespace pbd::te
