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
#include "pbd/te/manifest.hpp"

#include <algorithm>
#include <set>

#include "pbd/common/error.hpp"
#include "pbd/common/kv.hpp"
#include "pbd/crypto/hash.hpp"

namespace pbd::te {
namespace {

constexpr std::string_view kPolicy = "minimisation_policy";
constexpr std::string_view kAllowed = "minimisation_policy.allowed_fields";
constexpr std::string_view kAggregate = "minimisation_policy.aggregate_only";
constexpr std::string_view kTemplate =
    "minimisation_policy.notification_template";

const std::set<std::string, std::less<>> kKnownKeys = {
    "name",   "version",         "input_types", "output_types",
    "sink",   std::string(kPolicy), std::string(kAllowed),
    std::string(kAggregate), std::string(kTemplate), "callback"};

std::vector<crypto::TypePattern> parse_patterns(const std::string& value) {
  std::vector<crypto::TypePattern> out;
  if (trim(value).empty()) return out;
  for (const std::string& part : split(value, ',')) {
    try {
      out.push_back(crypto::TypePattern::parse(trim(part)));
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, "bad type pattern '" + part + "': " +
                                          e.detail());
    }
  }
  return out;
}

std::string join_patterns(const std::vector<crypto::TypePattern>& ps) {
  std::vector<std::string> parts;
  for (const auto& p : ps) parts.push_back(p.canonical());
  return join(parts, ",");
}

bool any_match(const std::vector<crypto::TypePattern>& ps,
               const crypto::TypeId& type) {
  return std::any_of(ps.begin(), ps.end(),
                     [&](const auto& p) { return p.matches(type); });
}

}  // namespace

Manifest Manifest::parse(std::string_view text) {
  const KvDocument doc = KvDocument::parse(text);
  std::set<std::string> seen;
  for (const KvEntry& e : doc.entries()) {
    if (!kKnownKeys.contains(e.key)) {
      throw Error(ErrorCode::kConfig, "line " + std::to_string(e.line) +
                                          ": unknown manifest key " + e.key);
    }
    if (!seen.insert(e.key).second) {
      throw Error(ErrorCode::kConfig, "line " + std::to_string(e.line) +
                                          ": duplicate key " + e.key);
    }
  }
  Manifest m;
  m.name = doc.require("name");
  m.version = doc.require("version");
  m.input_types = parse_patterns(doc.require("input_types"));
  m.output_types = parse_patterns(doc.get("output_types").value_or(""));
  m.sink = parse_bool(doc.require("sink"));
  m.callback = parse_bool(doc.get("callback").value_or("false"));
  const std::string policy = doc.get(kPolicy).value_or("none");
  if (policy == "projection") {
    MinimisationPolicy p;
    for (const std::string& f : split(doc.require(kAllowed), ',')) {
      if (!trim(f).empty()) p.allowed_fields.emplace_back(trim(f));
    }
    p.aggregate_only = parse_bool(doc.get(kAggregate).value_or("false"));
    p.notification_template = doc.get(kTemplate);
    m.minimisation = std::move(p);
  } else if (policy != "none") {
    throw Error(ErrorCode::kConfig, "minimisation_policy must be none or projection");
  } else if (doc.has(kAllowed) || doc.has(kAggregate) || doc.has(kTemplate)) {
    throw Error(ErrorCode::kConfig, "policy sub-keys given with policy none");
  }
  return m;
}

Manifest Manifest::load(const std::string& path) {
  return parse(read_file(path));
}

std::string Manifest::serialize() const {
  KvDocument doc;
  doc.add("name", name);
  doc.add("version", version);
  doc.add("input_types", join_patterns(input_types));
  doc.add("output_types", join_patterns(output_types));
  doc.add("sink", sink ? "true" : "false");
  if (minimisation) {
    doc.add(std::string(kPolicy), "projection");
    doc.add(std::string(kAllowed), join(minimisation->allowed_fields, ","));
    doc.add(std::string(kAggregate),
            minimisation->aggregate_only ? "true" : "false");
    if (minimisation->notification_template) {
      doc.add(std::string(kTemplate), *minimisation->notification_template);
    }
  } else {
    doc.add(std::string(kPolicy), "none");
  }
  doc.add("callback", callback ? "true" : "false");
  return doc.serialize();
}

bool Manifest::accepts_input(const crypto::TypeId& type) const {
  return any_match(input_types, type);
}

bool Manifest::declares_output(const crypto::TypeId& type) const {
  return any_match(output_types, type);
}

Digest measure(const Manifest& manifest, ByteView code_image) {
  return crypto::hash(FrameWriter("MSR1")
                          .field(manifest.canonical_bytes())
                          .field(code_image)
                          .finish());
}

Bytes encode_record(const Record& record) {
  FrameWriter w("REC1");
  for (const auto& [k, v] : record) w.field(k).field(v);
  return w.finish();
}

Record decode_record(ByteView data) {
  FrameReader r(data, "REC1");
  Record out;
  while (!r.done()) {
    std::string k = r.field_string();
    if (r.done()) throw Error(ErrorCode::kMalformed, "record key without value");
    out[std::move(k)] = r.field_string();
  }
  return out;
}

Record minimise(const Record& record, const MinimisationPolicy& policy) {
  Record out;
  for (const std::string& f : policy.allowed_fields) {
    auto it = record.find(f);
    if (it != record.end()) out.emplace(f, it->second);
  }
  // A templated sink can only ever say the fixed text.
  if (policy.notification_template) {
    out.insert_or_assign("message", *policy.notification_template);
  }
  return out;
}

std::vector<Record> minimise_batch(const std::vector<Record>& records,
                                   const MinimisationPolicy& policy) {
  if (!policy.aggregate_only) {
    std::vector<Record> out;
    out.reserve(records.size());
    for (const Record& r : records) out.push_back(minimise(r, policy));
    return out;
  }
  Record row;
  for (const std::string& f : policy.allowed_fields) {
    std::map<std::string, std::size_t> counts;
    for (const Record& r : records) {
      auto it = r.find(f);
      if (it != r.end()) ++counts[it->second];
    }
    std::vector<std::string> parts;
    for (const auto& [value, n] : counts) {
      parts.push_back(value + ":" + std::to_string(n));
    }
    row.emplace(f, join(parts, ","));
  }
  return {row};
}

}  // namespace pbd::te
