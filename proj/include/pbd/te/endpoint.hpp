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
#include <string>

#include "pbd/common/bytes.hpp"
#include "pbd/crypto/type_id.hpp"
#include "pbd/regulator/access.hpp"

namespace pbd::te {

// The regulator's online interface as seen from a TE. Requests cross it as
// ARQ1 bytes.
class RegulatorEndpoint {
 public:
  virtual ~RegulatorEndpoint() = default;

  virtual Bytes issue_nonce() = 0;
  virtual regulator::AccessDecision handle(ByteView access_request) = 0;
  // Public key that outputs are sealed to.
  virtual const Bytes& sealing_key() const = 0;
  // Endpoint that gates inputs of `type`. Nonce and request for one input
  // always go to the same endpoint.
  virtual RegulatorEndpoint& route(const crypto::TypeId&) { return *this; }
};

// Dispatches each input to the regulator controlling its type, selected by
// the longest matching type-name prefix. Outputs seal to the fallback.
class RoutingEndpoint : public RegulatorEndpoint {
 public:
  explicit RoutingEndpoint(RegulatorEndpoint& fallback) : fallback_(fallback) {}

  void add(std::string type_prefix, RegulatorEndpoint& endpoint) {
    routes_.insert_or_assign(std::move(type_prefix), &endpoint);
  }

  Bytes issue_nonce() override { return fallback_.issue_nonce(); }
  regulator::AccessDecision handle(ByteView request) override {
    return fallback_.handle(request);
  }
  const Bytes& sealing_key() const override { return fallback_.sealing_key(); }

  RegulatorEndpoint& route(const crypto::TypeId& type) override {
    RegulatorEndpoint* best = &fallback_;
    std::size_t best_len = 0;
    for (const auto& [prefix, ep] : routes_) {
      if (type.name().rfind(prefix, 0) == 0 && prefix.size() >= best_len) {
        best = ep;
        best_len = prefix.size();
      }
    }
    return *best;
  }

 private:
  RegulatorEndpoint& fallback_;
  std::map<std::string, RegulatorEndpoint*> routes_;
};

}  // namespace pbd::te
