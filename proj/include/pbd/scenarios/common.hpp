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
// Pieces shared by the scenario drivers.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pbd/common/kv.hpp"
#include "pbd/identity/identity.hpp"
#include "pbd/regulator/regulator.hpp"
#include "pbd/scenarios/script.hpp"
#include "pbd/te/manifest.hpp"
#include "pbd/te/runtime.hpp"

namespace pbd::scenarios {

// An enrolled person acting under one organisation's vid.
struct Party {
  identity::MasterIdentity master;
  identity::VirtualIdentity vid;
  crypto::KeyPair key;
  identity::VidKeyCertificate cert;
};

Party enroll_party(identity::IdentityAuthority& authority,
                   const std::string& dedup, const std::string& org);

// Stand-in code image for a simulated TE. Its measurement changes with the
// manifest name and version.
Bytes code_image(const te::Manifest& manifest);

// Scenario configs skip the `scenario` and `script` keys; those belong to
// the command line tool.

// Throws Error(kConfig) naming the line.
std::int64_t parse_positive(const KvEntry& entry);
[[noreturn]] void unknown_key(const KvEntry& entry);

// "<channel> <sha256 prefix>" per tapped message, then one line per decision.
std::vector<std::string> transcript_lines(
    const te::ChannelTap& tap,
    const std::vector<const regulator::Regulator*>& regulators);

// Audit chain verifies, key releases equal audited GRANTs, and every GRANT
// replays, for each regulator.
void add_common_invariants(
    ScenarioResult& out,
    const std::vector<const regulator::Regulator*>& regulators);

}  // namespace pbd::scenarios
