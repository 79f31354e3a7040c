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
// Reference contact query: the literal double loop over all record pairs.
// Distances are compared squared, the same arithmetic the metric is defined
// with, so boundary points agree bit for bit.
#pragma once

#include <set>
#include <vector>

#include "pbd/scenarios/contact_tracing.hpp"

namespace pbd::testing {

inline std::set<Digest> brute_force_contacts(
    const std::vector<scenarios::ContactRecord>& records, const Digest& infected,
    const scenarios::TraceQueryParams& p) {
  std::set<Digest> out;
  for (const auto& a : records) {
    if (a.vid != infected) continue;
    if (a.time < p.now - p.window || a.time > p.now) continue;
    for (const auto& v : records) {
      if (v.vid == infected) continue;
      const double dx = v.x - a.x;
      const double dy = v.y - a.y;
      const Timestamp dt = v.time - a.time;
      if (dx * dx + dy * dy <= p.epsilon * p.epsilon &&
          (dt < 0 ? -dt : dt) <= p.delta) {
        out.insert(v.vid);
      }
    }
  }
  return out;
}

}  // namespace pbd::testing
