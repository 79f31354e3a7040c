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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pbd {

// Line-oriented `key = value` documents. Manifests, scenario configs and
// rule files all use this family. Order is preserved and keys may repeat.
// `#` starts a comment line; blank lines are ignored.
struct KvEntry {
  std::string key;
  std::string value;
  int line = 0;
};

class KvDocument {
 public:
  // Throws Error(kConfig) with the offending line number.
  static KvDocument parse(std::string_view text);
  static KvDocument load(const std::string& path);

  void add(std::string key, std::string value);

  std::optional<std::string> get(std::string_view key) const;
  std::string require(std::string_view key) const;
  std::vector<std::string> get_all(std::string_view key) const;
  bool has(std::string_view key) const { return get(key).has_value(); }

  const std::vector<KvEntry>& entries() const { return entries_; }

  // One `key = value` per line, in insertion order.
  std::string serialize() const;

 private:
  std::vector<KvEntry> entries_;
};

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool parse_bool(std::string_view s);  // "true"/"false", else Error(kConfig)
std::int64_t parse_int(std::string_view s);
double parse_double(std::string_view s);
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace pbd
