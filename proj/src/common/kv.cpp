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
#include "pbd/common/kv.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "pbd/common/error.hpp"

namespace pbd {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

namespace {

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
          c == '.' || c == '-')) {
      return false;
    }
  }
  return true;
}

}  // namespace

KvDocument KvDocument::parse(std::string_view text) {
  KvDocument doc;
  int line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kConfig,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    if (!valid_key(key)) {
      throw Error(ErrorCode::kConfig,
                  "line " + std::to_string(line_no) + ": bad key");
    }
    doc.entries_.push_back({std::string(key),
                            std::string(trim(line.substr(eq + 1))), line_no});
  }
  return doc;
}

KvDocument KvDocument::load(const std::string& path) {
  return parse(read_file(path));
}

void KvDocument::add(std::string key, std::string value) {
  if (!valid_key(key)) throw Error(ErrorCode::kConfig, "bad key: " + key);
  if (value.find('\n') != std::string::npos) {
    throw Error(ErrorCode::kConfig, "newline in value for " + key);
  }
  entries_.push_back({std::move(key), std::move(value), 0});
}

std::optional<std::string> KvDocument::get(std::string_view key) const {
  for (const KvEntry& e : entries_) {
    if (e.key == key) return e.value;
  }
  return std::nullopt;
}

std::string KvDocument::require(std::string_view key) const {
  auto v = get(key);
  if (!v) throw Error(ErrorCode::kConfig, "missing key: " + std::string(key));
  return *v;
}

std::vector<std::string> KvDocument::get_all(std::string_view key) const {
  std::vector<std::string> out;
  for (const KvEntry& e : entries_) {
    if (e.key == key) out.push_back(e.value);
  }
  return out;
}

std::string KvDocument::serialize() const {
  std::string out;
  for (const KvEntry& e : entries_) {
    out += e.key;
    out += " = ";
    out += e.value;
    out += '\n';
  }
  return out;
}

bool parse_bool(std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw Error(ErrorCode::kConfig, "expected true/false, got " + std::string(s));
}

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kConfig, "expected integer, got " + std::string(s));
  }
  return v;
}

double parse_double(std::string_view s) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kConfig, "expected number, got " + std::string(s));
  }
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

}  // namespace pbd
