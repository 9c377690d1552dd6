// Copyright 2026 The FedDistr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "feddistr/config.h"

#include <fstream>
#include <sstream>

namespace feddistr {

KeyValueFile KeyValueFile::Parse(const std::string& text) {
  KeyValueFile file;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      }
      section = std::string(Trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(Trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (file.entries_.count(full)) throw ConfigError("duplicate key '" + full + "'");
    file.entries_[full] = std::string(Trim(line.substr(eq + 1)));
  }
  return file;
}

KeyValueFile KeyValueFile::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return Parse(buf.str());
}

bool KeyValueFile::Has(const std::string& key) const { return entries_.count(key) > 0; }

std::optional<std::string> KeyValueFile::Get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  consumed_.insert(key);
  return it->second;
}

std::string KeyValueFile::GetString(const std::string& key, const std::string& fallback) const {
  return Get(key).value_or(fallback);
}

double KeyValueFile::GetDouble(const std::string& key, double fallback) const {
  return GetOptionalDouble(key).value_or(fallback);
}

std::optional<double> KeyValueFile::GetOptionalDouble(const std::string& key) const {
  const auto value = Get(key);
  if (!value) return std::nullopt;
  try {
    return ParseDouble(*value);
  } catch (const InputError&) {
    throw ConfigError("'" + key + "': expected a number, got '" + *value + "'");
  }
}

long long KeyValueFile::GetInt(const std::string& key, long long fallback) const {
  const auto value = Get(key);
  if (!value) return fallback;
  try {
    return ParseInt(*value);
  } catch (const InputError&) {
    throw ConfigError("'" + key + "': expected an integer, got '" + *value + "'");
  }
}

Vector KeyValueFile::GetVector(const std::string& key) const {
  const auto value = Get(key);
  if (!value) throw ConfigError("missing key '" + key + "'");
  Vector out;
  for (const auto field : SplitFields(*value)) {
    try {
      out.push_back(ParseDouble(field));
    } catch (const InputError&) {
      throw ConfigError("'" + key + "': bad vector entry '" + std::string(field) + "'");
    }
  }
  return out;
}

void KeyValueFile::Set(const std::string& key, const std::string& value) { entries_[key] = value; }

std::vector<std::string> KeyValueFile::UnconsumedKeys() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : entries_) {
    if (!consumed_.count(key)) out.push_back(key);
  }
  return out;
}

}  // namespace feddistr
