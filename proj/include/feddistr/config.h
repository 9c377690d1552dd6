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

#ifndef FEDDISTR_CONFIG_H_
#define FEDDISTR_CONFIG_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "feddistr/common.h"

namespace feddistr {

// Flat `key = value` text grouped by `[section]` headers. Keys are addressed
// as "section.key" (or just "key" before the first header). '#' starts a
// comment. Duplicate keys are rejected.
class KeyValueFile {
 public:
  static KeyValueFile Parse(const std::string& text);
  static KeyValueFile Load(const std::string& path);

  bool Has(const std::string& key) const;
  std::optional<std::string> Get(const std::string& key) const;

  // Typed getters mark the key as consumed; errors name the key.
  std::string GetString(const std::string& key, const std::string& fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  std::optional<double> GetOptionalDouble(const std::string& key) const;
  long long GetInt(const std::string& key, long long fallback) const;
  Vector GetVector(const std::string& key) const;

  void Set(const std::string& key, const std::string& value);

  // Keys never read through a getter; used to reject typos.
  std::vector<std::string> UnconsumedKeys() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> consumed_;
};

}  // namespace feddistr

#endif  // FEDDISTR_CONFIG_H_
