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

#ifndef FEDDISTR_COMMON_H_
#define FEDDISTR_COMMON_H_

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace feddistr {

using Vector = std::vector<double>;
using Rng = std::mt19937_64;

// A labeled feature vector.
struct Example {
  Vector x;
  int y = 0;
};

using Dataset = std::vector<Example>;

// Invalid run configuration or violated precondition on sizes/counts.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input data (dimension mismatch, bad records, empty inputs).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Quantity undefined for the given arguments.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A contract between two components was broken.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Mixes `stream` into `base` with splitmix64 so sibling streams are
// decorrelated. Used to give every client, trial and sweep cell its own seed.
std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t stream);

double Dot(std::span<const double> a, std::span<const double> b);
double Norm2(std::span<const double> v);
double Distance(std::span<const double> a, std::span<const double> b);
double SquaredDistance(std::span<const double> a, std::span<const double> b);

// Shortest text that parses back to the identical double ("%.17g").
std::string FormatDouble(double value);
// Strict parse: the whole field must be consumed. Accepts inf/nan.
double ParseDouble(std::string_view text);
long long ParseInt(std::string_view text);

std::vector<std::string_view> SplitFields(std::string_view line, char sep = ',');
std::string_view Trim(std::string_view s);

}  // namespace feddistr

#endif  // FEDDISTR_COMMON_H_
