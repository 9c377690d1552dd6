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

#ifndef FEDDISTR_SERVER_H_
#define FEDDISTR_SERVER_H_

#include <compare>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "feddistr/client.h"
#include "feddistr/common.h"

namespace feddistr {

using CostMatrix = std::vector<Vector>;

// Row/column pairs of a partial matching, sorted by row.
struct Assignment {
  std::vector<std::pair<int, int>> pairs;
  double total_cost = 0.0;
};

// Euclidean distances between parameter vectors; +inf across labels.
CostMatrix PairwiseCost(std::span<const DistributionParameter> a, std::span<const DistributionParameter> b);

// Kuhn-Munkres on a rectangular matrix whose entries may be +inf (forbidden).
// Returns a minimum-cost matching among those with the largest number of
// finite edges; among equal-cost optima the lexicographically smallest pair
// list wins. Throws InputError on an empty matrix or a NaN/-inf entry.
Assignment KmAssign(const CostMatrix& cost);

// Identifies one uploaded parameter.
struct ParamRef {
  int owner = 0;
  int local_index = 0;
  auto operator<=>(const ParamRef&) const = default;
};

// Uploaded parameters judged to describe the same base distribution.
struct AlignedGroup {
  std::vector<ParamRef> members;
  std::vector<long long> member_counts;
  std::vector<double> distance_to_dominant;
  ParamRef dominant;
  DistributionParameter dominant_param;
  long long aggregated_count = 0;

  bool parallel() const { return members.size() >= 2; }
};

struct AlignmentResult {
  // Every group in creation order; singletons are the orthogonal set.
  std::vector<AlignedGroup> groups;
  // Dominants of parallel groups, then orthogonal parameters.
  std::vector<DistributionParameter> payload;
  // Summed member counts of the group behind each payload entry.
  std::vector<long long> payload_counts;
  double tau = 0.0;

  std::vector<AlignedGroup> parallel_groups() const;
  std::vector<ParamRef> orthogonal() const;
};

// Half the median distance over label-compatible parameter pairs from
// different clients; 0 when there is no such pair.
double DefaultTau(const std::vector<UploadMessage>& uploads);

// Sequentially merges clients (ascending owner id) into a pool of groups via
// KmAssign against each group's dominant. Matched pairs within `tau` join the
// group; everything else opens a new group. Dominant = largest count, ties to
// the lowest owner id then local index. `tau` defaults to DefaultTau.
AlignmentResult Align(const std::vector<UploadMessage>& uploads, std::optional<double> tau = std::nullopt);

// The single downlink: v = [v_p, v_o].
std::vector<DistributionParameter> Broadcast(const AlignmentResult& result);

// Columns: group_id,kind,client_id,local_index,label,dominant,count,distance_to_dominant
void WriteAlignmentCsv(std::ostream& out, const AlignmentResult& result);

}  // namespace feddistr

#endif  // FEDDISTR_SERVER_H_
