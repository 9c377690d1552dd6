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

// Exhaustive oracle for minimum-cost matchings, shared by the unit and
// acceptance tests.
#ifndef FEDDISTR_TESTS_KM_ORACLE_H_
#define FEDDISTR_TESTS_KM_ORACLE_H_

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "feddistr/server.h"

namespace feddistr::testing {

struct OracleMatch {
  int cardinality = -1;
  double cost = 0.0;
  std::vector<int> row_to_col;  // -1 when the row is unmatched
};

// Ranks unmatched rows after every real column so the comparison mirrors the
// solver's preference for matching a row at the smallest feasible column.
inline bool LexLess(const std::vector<int>& a, const std::vector<int>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int x = a[i] < 0 ? std::numeric_limits<int>::max() : a[i];
    const int y = b[i] < 0 ? std::numeric_limits<int>::max() : b[i];
    if (x != y) return x < y;
  }
  return false;
}

inline void Enumerate(const CostMatrix& cost, std::size_t row, std::vector<int>& current, std::vector<bool>& used,
                      int card, double sum, OracleMatch& best) {
  if (row == cost.size()) {
    const double tol = 1e-9 * (1.0 + std::abs(best.cost));
    bool better = false;
    if (card != best.cardinality) {
      better = card > best.cardinality;
    } else if (sum < best.cost - tol) {
      better = true;
    } else if (sum <= best.cost + tol) {
      better = LexLess(current, best.row_to_col);
    }
    if (better) best = {card, sum, current};
    return;
  }
  current[row] = -1;
  Enumerate(cost, row + 1, current, used, card, sum, best);
  for (std::size_t c = 0; c < cost[row].size(); ++c) {
    if (used[c] || !std::isfinite(cost[row][c])) continue;
    used[c] = true;
    current[row] = static_cast<int>(c);
    Enumerate(cost, row + 1, current, used, card + 1, sum + cost[row][c], best);
    used[c] = false;
  }
  current[row] = -1;
}

inline OracleMatch BruteForceMatch(const CostMatrix& cost) {
  OracleMatch best;
  best.cost = std::numeric_limits<double>::infinity();
  std::vector<int> current(cost.size(), -1);
  std::vector<bool> used(cost.front().size(), false);
  Enumerate(cost, 0, current, used, 0, 0.0, best);
  return best;
}

inline std::vector<int> RowToCol(const Assignment& a, std::size_t rows) {
  std::vector<int> out(rows, -1);
  for (const auto& [r, c] : a.pairs) out[r] = c;
  return out;
}

// Random matrix up to max_side on each axis. Integer entries make ties common;
// a sprinkling of +inf exercises the cardinality-first rule.
inline CostMatrix RandomCostMatrix(Rng& rng, int max_side, bool integer, double inf_rate) {
  std::uniform_int_distribution<int> side(1, max_side);
  const int rows = side(rng);
  const int cols = side(rng);
  std::uniform_real_distribution<double> real(0.0, 10.0);
  std::uniform_int_distribution<int> small(0, 3);
  std::bernoulli_distribution forbid(inf_rate);
  CostMatrix cost(rows, Vector(cols));
  for (auto& row : cost) {
    for (auto& x : row) {
      x = integer ? small(rng) : real(rng);
      if (forbid(rng)) x = std::numeric_limits<double>::infinity();
    }
  }
  return cost;
}

}  // namespace feddistr::testing

#endif  // FEDDISTR_TESTS_KM_ORACLE_H_
