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

#include "feddistr/server.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

namespace feddistr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CostMatrix Transpose(const CostMatrix& c) {
  CostMatrix t(c.front().size(), Vector(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < c[i].size(); ++j) t[j][i] = c[i][j];
  }
  return t;
}

// Shortest augmenting path Hungarian method with potentials; requires
// rows <= cols and finite entries. Returns the column of every row.
std::vector<int> Hungarian(const CostMatrix& a) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(a.front().size());
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

struct Solved {
  int cardinality = 0;
  Assignment assignment;
};

// Optimal matching over finite edges. Forbidden edges carry a penalty larger
// than any difference of finite sums, so cardinality is maximized first.
Solved SolveCore(const CostMatrix& cost) {
  const bool transposed = cost.size() > cost.front().size();
  const CostMatrix c = transposed ? Transpose(cost) : cost;
  double finite_abs = 0.0;
  for (const auto& row : c) {
    for (double x : row) {
      if (std::isfinite(x)) finite_abs += std::abs(x);
    }
  }
  const double penalty = 2.0 * finite_abs + 1.0;
  CostMatrix work = c;
  for (auto& row : work) {
    for (double& x : row) {
      if (!std::isfinite(x)) x = penalty;
    }
  }
  const auto row_to_col = Hungarian(work);
  Solved out;
  for (std::size_t i = 0; i < row_to_col.size(); ++i) {
    const int j = row_to_col[i];
    if (j < 0 || !std::isfinite(c[i][j])) continue;
    if (transposed) {
      out.assignment.pairs.emplace_back(j, static_cast<int>(i));
    } else {
      out.assignment.pairs.emplace_back(static_cast<int>(i), j);
    }
  }
  std::sort(out.assignment.pairs.begin(), out.assignment.pairs.end());
  out.cardinality = static_cast<int>(out.assignment.pairs.size());
  for (const auto& [r, col] : out.assignment.pairs) out.assignment.total_cost += cost[r][col];
  return out;
}

bool Contains(const Assignment& a, int row, int col) {
  return std::find(a.pairs.begin(), a.pairs.end(), std::make_pair(row, col)) != a.pairs.end();
}

}  // namespace

CostMatrix PairwiseCost(std::span<const DistributionParameter> a, std::span<const DistributionParameter> b) {
  if (a.empty() || b.empty()) throw InputError("pairwise_cost: empty parameter list");
  const std::size_t len = a.front().v.size();
  CostMatrix cost(a.size(), Vector(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].v.size() != len) throw InputError("pairwise_cost: parameter length mismatch");
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (b[j].v.size() != len) throw InputError("pairwise_cost: parameter length mismatch");
      cost[i][j] = a[i].label == b[j].label ? Distance(a[i].v, b[j].v) : kInf;
    }
  }
  return cost;
}

Assignment KmAssign(const CostMatrix& cost) {
  if (cost.empty() || cost.front().empty()) throw InputError("km_assign: empty cost matrix");
  const std::size_t cols = cost.front().size();
  for (const auto& row : cost) {
    if (row.size() != cols) throw InputError("km_assign: ragged cost matrix");
    for (double x : row) {
      if (std::isnan(x) || x == -kInf) throw InputError("km_assign: NaN or -inf cost");
    }
  }
  const Solved optimum = SolveCore(cost);
  const double tol = 1e-9 * (1.0 + std::abs(optimum.assignment.total_cost));

  // Greedy lexicographic refinement: fix each row to the smallest column that
  // still admits an optimal completion.
  CostMatrix work = cost;
  const int rows = static_cast<int>(cost.size());
  for (int r = 0; r < rows; ++r) {
    bool fixed = false;
    for (int col = 0; col < static_cast<int>(cols) && !fixed; ++col) {
      if (!std::isfinite(work[r][col])) continue;
      CostMatrix trial = work;
      for (int j = 0; j < static_cast<int>(cols); ++j) {
        if (j != col) trial[r][j] = kInf;
      }
      for (int i = 0; i < rows; ++i) {
        if (i != r) trial[i][col] = kInf;
      }
      const Solved s = SolveCore(trial);
      if (s.cardinality == optimum.cardinality && s.assignment.total_cost <= optimum.assignment.total_cost + tol &&
          Contains(s.assignment, r, col)) {
        work = std::move(trial);
        fixed = true;
      }
    }
    if (!fixed) std::fill(work[r].begin(), work[r].end(), kInf);
  }
  Assignment out = SolveCore(work).assignment;
  out.total_cost = 0.0;
  for (const auto& [r, col] : out.pairs) out.total_cost += cost[r][col];
  return out;
}

std::vector<AlignedGroup> AlignmentResult::parallel_groups() const {
  std::vector<AlignedGroup> out;
  for (const auto& g : groups) {
    if (g.parallel()) out.push_back(g);
  }
  return out;
}

std::vector<ParamRef> AlignmentResult::orthogonal() const {
  std::vector<ParamRef> out;
  for (const auto& g : groups) {
    if (!g.parallel()) out.push_back(g.members.front());
  }
  return out;
}

namespace {

std::vector<const UploadMessage*> SortedByOwner(const std::vector<UploadMessage>& uploads) {
  std::vector<const UploadMessage*> order;
  for (const auto& u : uploads) order.push_back(&u);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->owner < b->owner; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->owner == order[i - 1]->owner) {
      throw InputError("align: duplicate upload from client " + std::to_string(order[i]->owner));
    }
  }
  return order;
}

}  // namespace

double DefaultTau(const std::vector<UploadMessage>& uploads) {
  std::vector<double> distances;
  for (std::size_t a = 0; a < uploads.size(); ++a) {
    for (std::size_t b = a + 1; b < uploads.size(); ++b) {
      if (uploads[a].owner == uploads[b].owner) continue;
      for (const auto& p : uploads[a].params) {
        for (const auto& q : uploads[b].params) {
          if (p.label != q.label) continue;
          if (p.v.size() != q.v.size()) throw InputError("align: parameter length mismatch");
          distances.push_back(Distance(p.v, q.v));
        }
      }
    }
  }
  if (distances.empty()) return 0.0;
  std::sort(distances.begin(), distances.end());
  const std::size_t n = distances.size();
  const double median = n % 2 ? distances[n / 2] : 0.5 * (distances[n / 2 - 1] + distances[n / 2]);
  return 0.5 * median;
}

AlignmentResult Align(const std::vector<UploadMessage>& uploads, std::optional<double> tau) {
  if (uploads.empty()) throw InputError("align: no uploads");
  std::optional<std::size_t> len;
  for (const auto& u : uploads) {
    for (const auto& p : u.params) {
      if (len && p.v.size() != *len) throw InputError("align: parameter length mismatch across uploads");
      len = p.v.size();
    }
  }
  AlignmentResult result;
  result.tau = tau ? *tau : DefaultTau(uploads);
  if (!(result.tau >= 0.0)) throw ConfigError("align: tau must be non-negative");

  std::vector<AlignedGroup>& pool = result.groups;
  auto open_group = [&pool](const DistributionParameter& p) {
    AlignedGroup g;
    g.members.push_back({p.owner, p.local_index});
    g.member_counts.push_back(p.count);
    g.dominant = {p.owner, p.local_index};
    g.dominant_param = p;
    pool.push_back(std::move(g));
  };

  // Retains the uploaded parameters so distances to the final dominant can
  // be reported.
  std::map<ParamRef, const DistributionParameter*> by_ref;
  for (const UploadMessage* upload : SortedByOwner(uploads)) {
    const auto& params = upload->params;
    for (const auto& p : params) {
      if (p.owner != upload->owner) throw InputError("align: parameter owner differs from message owner");
      by_ref[{p.owner, p.local_index}] = &p;
    }
    if (params.empty()) continue;
    if (pool.empty()) {
      for (const auto& p : params) open_group(p);
      continue;
    }
    std::vector<DistributionParameter> reps;
    reps.reserve(pool.size());
    for (const auto& g : pool) reps.push_back(g.dominant_param);
    const CostMatrix cost = PairwiseCost(reps, params);
    const Assignment match = KmAssign(cost);

    std::vector<char> merged(params.size(), 0);
    for (const auto& [gi, pj] : match.pairs) {
      if (!(cost[gi][pj] <= result.tau)) continue;
      AlignedGroup& g = pool[gi];
      const auto& p = params[pj];
      g.members.push_back({p.owner, p.local_index});
      g.member_counts.push_back(p.count);
      // Later clients have larger ids, so only a strictly larger count wins.
      if (p.count > g.dominant_param.count) {
        g.dominant = {p.owner, p.local_index};
        g.dominant_param = p;
      }
      merged[pj] = 1;
    }
    for (std::size_t j = 0; j < params.size(); ++j) {
      if (!merged[j]) open_group(params[j]);
    }
  }

  for (auto& g : pool) {
    g.aggregated_count = 0;
    g.distance_to_dominant.clear();
    for (std::size_t i = 0; i < g.members.size(); ++i) {
      g.aggregated_count += g.member_counts[i];
      g.distance_to_dominant.push_back(Distance(by_ref.at(g.members[i])->v, g.dominant_param.v));
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& g : pool) {
      if (g.parallel() == (pass == 0)) {
        result.payload.push_back(g.dominant_param);
        result.payload_counts.push_back(g.aggregated_count);
      }
    }
  }
  return result;
}

std::vector<DistributionParameter> Broadcast(const AlignmentResult& result) { return result.payload; }

void WriteAlignmentCsv(std::ostream& out, const AlignmentResult& result) {
  out << "group_id,kind,client_id,local_index,label,dominant,count,distance_to_dominant\n";
  for (std::size_t gid = 0; gid < result.groups.size(); ++gid) {
    const auto& g = result.groups[gid];
    for (std::size_t i = 0; i < g.members.size(); ++i) {
      out << gid << ',' << (g.parallel() ? "parallel" : "orthogonal") << ',' << g.members[i].owner << ','
          << g.members[i].local_index << ',' << g.dominant_param.label << ','
          << (g.members[i] == g.dominant ? 1 : 0) << ',' << g.member_counts[i] << ','
          << FormatDouble(g.distance_to_dominant[i]) << '\n';
    }
  }
}

}  // namespace feddistr
