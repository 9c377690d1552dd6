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

#ifndef FEDDISTR_THEORY_H_
#define FEDDISTR_THEORY_H_

#include <iosfwd>
#include <optional>
#include <vector>

#include "feddistr/common.h"

namespace feddistr {

// Inputs shared by the bound evaluations and the Monte Carlo check. The
// truncated normal used by the Monte Carlo experiment has location `loc`
// and scale `spread` before truncation to [a, b].
struct BoundSpec {
  long long n = 1000;
  std::vector<long long> client_sizes;  // optional; min() feeds the bound when set
  double eps = 0.1;
  double lipschitz = 1.0;
  int num_clients = 2;
  double xi = 0.0;
  int num_bases = 1;
  double a = 0.0;
  double b = 1.0;
  double loc = 0.5;
  double spread = 0.25;

  long long MinClientSize() const;
  // Throws InputError naming the violated field.
  void Validate() const;
};

// exp(-2 n eps^2 / (b - a)^2), clamped to [0, 1].
double HoeffdingTail(long long n, double eps, double a, double b);

// 1 - exp(-n_min eps^2 / (2 L^2)), clamped to [0, 1].
double Thm1Bound(long long n_min, double eps, double lipschitz);

// 1 / (K - 1)^2: entanglement must stay strictly below this.
double NearDisentangledThreshold(int num_clients);

// 1 - exp(-(1 - (K-1) sqrt(xi)) n eps^2 / (2 m L^2)); nullopt when
// xi >= 1/(K-1)^2.
std::optional<double> Thm2Bound(long long n, double eps, double lipschitz, int num_clients, double xi,
                                int num_bases);

// Verifies that every coordinate has an entry of at least 1 - (K-1) sqrt(xi)
// across K nonnegative vectors whose coordinates sum to 1 over the vectors
// and whose pairwise inner products are at most xi < 1/(K-1)^2. Throws
// InputError when the inputs violate those conditions.
bool Lemma3Check(const std::vector<Vector>& vectors, double xi);

// Normal(loc, spread^2) conditioned on [a, b].
class TruncatedNormal {
 public:
  TruncatedNormal(double loc, double spread, double a, double b);

  double Cdf(double t) const;
  double Pdf(double t) const;
  double Mean() const;
  double Median() const;
  // E|w - Z|, closed form.
  double ExpectedAbsDeviation(double w) const;
  double Sample(Rng& rng) const;

  double a() const { return a_; }
  double b() const { return b_; }

 private:
  double PartialMean(double t) const;  // integral of z p(z) over [a, t]

  double loc_, spread_, a_, b_;
  double alpha_cdf_, mass_;
};

struct MonteCarloResult {
  int trials = 0;
  double empirical = 0.0;  // fraction of trials with utility loss <= eps
  double bound = 0.0;
  double slack = 0.0;      // 2 / sqrt(trials)
  double max_loss = 0.0;

  bool Dominates() const { return empirical >= bound - slack; }
};

// Mean estimation under the loss f(w, z) = L |w - z|: each trial draws n
// points from the truncated normal, plugs in the sample mean and measures
// its excess expected loss over the true minimizer (the median).
MonteCarloResult MonteCarloThm1(int trials, long long n, double eps, const BoundSpec& spec, Rng& rng);

struct BoundRow {
  long long n = 0;
  double eps = 0.0;
  double lipschitz = 0.0;
  int num_clients = 0;
  double xi = 0.0;
  int num_bases = 0;
  std::optional<double> bound;  // absent when infeasible
  std::optional<double> empirical;
};

// Columns: n,eps,L,K,xi,m,bound,empirical (empty cells for absent values).
void WriteBoundSweepCsv(std::ostream& out, std::span<const BoundRow> rows);

}  // namespace feddistr

#endif  // FEDDISTR_THEORY_H_
