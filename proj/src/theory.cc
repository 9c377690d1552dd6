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

#include "feddistr/theory.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <thread>

namespace feddistr {

namespace {

double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double SmallPhi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double Clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

long long BoundSpec::MinClientSize() const {
  if (client_sizes.empty()) return n;
  return *std::min_element(client_sizes.begin(), client_sizes.end());
}

void BoundSpec::Validate() const {
  if (n < 1) throw InputError("bound: n must be at least 1");
  for (long long s : client_sizes) {
    if (s < 1) throw InputError("bound: client sizes must be at least 1");
  }
  if (!(eps > 0.0)) throw InputError("bound: eps must be positive");
  if (!(lipschitz > 0.0)) throw InputError("bound: L must be positive");
  if (!(a < b)) throw InputError("bound: need a < b");
  if (!(xi >= 0.0)) throw InputError("bound: xi must be non-negative");
  if (num_clients < 1) throw InputError("bound: K must be at least 1");
  if (num_bases < 1) throw InputError("bound: m must be at least 1");
  if (!(spread > 0.0)) throw InputError("bound: spread must be positive");
}

double HoeffdingTail(long long n, double eps, double a, double b) {
  if (n < 1) throw InputError("hoeffding: n must be at least 1");
  if (!(eps > 0.0)) throw InputError("hoeffding: eps must be positive");
  if (!(b > a)) throw InputError("hoeffding: need b > a");
  const double width = b - a;
  return Clamp01(std::exp(-2.0 * static_cast<double>(n) * eps * eps / (width * width)));
}

double Thm1Bound(long long n_min, double eps, double lipschitz) {
  if (n_min < 1) throw InputError("thm1: n_min must be at least 1");
  if (!(eps > 0.0)) throw InputError("thm1: eps must be positive");
  if (!(lipschitz > 0.0)) throw InputError("thm1: L must be positive");
  return Clamp01(1.0 - std::exp(-static_cast<double>(n_min) * eps * eps / (2.0 * lipschitz * lipschitz)));
}

double NearDisentangledThreshold(int num_clients) {
  if (num_clients < 2) throw InputError("near-disentangled threshold needs K >= 2");
  const double k1 = num_clients - 1;
  return 1.0 / (k1 * k1);
}

std::optional<double> Thm2Bound(long long n, double eps, double lipschitz, int num_clients, double xi,
                                int num_bases) {
  if (num_bases < 1) throw InputError("thm2: m must be at least 1");
  if (n < 1) throw InputError("thm2: n must be at least 1");
  if (!(eps > 0.0)) throw InputError("thm2: eps must be positive");
  if (!(lipschitz > 0.0)) throw InputError("thm2: L must be positive");
  if (!(xi >= 0.0)) throw InputError("thm2: xi must be non-negative");
  if (xi >= NearDisentangledThreshold(num_clients)) return std::nullopt;
  const double share = 1.0 - (num_clients - 1) * std::sqrt(xi);
  return Clamp01(1.0 - std::exp(-share * static_cast<double>(n) * eps * eps /
                                (2.0 * num_bases * lipschitz * lipschitz)));
}

bool Lemma3Check(const std::vector<Vector>& vectors, double xi) {
  const int k = static_cast<int>(vectors.size());
  if (k < 2) throw InputError("lemma3: need at least two vectors");
  if (!(xi >= 0.0) || xi >= NearDisentangledThreshold(k)) {
    throw InputError("lemma3: xi must lie in [0, 1/(K-1)^2)");
  }
  const std::size_t m = vectors.front().size();
  if (m == 0) throw InputError("lemma3: empty vectors");
  for (const auto& v : vectors) {
    if (v.size() != m) throw InputError("lemma3: vectors differ in length");
    for (double x : v) {
      if (!(x >= 0.0)) throw InputError("lemma3: entries must be non-negative");
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    double total = 0.0;
    for (const auto& v : vectors) total += v[i];
    if (std::abs(total - 1.0) > 1e-6) {
      throw InputError("lemma3: coordinate " + std::to_string(i) + " does not sum to 1 across vectors");
    }
  }
  for (int p = 0; p < k; ++p) {
    for (int q = p + 1; q < k; ++q) {
      if (Dot(vectors[p], vectors[q]) > xi) throw InputError("lemma3: an inner product exceeds xi");
    }
  }
  const double floor = 1.0 - (k - 1) * std::sqrt(xi);
  for (std::size_t i = 0; i < m; ++i) {
    double top = 0.0;
    for (const auto& v : vectors) top = std::max(top, v[i]);
    if (top < floor) return false;
  }
  return true;
}

TruncatedNormal::TruncatedNormal(double loc, double spread, double a, double b)
    : loc_(loc), spread_(spread), a_(a), b_(b) {
  if (!(spread > 0.0)) throw InputError("truncated normal: spread must be positive");
  if (!(a < b)) throw InputError("truncated normal: need a < b");
  alpha_cdf_ = Phi((a - loc) / spread);
  mass_ = Phi((b - loc) / spread) - alpha_cdf_;
  if (!(mass_ > 1e-3)) throw InputError("truncated normal: interval carries too little mass");
}

double TruncatedNormal::Cdf(double t) const {
  if (t <= a_) return 0.0;
  if (t >= b_) return 1.0;
  return (Phi((t - loc_) / spread_) - alpha_cdf_) / mass_;
}

double TruncatedNormal::Pdf(double t) const {
  if (t < a_ || t > b_) return 0.0;
  return SmallPhi((t - loc_) / spread_) / (spread_ * mass_);
}

double TruncatedNormal::PartialMean(double t) const {
  t = std::clamp(t, a_, b_);
  const double za = (a_ - loc_) / spread_;
  const double zt = (t - loc_) / spread_;
  return (loc_ * (Phi(zt) - alpha_cdf_) - spread_ * (SmallPhi(zt) - SmallPhi(za))) / mass_;
}

double TruncatedNormal::Mean() const { return PartialMean(b_); }

double TruncatedNormal::Median() const {
  double lo = a_, hi = b_;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (Cdf(mid) < 0.5 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double TruncatedNormal::ExpectedAbsDeviation(double w) const {
  const double mean = Mean();
  if (w <= a_) return mean - w;
  if (w >= b_) return w - mean;
  const double f = Cdf(w);
  const double g = PartialMean(w);
  return w * f - g + (mean - g) - w * (1.0 - f);
}

double TruncatedNormal::Sample(Rng& rng) const {
  std::normal_distribution<double> normal(loc_, spread_);
  while (true) {
    const double x = normal(rng);
    if (x >= a_ && x <= b_) return x;
  }
}

MonteCarloResult MonteCarloThm1(int trials, long long n, double eps, const BoundSpec& spec, Rng& rng) {
  if (trials < 100) throw InputError("monte carlo: need at least 100 trials");
  if (n < 1) throw InputError("monte carlo: n must be at least 1");
  BoundSpec checked = spec;
  checked.n = n;
  checked.eps = eps;
  checked.Validate();

  const TruncatedNormal dist(spec.loc, spec.spread, spec.a, spec.b);
  const double optimum = dist.ExpectedAbsDeviation(dist.Median());
  const std::uint64_t base_seed = rng();

  std::vector<double> losses(trials);
  auto run_range = [&](int begin, int end) {
    for (int t = begin; t < end; ++t) {
      Rng trial_rng(DeriveSeed(base_seed, static_cast<std::uint64_t>(t)));
      double sum = 0.0;
      for (long long i = 0; i < n; ++i) sum += dist.Sample(trial_rng);
      const double estimate = sum / static_cast<double>(n);
      losses[t] = spec.lipschitz * (dist.ExpectedAbsDeviation(estimate) - optimum);
    }
  };
  const int workers = std::clamp<int>(static_cast<int>(std::thread::hardware_concurrency()), 1, 8);
  if (workers == 1) {
    run_range(0, trials);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (trials + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(trials, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  MonteCarloResult result;
  result.trials = trials;
  int hits = 0;
  for (double loss : losses) {
    if (loss <= eps) ++hits;
    result.max_loss = std::max(result.max_loss, loss);
  }
  result.empirical = static_cast<double>(hits) / trials;
  result.bound = Thm1Bound(n, eps, spec.lipschitz);
  result.slack = 2.0 / std::sqrt(static_cast<double>(trials));
  return result;
}

void WriteBoundSweepCsv(std::ostream& out, std::span<const BoundRow> rows) {
  out << "n,eps,L,K,xi,m,bound,empirical\n";
  for (const auto& r : rows) {
    out << r.n << ',' << FormatDouble(r.eps) << ',' << FormatDouble(r.lipschitz) << ',' << r.num_clients << ','
        << FormatDouble(r.xi) << ',' << r.num_bases << ',' << (r.bound ? FormatDouble(*r.bound) : "") << ','
        << (r.empirical ? FormatDouble(*r.empirical) : "") << '\n';
  }
}

}  // namespace feddistr
