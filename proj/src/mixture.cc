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

#include "feddistr/mixture.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "feddistr/config.h"

namespace feddistr {

int MixtureSpec::num_labels() const {
  int max_label = -1;
  for (const auto& base : bases) max_label = std::max(max_label, base.label);
  return max_label + 1;
}

void MixtureSpec::Validate() const {
  if (bases.empty()) throw ConfigError("mixture: need at least one base distribution");
  if (global_weights.size() != bases.size()) {
    throw ConfigError("mixture: global_weights length " + std::to_string(global_weights.size()) +
                      " != number of bases " + std::to_string(bases.size()));
  }
  const std::size_t d = bases.front().mean.size();
  if (d == 0) throw ConfigError("mixture: zero-dimensional base");
  std::vector<int> ids;
  for (const auto& base : bases) {
    if (base.mean.size() != d || base.scale.size() != d) {
      throw ConfigError("mixture: base " + std::to_string(base.id) + " has inconsistent dimension");
    }
    for (double s : base.scale) {
      if (!(s > 0.0) || !std::isfinite(s)) {
        throw ConfigError("mixture: base " + std::to_string(base.id) + " has non-positive scale");
      }
    }
    if (base.label < 0) throw ConfigError("mixture: negative label");
    ids.push_back(base.id);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ConfigError("mixture: duplicate base id");
  }
  double total = 0.0;
  for (double w : global_weights) {
    if (!(w >= 0.0)) throw ConfigError("mixture: negative global weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("mixture: global weights do not sum to 1");
}

double EntangleCoeff(std::span<const double> pi_a, std::span<const double> pi_b) {
  if (pi_a.size() != pi_b.size()) throw InputError("entangle_coeff: length mismatch");
  const double na = Norm2(pi_a);
  const double nb = Norm2(pi_b);
  if (!(na > 0.0) || !(nb > 0.0)) throw DomainError("entangle_coeff: zero-norm weight vector");
  const double c = Dot(pi_a, pi_b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

EntanglementReport ReportEntanglement(const std::vector<ClientShard>& shards) {
  const std::size_t k = shards.size();
  if (k < 2) throw ConfigError("entanglement report needs at least two clients");
  EntanglementReport report;
  report.pairwise.assign(k, Vector(k, 0.0));
  double sum = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    EntangleCoeff(shards[a].pi, shards[a].pi);  // rejects zero-norm weights
    report.pairwise[a][a] = 1.0;
    for (std::size_t b = a + 1; b < k; ++b) {
      const double c = EntangleCoeff(shards[a].pi, shards[b].pi);
      report.pairwise[a][b] = c;
      report.pairwise[b][a] = c;
      sum += c;
      report.xi_max = std::max(report.xi_max, c);
    }
  }
  report.average = 2.0 * sum / static_cast<double>(k * (k - 1));
  return report;
}

namespace {

Example DrawFrom(const BaseDistribution& base, Rng& rng) {
  Example ex;
  ex.y = base.label;
  ex.x.resize(base.mean.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t j = 0; j < base.mean.size(); ++j) {
    ex.x[j] = base.mean[j] + base.scale[j] * normal(rng);
  }
  return ex;
}

}  // namespace

Dataset SampleMixture(const MixtureSpec& spec, std::size_t n, Rng& rng) {
  spec.Validate();
  if (n == 0) throw ConfigError("sample_mixture: n must be at least 1");
  std::discrete_distribution<std::size_t> pick(spec.global_weights.begin(),
                                               spec.global_weights.end());
  Dataset out;
  out.reserve(n);
  for (std::size_t t = 0; t < n; ++t) out.push_back(DrawFrom(spec.bases[pick(rng)], rng));
  return out;
}

ClientShard SampleShard(const MixtureSpec& spec, int client_id, const Vector& pi,
                        std::size_t n, Rng& rng) {
  spec.Validate();
  if (n == 0) throw ConfigError("shard size must be at least 1");
  if (pi.size() != spec.num_bases()) throw ConfigError("shard weights length mismatch");
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9 || std::any_of(pi.begin(), pi.end(), [](double w) { return w < 0; })) {
    throw ConfigError("shard weights must be a probability vector");
  }
  ClientShard shard;
  shard.client_id = client_id;
  shard.pi = pi;
  std::discrete_distribution<std::size_t> pick(pi.begin(), pi.end());
  shard.points.reserve(n);
  shard.base_assignment.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t i = pick(rng);
    shard.points.push_back(DrawFrom(spec.bases[i], rng));
    shard.base_assignment.push_back(spec.bases[i].id);
  }
  return shard;
}

std::vector<Vector> BlockLeakWeights(int num_bases, int num_clients, double leak) {
  const int block = num_bases / num_clients;
  const int others = num_bases - block;
  std::vector<Vector> out(num_clients, Vector(num_bases, 0.0));
  for (int k = 0; k < num_clients; ++k) {
    for (int i = 0; i < num_bases; ++i) {
      const bool own = i >= k * block && i < (k + 1) * block;
      if (own) {
        out[k][i] = (1.0 - leak) / block;
      } else if (others > 0) {
        out[k][i] = leak / others;
      }
    }
  }
  return out;
}

double SolveLeakMass(int num_bases, int num_clients, double xi_target) {
  if (num_clients < 1 || num_bases < num_clients) {
    throw ConfigError("partition: need m >= K >= 1 (m=" + std::to_string(num_bases) +
                      ", K=" + std::to_string(num_clients) + ")");
  }
  if (!(xi_target >= 0.0) || !(xi_target < 1.0)) {
    throw ConfigError("partition: xi_target must lie in [0, 1)");
  }
  if (xi_target == 0.0 || num_clients == 1) return 0.0;
  const int block = num_bases / num_clients;
  auto coeff = [&](double leak) {
    const auto w = BlockLeakWeights(num_bases, num_clients, leak);
    return EntangleCoeff(w[0], w[1]);
  };
  // At this leak every client is uniform and the coefficient reaches 1.
  double lo = 0.0;
  double hi = 1.0 - static_cast<double>(block) / num_bases;
  for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (coeff(mid) < xi_target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<ClientShard> PartitionForXi(int num_bases, int num_clients, double xi_target,
                                        std::size_t n_per_client, const MixtureSpec& spec,
                                        Rng& rng) {
  if (static_cast<std::size_t>(num_bases) != spec.num_bases()) {
    throw ConfigError("partition: m does not match the mixture");
  }
  const double leak = SolveLeakMass(num_bases, num_clients, xi_target);
  const auto weights = BlockLeakWeights(num_bases, num_clients, leak);
  std::vector<ClientShard> shards;
  shards.reserve(num_clients);
  for (int k = 0; k < num_clients; ++k) {
    shards.push_back(SampleShard(spec, k, weights[k], n_per_client, rng));
  }
  return shards;
}

Vector PooledWeights(const std::vector<ClientShard>& shards) {
  if (shards.empty()) throw InputError("pooled weights of zero shards");
  Vector out(shards.front().pi.size(), 0.0);
  double total = 0.0;
  for (const auto& shard : shards) {
    if (shard.pi.size() != out.size()) throw InputError("shards disagree on number of bases");
    const double n = static_cast<double>(shard.points.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += n * shard.pi[i];
    total += n;
  }
  if (!(total > 0.0)) throw InputError("pooled weights of empty shards");
  for (double& w : out) w /= total;
  return out;
}

MixtureSpec MakeBenchmarkSpec(const BenchmarkOptions& options, Rng& rng) {
  if (options.num_bases < 1 || options.dim < 1 || options.num_labels < 1) {
    throw ConfigError("benchmark: m, d and num_labels must be positive");
  }
  if (!(options.scale > 0.0)) throw ConfigError("benchmark: scale must be positive");
  std::uniform_real_distribution<double> coord(-options.mean_spread, options.mean_spread);
  MixtureSpec spec;
  constexpr int kMaxAttempts = 10000;
  for (int i = 0; i < options.num_bases; ++i) {
    BaseDistribution base;
    base.id = i;
    base.label = i % options.num_labels;
    base.scale.assign(options.dim, options.scale);
    int attempt = 0;
    while (true) {
      base.mean.resize(options.dim);
      for (double& v : base.mean) v = coord(rng);
      const bool separated = std::all_of(spec.bases.begin(), spec.bases.end(), [&](const auto& other) {
        return Distance(other.mean, base.mean) >= options.min_separation;
      });
      if (separated) break;
      if (++attempt >= kMaxAttempts) {
        throw ConfigError("benchmark: cannot place means with the requested separation");
      }
    }
    spec.bases.push_back(std::move(base));
  }
  spec.global_weights.assign(options.num_bases, 1.0 / options.num_bases);
  return spec;
}

void WriteShardsCsv(std::ostream& out, const std::vector<ClientShard>& shards) {
  const std::size_t d = shards.empty() || shards.front().points.empty()
                            ? 0
                            : shards.front().points.front().x.size();
  out << "client_id,base_id,label";
  for (std::size_t j = 0; j < d; ++j) out << ",x_" << j;
  out << '\n';
  for (const auto& shard : shards) {
    for (std::size_t t = 0; t < shard.points.size(); ++t) {
      const auto& ex = shard.points[t];
      out << shard.client_id << ',' << shard.base_assignment[t] << ',' << ex.y;
      for (double v : ex.x) out << ',' << FormatDouble(v);
      out << '\n';
    }
  }
}

namespace {

std::string JoinVector(const Vector& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += FormatDouble(v[i]);
  }
  return s;
}

}  // namespace

std::string SerializeMixtureSpec(const MixtureSpec& spec) {
  std::ostringstream out;
  out << "[mixture]\n";
  out << "num_bases = " << spec.num_bases() << '\n';
  out << "weights = " << JoinVector(spec.global_weights) << '\n';
  for (std::size_t i = 0; i < spec.bases.size(); ++i) {
    const auto& base = spec.bases[i];
    out << "\n[base." << i << "]\n";
    out << "id = " << base.id << '\n';
    out << "label = " << base.label << '\n';
    out << "mean = " << JoinVector(base.mean) << '\n';
    out << "scale = " << JoinVector(base.scale) << '\n';
  }
  return out.str();
}

MixtureSpec ParseMixtureSpec(const std::string& text) {
  const auto file = KeyValueFile::Parse(text);
  const long long m = file.GetInt("mixture.num_bases", -1);
  if (m < 1) throw ConfigError("mixture.num_bases: must be at least 1");
  MixtureSpec spec;
  spec.global_weights = file.GetVector("mixture.weights");
  for (long long i = 0; i < m; ++i) {
    const std::string prefix = "base." + std::to_string(i) + ".";
    BaseDistribution base;
    base.id = static_cast<int>(file.GetInt(prefix + "id", i));
    base.label = static_cast<int>(file.GetInt(prefix + "label", -1));
    base.mean = file.GetVector(prefix + "mean");
    base.scale = file.GetVector(prefix + "scale");
    spec.bases.push_back(std::move(base));
  }
  if (const auto extra = file.UnconsumedKeys(); !extra.empty()) {
    throw ConfigError("mixture: unknown key '" + extra.front() + "'");
  }
  spec.Validate();
  return spec;
}

}  // namespace feddistr
