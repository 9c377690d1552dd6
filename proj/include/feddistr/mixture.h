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

#ifndef FEDDISTR_MIXTURE_H_
#define FEDDISTR_MIXTURE_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "feddistr/common.h"

namespace feddistr {

// One labeled, axis-aligned Gaussian component of the global mixture.
struct BaseDistribution {
  int id = 0;
  int label = 0;
  Vector mean;
  Vector scale;  // per-axis standard deviation, strictly positive
};

struct MixtureSpec {
  std::vector<BaseDistribution> bases;
  Vector global_weights;

  std::size_t num_bases() const { return bases.size(); }
  std::size_t dim() const { return bases.empty() ? 0 : bases.front().mean.size(); }
  int num_labels() const;

  // Throws ConfigError naming the first violated invariant.
  void Validate() const;
};

// A client's private data. `base_assignment` is ground truth for evaluation
// and never leaves the client.
struct ClientShard {
  int client_id = 0;
  Dataset points;
  Vector pi;
  std::vector<int> base_assignment;
};

struct EntanglementReport {
  std::vector<Vector> pairwise;
  double average = 0.0;
  double xi_max = 0.0;
};

// Cosine similarity of two mixture-weight vectors. Throws DomainError when
// either vector has zero norm.
double EntangleCoeff(std::span<const double> pi_a, std::span<const double> pi_b);

// Requires at least two shards with equal-length weight vectors.
EntanglementReport ReportEntanglement(const std::vector<ClientShard>& shards);

// n i.i.d. draws from the mixture, component chosen by global_weights.
Dataset SampleMixture(const MixtureSpec& spec, std::size_t n, Rng& rng);

// n draws from the mixture reweighted by `pi`, recording the true base.
ClientShard SampleShard(const MixtureSpec& spec, int client_id, const Vector& pi,
                        std::size_t n, Rng& rng);

// Leak mass that makes every pairwise coefficient equal `xi_target` under the
// dominant-block construction used by PartitionForXi.
double SolveLeakMass(int num_bases, int num_clients, double xi_target);

// Client weight vectors of the dominant-block construction for a leak mass.
std::vector<Vector> BlockLeakWeights(int num_bases, int num_clients, double leak);

// Builds `num_clients` shards whose pairwise entanglement hits `xi_target`.
// Each client owns a disjoint block of floor(m/K) bases carrying 1-delta of
// its mass; delta is spread uniformly over the remaining bases.
std::vector<ClientShard> PartitionForXi(int num_bases, int num_clients, double xi_target,
                                        std::size_t n_per_client, const MixtureSpec& spec,
                                        Rng& rng);

// n_k-weighted average of the client weight vectors: the mixture the pooled
// data is drawn from.
Vector PooledWeights(const std::vector<ClientShard>& shards);

struct BenchmarkOptions {
  int num_bases = 10;
  int dim = 8;
  int num_labels = 5;
  double mean_spread = 8.0;  // means uniform in [-spread, spread]^d
  double scale = 1.0;
  // Minimum Euclidean distance between any two means; 0 disables the check.
  double min_separation = 0.0;
};

// Random benchmark mixture. Base i carries label i % num_labels and the
// global weights are uniform.
MixtureSpec MakeBenchmarkSpec(const BenchmarkOptions& options, Rng& rng);

// Columns: client_id, base_id, label, x_0..x_{d-1}.
void WriteShardsCsv(std::ostream& out, const std::vector<ClientShard>& shards);

// Flat key=value text; see README for the key layout.
std::string SerializeMixtureSpec(const MixtureSpec& spec);
MixtureSpec ParseMixtureSpec(const std::string& text);

}  // namespace feddistr

#endif  // FEDDISTR_MIXTURE_H_
