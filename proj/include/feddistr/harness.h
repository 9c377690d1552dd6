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

#ifndef FEDDISTR_HARNESS_H_
#define FEDDISTR_HARNESS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "feddistr/baseline.h"
#include "feddistr/client.h"
#include "feddistr/config.h"
#include "feddistr/downstream.h"
#include "feddistr/mixture.h"
#include "feddistr/server.h"
#include "feddistr/theory.h"

namespace feddistr {

enum class RunMode { kFedDistr, kFedAvg, kTheory, kSweep };

RunMode ParseRunMode(const std::string& text);
std::string RunModeName(RunMode mode);

struct RunConfig {
  RunMode mode = RunMode::kFedDistr;
  std::optional<std::uint64_t> seed;

  // data
  int num_clients = 5;
  int num_bases = 10;
  int dim = 8;
  int num_labels = 5;
  std::size_t n_per_client = 2000;
  std::size_t n_test = 2000;
  double xi_target = 0.0;
  double mean_spread = 3.0;
  double base_scale = 1.0;
  double min_separation = 0.0;

  // client
  std::string mk_mode = "1";  // positive integer, "auto", or "truth"
  double clip_bound = 100.0;
  double sigma = 0.0;
  int latent_dim = 0;  // 0 keeps the identity encoder

  // server
  std::optional<double> tau;

  // downstream training
  int epochs = 20;
  double learning_rate = 0.1;
  std::size_t batch_size = 64;
  std::size_t generation_budget = 0;

  // fedavg
  int local_epochs = 1;
  int max_rounds = 100;
  std::optional<double> target_accuracy;  // default: FedDistr accuracy on the same config

  // privacy reporting
  double delta = 1e-5;

  // sweep
  std::vector<double> sweep_xi = {0.0, 0.003, 0.057};
  std::vector<RunMode> sweep_modes = {RunMode::kFedDistr, RunMode::kFedAvg};

  // theory
  std::vector<long long> theory_n = {10, 100, 1000};
  std::vector<double> theory_eps = {0.05, 0.1, 0.2};
  int theory_trials = 1000;
  double lipschitz = 1.0;

  // Throws ConfigError naming the offending field.
  void Validate() const;
  std::uint64_t RequireSeed() const;
};

// Reads a sectioned key=value config. Unknown keys are rejected.
RunConfig ParseRunConfig(const KeyValueFile& file);
RunConfig LoadRunConfig(const std::string& path);

struct RunMetrics {
  std::string mode;
  std::uint64_t seed = 0;
  double xi_target = 0.0;
  double realized_xi_avg = 0.0;
  double realized_xi_max = 0.0;
  int num_clients = 0;
  std::vector<double> client_accuracy;
  double mean_accuracy = 0.0;
  double utility_loss = 0.0;  // 1 - mean accuracy
  double eps_u = 0.0;         // mean test-loss gap to the centralized model
  double oracle_accuracy = 0.0;
  CommLedger ledger;
  std::optional<int> rounds_to_target;
  std::optional<double> target_accuracy;
  int num_groups = 0;
  int num_parallel_groups = 0;
  int payload_size = 0;
  double clip_bound = 0.0;
  double sigma = 0.0;
  double dp_epsilon = 0.0;
  double delta = 0.0;
  std::string error;
  double wall_time_s = 0.0;  // never written to the metrics CSV
};

// Single-release Gaussian mechanism: sqrt(2 ln(1.25/delta)) / sigma
// (infinite for sigma = 0).
double GaussianMechanismEpsilon(double sigma, double delta);

// Everything one run produced, for the CSV writers.
struct RunOutcome {
  RunMetrics metrics;
  MixtureSpec spec;
  std::vector<ClientShard> shards;
  std::vector<ClientRun> clients;
  AlignmentResult alignment;
  std::vector<TrainResult> client_models;
  TrainResult oracle;
  FedAvgResult fedavg;
};

// Deterministic per seed. Supports feddistr and fedavg modes.
RunOutcome Run(const RunConfig& config);

// Builds mixture, shards and the pooled-distribution test set exactly as
// Run does.
struct Benchmark {
  MixtureSpec spec;
  std::vector<ClientShard> shards;
  Dataset test;
};
Benchmark BuildBenchmark(const RunConfig& config);

// One row per (xi, mode) cell in grid order; failing cells carry `error`.
std::vector<RunMetrics> Sweep(const RunConfig& config);

// Header plus one row per metrics record.
void WriteMetricsCsv(std::ostream& out, const std::vector<RunMetrics>& rows);
std::vector<RunMetrics> ParseMetricsCsv(const std::string& text);
std::string MetricsCsvHeader();

// Theory mode: Monte Carlo over theory_n x theory_eps, plus near-disentangled bound rows.
std::vector<BoundRow> TheorySweep(const RunConfig& config);

// Writes metrics.csv and the mode's artifacts into `dir`.
void WriteRunOutputs(const std::string& dir, const RunOutcome& outcome);

// Latent points with their cluster and true base. Columns:
// client_id,source_index,label,base_id,cluster,z_0..
void WriteEmbeddingsCsv(std::ostream& out, const std::vector<ClientShard>& shards,
                        const std::vector<ClientRun>& clients);

// Adjusted Rand index between two labelings of the same items.
double AdjustedRandIndex(std::span<const int> a, std::span<const int> b);

struct AlignmentRecovery {
  int num_groups = 0;
  double param_ari = 0.0;  // groups vs the majority true base of each parameter
  double point_ari = 0.0;  // group of each point's cluster vs its true base
};
AlignmentRecovery EvaluateAlignment(const std::vector<ClientShard>& shards, const std::vector<ClientRun>& clients,
                                    const AlignmentResult& alignment);

}  // namespace feddistr

#endif  // FEDDISTR_HARNESS_H_
