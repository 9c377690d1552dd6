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

#ifndef FEDDISTR_BASELINE_H_
#define FEDDISTR_BASELINE_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "feddistr/client.h"
#include "feddistr/downstream.h"
#include "feddistr/mixture.h"

namespace feddistr {

// Communication accounting in scalars (one double or one count each).
struct CommLedger {
  long long rounds = 0;
  long long uplink_scalars = 0;
  long long downlink_scalars = 0;
};

// One FedAvg round: every client starts from `global`, runs
// `local.epochs` epochs of SGD on its shard and the server returns the
// n_k-weighted average. Empty shards are skipped with a warning.
Classifier FedAvgRound(const Classifier& global, const std::vector<ClientShard>& shards, const TrainOptions& local,
                       Rng& rng, CommLedger* ledger = nullptr);

struct FedAvgConfig {
  int num_labels = 2;
  TrainOptions local;  // local.epochs is the number of local epochs per round
  double target_accuracy = 1.0;
  int max_rounds = 100;
  bool stop_at_target = true;
};

struct FedAvgResult {
  Classifier model;
  CommLedger ledger;
  std::optional<int> rounds_to_target;
  std::vector<double> round_accuracy;  // held-out accuracy after each round
};

FedAvgResult RunFedAvg(const std::vector<ClientShard>& shards, std::span<const Example> test,
                       const FedAvgConfig& config, Rng& rng);

// The one-round FedDistr exchange: every upload once, the payload once to
// each of `num_clients` clients.
CommLedger FedDistrLedger(const std::vector<UploadMessage>& uploads, std::span<const DistributionParameter> payload,
                          int num_clients);

// Columns: round,accuracy
void WriteRoundAccuracyCsv(std::ostream& out, std::span<const double> round_accuracy);
// Columns: protocol,rounds,uplink_scalars,downlink_scalars
void WriteLedgerCsv(std::ostream& out, const std::string& protocol, const CommLedger& ledger);

}  // namespace feddistr

#endif  // FEDDISTR_BASELINE_H_
