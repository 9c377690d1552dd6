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

#include "feddistr/baseline.h"

#include <iostream>

namespace feddistr {

Classifier FedAvgRound(const Classifier& global, const std::vector<ClientShard>& shards, const TrainOptions& local,
                       Rng& rng, CommLedger* ledger) {
  if (shards.empty()) throw ConfigError("fedavg: no clients");
  Classifier sum = Classifier::Zeros(global.num_labels, global.dim);
  double total = 0.0;
  long long active = 0;
  for (const auto& shard : shards) {
    Rng client_rng(rng());
    if (shard.points.empty()) {
      std::clog << "warning: fedavg skips client " << shard.client_id << " with an empty shard\n";
      continue;
    }
    const TrainResult trained = LocalSgd(global, shard.points, local, client_rng);
    const double n = static_cast<double>(shard.points.size());
    for (int c = 0; c < sum.num_labels; ++c) {
      for (std::size_t j = 0; j <= sum.dim; ++j) sum.weights[c][j] += n * trained.model.weights[c][j];
    }
    total += n;
    ++active;
  }
  if (active == 0) throw ConfigError("fedavg: every shard is empty");
  for (auto& row : sum.weights) {
    for (double& w : row) w /= total;
  }
  if (ledger) {
    const auto count = static_cast<long long>(global.ParameterCount());
    ledger->rounds += 1;
    ledger->uplink_scalars += active * count;
    ledger->downlink_scalars += active * count;
  }
  return sum;
}

FedAvgResult RunFedAvg(const std::vector<ClientShard>& shards, std::span<const Example> test,
                       const FedAvgConfig& config, Rng& rng) {
  if (config.max_rounds < 1) throw ConfigError("fedavg: max_rounds must be at least 1");
  if (shards.empty() || shards.front().points.empty()) throw ConfigError("fedavg: no client data");
  FedAvgResult result;
  result.model = Classifier::Zeros(config.num_labels, shards.front().points.front().x.size());
  for (int round = 1; round <= config.max_rounds; ++round) {
    result.model = FedAvgRound(result.model, shards, config.local, rng, &result.ledger);
    const double acc = Evaluate(result.model, test).accuracy;
    result.round_accuracy.push_back(acc);
    if (!result.rounds_to_target && acc >= config.target_accuracy) {
      result.rounds_to_target = round;
      if (config.stop_at_target) break;
    }
  }
  return result;
}

CommLedger FedDistrLedger(const std::vector<UploadMessage>& uploads, std::span<const DistributionParameter> payload,
                          int num_clients) {
  CommLedger ledger;
  ledger.rounds = 1;
  for (const auto& u : uploads) ledger.uplink_scalars += u.ScalarCount();
  long long per_client = 0;
  for (const auto& p : payload) per_client += static_cast<long long>(p.v.size()) + 1;
  ledger.downlink_scalars = per_client * num_clients;
  return ledger;
}

void WriteRoundAccuracyCsv(std::ostream& out, std::span<const double> round_accuracy) {
  out << "round,accuracy\n";
  for (std::size_t r = 0; r < round_accuracy.size(); ++r) {
    out << r + 1 << ',' << FormatDouble(round_accuracy[r]) << '\n';
  }
}

void WriteLedgerCsv(std::ostream& out, const std::string& protocol, const CommLedger& ledger) {
  out << "protocol,rounds,uplink_scalars,downlink_scalars\n";
  out << protocol << ',' << ledger.rounds << ',' << ledger.uplink_scalars << ',' << ledger.downlink_scalars << '\n';
}

}  // namespace feddistr
