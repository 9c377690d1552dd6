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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "feddistr/harness.h"
#include "feddistr/mixture.h"
#include "feddistr/theory.h"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::string mode;
};

void AddCommonFlags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Config file (key = value with [sections])");
  cmd->add_option("--seed", flags.seed, "Seed; overrides run.seed");
  cmd->add_option("--out", flags.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--mode", flags.mode, "feddistr | fedavg | theory | sweep");
}

feddistr::RunConfig Resolve(const CommonFlags& flags) {
  feddistr::RunConfig config =
      flags.config_path.empty() ? feddistr::ParseRunConfig(feddistr::KeyValueFile::Parse(""))
                                : feddistr::LoadRunConfig(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (!flags.mode.empty()) config.mode = feddistr::ParseRunMode(flags.mode);
  return config;
}

std::ofstream OpenOut(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream f(std::filesystem::path(dir) / name);
  if (!f) throw feddistr::ConfigError("cannot write into '" + dir + "'");
  return f;
}

int Gen(const CommonFlags& flags) {
  const auto config = Resolve(flags);
  config.Validate();
  const auto bench = feddistr::BuildBenchmark(config);
  auto shards = OpenOut(flags.out_dir, "shards.csv");
  feddistr::WriteShardsCsv(shards, bench.shards);
  auto mixture = OpenOut(flags.out_dir, "mixture.txt");
  mixture << feddistr::SerializeMixtureSpec(bench.spec);
  const auto report = bench.shards.size() >= 2 ? feddistr::ReportEntanglement(bench.shards)
                                               : feddistr::EntanglementReport{};
  std::cout << "wrote " << bench.shards.size() << " shards; realized xi avg=" << report.average
            << " max=" << report.xi_max << '\n';
  return 0;
}

int RunCmd(const CommonFlags& flags) {
  auto config = Resolve(flags);
  if (config.mode == feddistr::RunMode::kSweep || config.mode == feddistr::RunMode::kTheory) {
    throw feddistr::ConfigError("run: use the '" + feddistr::RunModeName(config.mode) + "' subcommand");
  }
  const auto outcome = feddistr::Run(config);
  feddistr::WriteRunOutputs(flags.out_dir, outcome);
  const auto& m = outcome.metrics;
  std::cout << m.mode << ": mean accuracy " << m.mean_accuracy << " (oracle " << m.oracle_accuracy << "), rounds "
            << m.ledger.rounds << ", uplink scalars " << m.ledger.uplink_scalars << ", wall time "
            << m.wall_time_s << " s\n";
  return 0;
}

int SweepCmd(const CommonFlags& flags) {
  const auto config = Resolve(flags);
  const auto rows = feddistr::Sweep(config);
  auto f = OpenOut(flags.out_dir, "sweep.csv");
  feddistr::WriteMetricsCsv(f, rows);
  int failed = 0;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      ++failed;
      std::cerr << "cell " << r.mode << " xi=" << r.xi_target << " failed: " << r.error << '\n';
    }
  }
  std::cout << "sweep: " << rows.size() << " rows, " << failed << " failed\n";
  return failed == 0 ? 0 : 1;
}

int TheoryCmd(const CommonFlags& flags) {
  const auto config = Resolve(flags);
  config.Validate();
  const auto rows = feddistr::TheorySweep(config);
  auto f = OpenOut(flags.out_dir, "bounds.csv");
  feddistr::WriteBoundSweepCsv(f, rows);
  std::cout << "theory: " << rows.size() << " rows\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FedDistr one-round federated learning simulator"};
  app.require_subcommand(1);
  CommonFlags flags;
  auto* gen = app.add_subcommand("gen", "Generate client shards as CSV");
  auto* run = app.add_subcommand("run", "Run one FedDistr or FedAvg simulation");
  auto* sweep = app.add_subcommand("sweep", "Run the entanglement x mode grid");
  auto* theory = app.add_subcommand("theory", "Evaluate and Monte Carlo check the utility bounds");
  for (auto* cmd : {gen, run, sweep, theory}) AddCommonFlags(cmd, flags);

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return Gen(flags);
    if (run->parsed()) return RunCmd(flags);
    if (sweep->parsed()) return SweepCmd(flags);
    if (theory->parsed()) return TheoryCmd(flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
