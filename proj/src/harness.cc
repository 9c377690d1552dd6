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

#include "feddistr/harness.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include "feddistr/theory.h"

namespace feddistr {

namespace {

enum Stream : std::uint64_t {
  kSpecStream = 1,
  kShardStream = 2,
  kTestStream = 3,
  kEncoderStream = 4,
  kOracleStream = 5,
  kFedAvgStream = 6,
  kUploadStream = 100,
  kDownstreamStream = 1000,
};

template <typename T>
std::vector<T> ParseList(const std::string& key, const std::string& text, T (*parse)(std::string_view)) {
  std::vector<T> out;
  for (const auto field : SplitFields(text)) {
    try {
      out.push_back(parse(field));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("'" + key + "': " + e.what());
    }
  }
  return out;
}

double ParseDoubleField(std::string_view s) { return ParseDouble(s); }
long long ParseIntField(std::string_view s) { return ParseInt(s); }
RunMode ParseModeField(std::string_view s) { return ParseRunMode(std::string(Trim(s))); }

std::string Sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

RunMode ParseRunMode(const std::string& text) {
  if (text == "feddistr") return RunMode::kFedDistr;
  if (text == "fedavg") return RunMode::kFedAvg;
  if (text == "theory") return RunMode::kTheory;
  if (text == "sweep") return RunMode::kSweep;
  throw ConfigError("mode: expected feddistr, fedavg, theory or sweep, got '" + text + "'");
}

std::string RunModeName(RunMode mode) {
  switch (mode) {
    case RunMode::kFedDistr:
      return "feddistr";
    case RunMode::kFedAvg:
      return "fedavg";
    case RunMode::kTheory:
      return "theory";
    case RunMode::kSweep:
      return "sweep";
  }
  return "unknown";
}

void RunConfig::Validate() const {
  auto positive = [](bool ok, const char* field) {
    if (!ok) throw ConfigError(std::string(field) + ": must be at least 1");
  };
  positive(num_clients >= 1, "data.clients");
  positive(num_bases >= 1, "data.bases");
  positive(dim >= 1, "data.dim");
  if (num_labels < 2) throw ConfigError("data.labels: must be at least 2");
  positive(n_per_client >= 1, "data.n_per_client");
  positive(n_test >= 1, "data.n_test");
  positive(epochs >= 1, "train.epochs");
  positive(batch_size >= 1, "train.batch");
  positive(local_epochs >= 1, "fedavg.local_epochs");
  positive(max_rounds >= 1, "fedavg.max_rounds");
  positive(theory_trials >= 1, "theory.trials");
  if (num_bases < num_clients) throw ConfigError("data.bases: must be at least data.clients");
  if (!(xi_target >= 0.0 && xi_target < 1.0)) throw ConfigError("data.xi: must lie in [0, 1)");
  if (!(base_scale > 0.0)) throw ConfigError("data.scale: must be positive");
  if (!(clip_bound > 0.0)) throw ConfigError("client.clip: must be positive");
  if (!(sigma >= 0.0)) throw ConfigError("client.sigma: must be non-negative");
  if (latent_dim < 0 || latent_dim > dim) throw ConfigError("client.latent_dim: must lie in [0, data.dim]");
  if (tau && !(*tau >= 0.0)) throw ConfigError("server.tau: must be non-negative");
  if (!(learning_rate > 0.0)) throw ConfigError("train.lr: must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("privacy.delta: must lie in (0, 1)");
  if (!(lipschitz > 0.0)) throw ConfigError("theory.L: must be positive");
  if (mk_mode != "auto" && mk_mode != "truth") {
    long long k = 0;
    try {
      k = ParseInt(mk_mode);
    } catch (const InputError&) {
      throw ConfigError("client.m_k: expected a positive integer, 'auto' or 'truth'");
    }
    if (k < 1) throw ConfigError("client.m_k: must be at least 1");
  }
  if (!seed) throw ConfigError("run.seed: a seed is mandatory");
}

std::uint64_t RunConfig::RequireSeed() const {
  if (!seed) throw ConfigError("run.seed: a seed is mandatory");
  return *seed;
}

RunConfig ParseRunConfig(const KeyValueFile& file) {
  RunConfig c;
  c.mode = ParseRunMode(file.GetString("run.mode", RunModeName(c.mode)));
  if (const auto s = file.Get("run.seed")) {
    try {
      c.seed = static_cast<std::uint64_t>(ParseInt(*s));
    } catch (const InputError&) {
      throw ConfigError("run.seed: expected an integer");
    }
  }
  c.num_clients = static_cast<int>(file.GetInt("data.clients", c.num_clients));
  c.num_bases = static_cast<int>(file.GetInt("data.bases", c.num_bases));
  c.dim = static_cast<int>(file.GetInt("data.dim", c.dim));
  c.num_labels = static_cast<int>(file.GetInt("data.labels", c.num_labels));
  const long long n = file.GetInt("data.n_per_client", static_cast<long long>(c.n_per_client));
  const long long n_test = file.GetInt("data.n_test", static_cast<long long>(c.n_test));
  if (n < 1) throw ConfigError("data.n_per_client: must be at least 1");
  if (n_test < 1) throw ConfigError("data.n_test: must be at least 1");
  c.n_per_client = static_cast<std::size_t>(n);
  c.n_test = static_cast<std::size_t>(n_test);
  c.xi_target = file.GetDouble("data.xi", c.xi_target);
  c.mean_spread = file.GetDouble("data.mean_spread", c.mean_spread);
  c.base_scale = file.GetDouble("data.scale", c.base_scale);
  c.min_separation = file.GetDouble("data.min_separation", c.min_separation);

  c.mk_mode = file.GetString("client.m_k", c.mk_mode);
  c.clip_bound = file.GetDouble("client.clip", c.clip_bound);
  c.sigma = file.GetDouble("client.sigma", c.sigma);
  c.latent_dim = static_cast<int>(file.GetInt("client.latent_dim", c.latent_dim));

  c.tau = file.GetOptionalDouble("server.tau");

  c.epochs = static_cast<int>(file.GetInt("train.epochs", c.epochs));
  c.learning_rate = file.GetDouble("train.lr", c.learning_rate);
  const long long batch = file.GetInt("train.batch", static_cast<long long>(c.batch_size));
  const long long budget = file.GetInt("train.budget", 0);
  if (batch < 1) throw ConfigError("train.batch: must be at least 1");
  if (budget < 0) throw ConfigError("train.budget: must be non-negative");
  c.batch_size = static_cast<std::size_t>(batch);
  c.generation_budget = static_cast<std::size_t>(budget);

  c.local_epochs = static_cast<int>(file.GetInt("fedavg.local_epochs", c.local_epochs));
  c.max_rounds = static_cast<int>(file.GetInt("fedavg.max_rounds", c.max_rounds));
  c.target_accuracy = file.GetOptionalDouble("fedavg.target");

  c.delta = file.GetDouble("privacy.delta", c.delta);

  if (const auto v = file.Get("sweep.xi")) c.sweep_xi = ParseList<double>("sweep.xi", *v, ParseDoubleField);
  if (const auto v = file.Get("sweep.modes")) {
    c.sweep_modes = ParseList<RunMode>("sweep.modes", *v, ParseModeField);
  }
  if (const auto v = file.Get("theory.n")) c.theory_n = ParseList<long long>("theory.n", *v, ParseIntField);
  if (const auto v = file.Get("theory.eps")) c.theory_eps = ParseList<double>("theory.eps", *v, ParseDoubleField);
  c.theory_trials = static_cast<int>(file.GetInt("theory.trials", c.theory_trials));
  c.lipschitz = file.GetDouble("theory.L", c.lipschitz);

  if (const auto extra = file.UnconsumedKeys(); !extra.empty()) {
    throw ConfigError("unknown config key '" + extra.front() + "'");
  }
  return c;
}

RunConfig LoadRunConfig(const std::string& path) { return ParseRunConfig(KeyValueFile::Load(path)); }

double GaussianMechanismEpsilon(double sigma, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("privacy.delta: must lie in (0, 1)");
  if (!(sigma > 0.0)) return INFINITY;
  return std::sqrt(2.0 * std::log(1.25 / delta)) / sigma;
}

Benchmark BuildBenchmark(const RunConfig& config) {
  const std::uint64_t seed = config.RequireSeed();
  Benchmark bench;
  BenchmarkOptions options;
  options.num_bases = config.num_bases;
  options.dim = config.dim;
  options.num_labels = config.num_labels;
  options.mean_spread = config.mean_spread;
  options.scale = config.base_scale;
  options.min_separation = config.min_separation;
  Rng spec_rng(DeriveSeed(seed, kSpecStream));
  bench.spec = MakeBenchmarkSpec(options, spec_rng);
  Rng shard_rng(DeriveSeed(seed, kShardStream));
  bench.shards = PartitionForXi(config.num_bases, config.num_clients, config.xi_target, config.n_per_client,
                                bench.spec, shard_rng);
  MixtureSpec pooled = bench.spec;
  pooled.global_weights = PooledWeights(bench.shards);
  Rng test_rng(DeriveSeed(seed, kTestStream));
  bench.test = SampleMixture(pooled, config.n_test, test_rng);
  return bench;
}

namespace {

ClusterPolicy PolicyFor(const RunConfig& config, const ClientShard& shard) {
  ClusterPolicy policy;
  if (config.mk_mode == "auto") {
    policy.mode = ClusterPolicy::Mode::kAuto;
  } else if (config.mk_mode == "truth") {
    policy.mode = ClusterPolicy::Mode::kPerLabel;
    policy.per_label = GroundTruthClusterCounts(shard);
  } else {
    policy.mode = ClusterPolicy::Mode::kFixed;
    policy.fixed = static_cast<int>(ParseInt(config.mk_mode));
  }
  return policy;
}

TrainOptions DownstreamOptions(const RunConfig& config) {
  TrainOptions options;
  options.epochs = config.epochs;
  options.learning_rate = config.learning_rate;
  options.batch_size = config.batch_size;
  options.num_labels = config.num_labels;
  return options;
}

Dataset Pool(const std::vector<ClientShard>& shards) {
  Dataset pooled;
  for (const auto& s : shards) pooled.insert(pooled.end(), s.points.begin(), s.points.end());
  return pooled;
}

void FillCommon(const RunConfig& config, const Benchmark& bench, RunMetrics& m) {
  m.mode = RunModeName(config.mode);
  m.seed = *config.seed;
  m.xi_target = config.xi_target;
  m.num_clients = config.num_clients;
  if (bench.shards.size() >= 2) {
    const auto report = ReportEntanglement(bench.shards);
    m.realized_xi_avg = report.average;
    m.realized_xi_max = report.xi_max;
  }
  m.clip_bound = config.clip_bound;
  m.sigma = config.sigma;
  m.delta = config.delta;
  m.dp_epsilon = GaussianMechanismEpsilon(config.sigma, config.delta);
}

RunOutcome RunFedDistr(const RunConfig& config) {
  const std::uint64_t seed = config.RequireSeed();
  RunOutcome out;
  Benchmark bench = BuildBenchmark(config);

  Rng encoder_rng(DeriveSeed(seed, kEncoderStream));
  ClientConfig base_cfg;
  base_cfg.encoder = config.latent_dim > 0
                         ? Encoder::RandomProjection(config.latent_dim, config.dim, encoder_rng)
                         : Encoder::Identity(config.dim);
  base_cfg.clip_bound = config.clip_bound;
  base_cfg.noise_sigma = config.sigma;

  // Clients are independent; each owns its generator.
  std::vector<std::future<ClientRun>> uploads_f;
  for (const auto& shard : bench.shards) {
    uploads_f.push_back(std::async(std::launch::async, [&config, &base_cfg, &shard, seed] {
      ClientConfig cfg = base_cfg;
      cfg.policy = PolicyFor(config, shard);
      Rng rng(DeriveSeed(seed, kUploadStream + static_cast<std::uint64_t>(shard.client_id)));
      return RunClient(shard, cfg, rng);
    }));
  }
  std::vector<UploadMessage> uploads;
  for (auto& f : uploads_f) {
    out.clients.push_back(f.get());
    uploads.push_back(out.clients.back().message);
  }

  out.alignment = Align(uploads, config.tau);
  const auto payload = Broadcast(out.alignment);
  const auto sizes = GenerationCounts(out.alignment.payload_counts, config.generation_budget);
  const std::vector<long long> counts(sizes.begin(), sizes.end());

  const Dataset test = base_cfg.encoder.EncodeDataset(bench.test);
  const TrainOptions options = DownstreamOptions(config);

  std::vector<std::future<TrainResult>> models_f;
  for (int k = 0; k < config.num_clients; ++k) {
    models_f.push_back(std::async(std::launch::async, [&, k] {
      Rng rng(DeriveSeed(seed, kDownstreamStream + static_cast<std::uint64_t>(k)));
      const Dataset generated = Generate(payload, counts, rng);
      return TrainClassifier(generated, options, rng);
    }));
  }
  for (auto& f : models_f) out.client_models.push_back(f.get());

  Rng oracle_rng(DeriveSeed(seed, kOracleStream));
  out.oracle = TrainClassifier(base_cfg.encoder.EncodeDataset(Pool(bench.shards)), options, oracle_rng);
  const EvalResult oracle_eval = Evaluate(out.oracle.model, test);

  RunMetrics& m = out.metrics;
  FillCommon(config, bench, m);
  double acc_sum = 0.0;
  double eps_sum = 0.0;
  for (const auto& model : out.client_models) {
    const EvalResult r = Evaluate(model.model, test);
    m.client_accuracy.push_back(r.accuracy);
    acc_sum += r.accuracy;
    eps_sum += r.mean_loss - oracle_eval.mean_loss;
  }
  m.mean_accuracy = acc_sum / config.num_clients;
  m.utility_loss = 1.0 - m.mean_accuracy;
  m.eps_u = eps_sum / config.num_clients;
  m.oracle_accuracy = oracle_eval.accuracy;
  m.ledger = FedDistrLedger(uploads, payload, config.num_clients);
  m.num_groups = static_cast<int>(out.alignment.groups.size());
  m.num_parallel_groups = static_cast<int>(out.alignment.parallel_groups().size());
  m.payload_size = static_cast<int>(payload.size());

  out.spec = std::move(bench.spec);
  out.shards = std::move(bench.shards);
  return out;
}

RunOutcome RunFedAvgMode(const RunConfig& config) {
  const std::uint64_t seed = config.RequireSeed();
  std::optional<double> target = config.target_accuracy;
  if (!target) {
    RunConfig reference = config;
    reference.mode = RunMode::kFedDistr;
    target = RunFedDistr(reference).metrics.mean_accuracy;
  }
  RunOutcome out;
  Benchmark bench = BuildBenchmark(config);
  FedAvgConfig fed;
  fed.num_labels = config.num_labels;
  fed.local.epochs = config.local_epochs;
  fed.local.learning_rate = config.learning_rate;
  fed.local.batch_size = config.batch_size;
  fed.target_accuracy = *target;
  fed.max_rounds = config.max_rounds;
  Rng rng(DeriveSeed(seed, kFedAvgStream));
  out.fedavg = RunFedAvg(bench.shards, bench.test, fed, rng);

  Rng oracle_rng(DeriveSeed(seed, kOracleStream));
  out.oracle = TrainClassifier(Pool(bench.shards), DownstreamOptions(config), oracle_rng);
  const EvalResult oracle_eval = Evaluate(out.oracle.model, bench.test);
  const EvalResult final_eval = Evaluate(out.fedavg.model, bench.test);

  RunMetrics& m = out.metrics;
  FillCommon(config, bench, m);
  m.client_accuracy = {final_eval.accuracy};
  m.mean_accuracy = final_eval.accuracy;
  m.utility_loss = 1.0 - final_eval.accuracy;
  m.eps_u = final_eval.mean_loss - oracle_eval.mean_loss;
  m.oracle_accuracy = oracle_eval.accuracy;
  m.ledger = out.fedavg.ledger;
  m.rounds_to_target = out.fedavg.rounds_to_target;
  m.target_accuracy = target;

  out.spec = std::move(bench.spec);
  out.shards = std::move(bench.shards);
  return out;
}

}  // namespace

RunOutcome Run(const RunConfig& config) {
  config.Validate();
  const auto start = std::chrono::steady_clock::now();
  RunOutcome out;
  switch (config.mode) {
    case RunMode::kFedDistr:
      out = RunFedDistr(config);
      break;
    case RunMode::kFedAvg:
      out = RunFedAvgMode(config);
      break;
    default:
      throw ConfigError("run: mode must be feddistr or fedavg");
  }
  out.metrics.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<RunMetrics> Sweep(const RunConfig& config) {
  config.Validate();
  if (config.sweep_xi.empty() || config.sweep_modes.empty()) throw ConfigError("sweep: empty grid");
  std::vector<std::future<RunMetrics>> cells;
  for (double xi : config.sweep_xi) {
    for (RunMode mode : config.sweep_modes) {
      RunConfig cell = config;
      cell.xi_target = xi;
      cell.mode = mode;
      cells.push_back(std::async(std::launch::async, [cell] {
        try {
          return Run(cell).metrics;
        } catch (const std::exception& e) {
          RunMetrics failed;
          failed.mode = RunModeName(cell.mode);
          failed.seed = cell.seed.value_or(0);
          failed.xi_target = cell.xi_target;
          failed.num_clients = cell.num_clients;
          failed.error = e.what();
          return failed;
        }
      }));
    }
  }
  std::vector<RunMetrics> rows;
  for (auto& f : cells) rows.push_back(f.get());
  return rows;
}

std::string MetricsCsvHeader() {
  return "mode,seed,xi_target,realized_xi_avg,realized_xi_max,num_clients,mean_accuracy,utility_loss,eps_u,"
         "oracle_accuracy,rounds,uplink_scalars,downlink_scalars,rounds_to_target,target_accuracy,num_groups,"
         "num_parallel_groups,payload_size,clip_bound,sigma,dp_epsilon,delta,client_accuracy,error";
}

void WriteMetricsCsv(std::ostream& out, const std::vector<RunMetrics>& rows) {
  out << MetricsCsvHeader() << '\n';
  for (const auto& m : rows) {
    std::string accs;
    for (std::size_t i = 0; i < m.client_accuracy.size(); ++i) {
      if (i) accs += ';';
      accs += FormatDouble(m.client_accuracy[i]);
    }
    out << m.mode << ',' << m.seed << ',' << FormatDouble(m.xi_target) << ',' << FormatDouble(m.realized_xi_avg)
        << ',' << FormatDouble(m.realized_xi_max) << ',' << m.num_clients << ',' << FormatDouble(m.mean_accuracy)
        << ',' << FormatDouble(m.utility_loss) << ',' << FormatDouble(m.eps_u) << ','
        << FormatDouble(m.oracle_accuracy) << ',' << m.ledger.rounds << ',' << m.ledger.uplink_scalars << ','
        << m.ledger.downlink_scalars << ',' << (m.rounds_to_target ? std::to_string(*m.rounds_to_target) : "")
        << ',' << (m.target_accuracy ? FormatDouble(*m.target_accuracy) : "") << ',' << m.num_groups << ','
        << m.num_parallel_groups << ',' << m.payload_size << ',' << FormatDouble(m.clip_bound) << ','
        << FormatDouble(m.sigma) << ',' << FormatDouble(m.dp_epsilon) << ',' << FormatDouble(m.delta) << ','
        << accs << ',' << Sanitize(m.error) << '\n';
  }
}

std::vector<RunMetrics> ParseMetricsCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != MetricsCsvHeader()) throw InputError("metrics csv: unexpected header");
  std::vector<RunMetrics> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = SplitFields(line);
    if (f.size() != 24) throw InputError("metrics csv: expected 24 fields");
    RunMetrics m;
    m.mode = std::string(f[0]);
    m.seed = static_cast<std::uint64_t>(ParseInt(f[1]));
    m.xi_target = ParseDouble(f[2]);
    m.realized_xi_avg = ParseDouble(f[3]);
    m.realized_xi_max = ParseDouble(f[4]);
    m.num_clients = static_cast<int>(ParseInt(f[5]));
    m.mean_accuracy = ParseDouble(f[6]);
    m.utility_loss = ParseDouble(f[7]);
    m.eps_u = ParseDouble(f[8]);
    m.oracle_accuracy = ParseDouble(f[9]);
    m.ledger.rounds = ParseInt(f[10]);
    m.ledger.uplink_scalars = ParseInt(f[11]);
    m.ledger.downlink_scalars = ParseInt(f[12]);
    if (!f[13].empty()) m.rounds_to_target = static_cast<int>(ParseInt(f[13]));
    if (!f[14].empty()) m.target_accuracy = ParseDouble(f[14]);
    m.num_groups = static_cast<int>(ParseInt(f[15]));
    m.num_parallel_groups = static_cast<int>(ParseInt(f[16]));
    m.payload_size = static_cast<int>(ParseInt(f[17]));
    m.clip_bound = ParseDouble(f[18]);
    m.sigma = ParseDouble(f[19]);
    m.dp_epsilon = ParseDouble(f[20]);
    m.delta = ParseDouble(f[21]);
    if (!f[22].empty()) {
      for (const auto a : SplitFields(f[22], ';')) m.client_accuracy.push_back(ParseDouble(a));
    }
    m.error = std::string(f[23]);
    rows.push_back(std::move(m));
  }
  return rows;
}

std::vector<BoundRow> TheorySweep(const RunConfig& config) {
  const std::uint64_t seed = config.RequireSeed();
  std::vector<BoundRow> rows;
  std::uint64_t cell = 0;
  for (long long n : config.theory_n) {
    for (double eps : config.theory_eps) {
      BoundSpec spec;
      spec.n = n;
      spec.eps = eps;
      spec.lipschitz = config.lipschitz;
      Rng rng(DeriveSeed(seed, cell++));
      const MonteCarloResult mc = MonteCarloThm1(config.theory_trials, n, eps, spec, rng);
      rows.push_back({n, eps, config.lipschitz, config.num_clients, 0.0, 1, mc.bound, mc.empirical});
    }
  }
  for (double xi : config.sweep_xi) {
    for (double eps : config.theory_eps) {
      const long long n = static_cast<long long>(config.n_per_client) * config.num_clients;
      const auto bound = config.num_clients >= 2
                             ? Thm2Bound(n, eps, config.lipschitz, config.num_clients, xi, config.num_bases)
                             : std::nullopt;
      rows.push_back({n, eps, config.lipschitz, config.num_clients, xi, config.num_bases, bound, std::nullopt});
    }
  }
  return rows;
}

void WriteEmbeddingsCsv(std::ostream& out, const std::vector<ClientShard>& shards,
                        const std::vector<ClientRun>& clients) {
  const std::size_t d = clients.empty() || clients.front().latents.empty() ? 0 : clients.front().latents.front().z.size();
  out << "client_id,source_index,label,base_id,cluster";
  for (std::size_t j = 0; j < d; ++j) out << ",z_" << j;
  out << '\n';
  for (std::size_t k = 0; k < clients.size(); ++k) {
    const auto& run = clients[k];
    for (std::size_t t = 0; t < run.latents.size(); ++t) {
      const auto& p = run.latents[t];
      out << shards[k].client_id << ',' << p.source_index << ',' << p.label << ','
          << shards[k].base_assignment[p.source_index] << ',' << run.clustering.assignments[t];
      for (double z : p.z) out << ',' << FormatDouble(z);
      out << '\n';
    }
  }
}

void WriteRunOutputs(const std::string& dir, const RunOutcome& outcome) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&dir](const std::string& name) {
    std::ofstream f(fs::path(dir) / name);
    if (!f) throw ConfigError("cannot write '" + (fs::path(dir) / name).string() + "'");
    return f;
  };
  {
    auto f = open("metrics.csv");
    WriteMetricsCsv(f, {outcome.metrics});
  }
  if (outcome.metrics.mode == "feddistr") {
    {
      auto f = open("uploads.txt");
      for (const auto& c : outcome.clients) f << FormatUploadMessage(c.message);
    }
    {
      auto f = open("alignment.csv");
      WriteAlignmentCsv(f, outcome.alignment);
    }
    {
      auto f = open("embeddings.csv");
      WriteEmbeddingsCsv(f, outcome.shards, outcome.clients);
    }
    if (!outcome.client_models.empty()) {
      auto w = open("client0_weights.csv");
      WriteWeightsCsv(w, outcome.client_models.front().model);
      auto l = open("client0_loss.csv");
      WriteLossCurveCsv(l, outcome.client_models.front().epoch_loss);
    }
  } else {
    auto r = open("fedavg_rounds.csv");
    WriteRoundAccuracyCsv(r, outcome.fedavg.round_accuracy);
    auto w = open("fedavg_weights.csv");
    WriteWeightsCsv(w, outcome.fedavg.model);
  }
  auto ledger = open("ledger.csv");
  WriteLedgerCsv(ledger, outcome.metrics.mode, outcome.metrics.ledger);
}

double AdjustedRandIndex(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw InputError("ARI: labelings differ in length");
  const double n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  auto comb2 = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sum_rows = 0, sum_cols = 0;
  for (const auto& [key, c] : joint) index += comb2(c);
  for (const auto& [key, c] : rows) sum_rows += comb2(c);
  for (const auto& [key, c] : cols) sum_cols += comb2(c);
  const double expected = sum_rows * sum_cols / comb2(n);
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

AlignmentRecovery EvaluateAlignment(const std::vector<ClientShard>& shards, const std::vector<ClientRun>& clients,
                                    const AlignmentResult& alignment) {
  if (shards.size() != clients.size()) throw InputError("evaluate alignment: shard/client count mismatch");
  std::map<ParamRef, int> group_of;
  for (std::size_t g = 0; g < alignment.groups.size(); ++g) {
    for (const auto& ref : alignment.groups[g].members) group_of[ref] = static_cast<int>(g);
  }
  AlignmentRecovery out;
  out.num_groups = static_cast<int>(alignment.groups.size());
  std::vector<int> param_truth, param_group, point_truth, point_group;
  for (std::size_t k = 0; k < clients.size(); ++k) {
    const auto& run = clients[k];
    const int owner = run.message.owner;
    std::vector<std::map<int, int>> votes(run.clustering.num_clusters());
    for (std::size_t t = 0; t < run.latents.size(); ++t) {
      const int cluster = run.clustering.assignments[t];
      const int base = shards[k].base_assignment[run.latents[t].source_index];
      ++votes[cluster][base];
      point_truth.push_back(base);
      point_group.push_back(group_of.at({owner, cluster}));
    }
    for (int j = 0; j < run.clustering.num_clusters(); ++j) {
      const auto best = std::max_element(votes[j].begin(), votes[j].end(),
                                         [](const auto& x, const auto& y) { return x.second < y.second; });
      param_truth.push_back(best->first);
      param_group.push_back(group_of.at({owner, j}));
    }
  }
  out.param_ari = AdjustedRandIndex(param_truth, param_group);
  out.point_ari = AdjustedRandIndex(point_truth, point_group);
  return out;
}

}  // namespace feddistr
