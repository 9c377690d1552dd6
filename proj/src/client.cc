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

#include "feddistr/client.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace feddistr {

Encoder Encoder::Identity(std::size_t dim) {
  if (dim == 0) throw ConfigError("encoder: zero input dimension");
  Encoder e;
  e.input_dim_ = dim;
  return e;
}

Encoder Encoder::Projection(std::vector<Vector> rows) {
  if (rows.empty()) throw ConfigError("encoder: projection needs at least one row");
  const std::size_t d = rows.front().size();
  if (rows.size() > d) throw ConfigError("encoder: more projection rows than input dimensions");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) throw ConfigError("encoder: ragged projection matrix");
    for (std::size_t j = 0; j <= i; ++j) {
      const double expected = i == j ? 1.0 : 0.0;
      if (std::abs(Dot(rows[i], rows[j]) - expected) > 1e-9) {
        throw ConfigError("encoder: projection rows are not orthonormal");
      }
    }
  }
  Encoder e;
  e.input_dim_ = d;
  e.rows_ = std::move(rows);
  return e;
}

Encoder Encoder::RandomProjection(std::size_t latent_dim, std::size_t input_dim, Rng& rng) {
  if (latent_dim == 0 || latent_dim > input_dim) {
    throw ConfigError("encoder: latent_dim must be in [1, input_dim]");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> rows;
  while (rows.size() < latent_dim) {
    Vector r(input_dim);
    for (double& v : r) v = normal(rng);
    for (const auto& q : rows) {
      const double p = Dot(r, q);
      for (std::size_t j = 0; j < input_dim; ++j) r[j] -= p * q[j];
    }
    const double n = Norm2(r);
    if (n < 1e-8) continue;
    for (double& v : r) v /= n;
    rows.push_back(std::move(r));
  }
  return Projection(std::move(rows));
}

Vector Encoder::Apply(std::span<const double> x) const {
  if (x.size() != input_dim_) {
    throw InputError("encoder: expected " + std::to_string(input_dim_) + " features, got " +
                     std::to_string(x.size()));
  }
  if (rows_.empty()) return Vector(x.begin(), x.end());
  Vector z(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) z[i] = Dot(rows_[i], x);
  return z;
}

LatentPoint Encoder::Encode(const Example& example, std::size_t source_index) const {
  return LatentPoint{Apply(example.x), example.y, source_index};
}

Dataset Encoder::EncodeDataset(const Dataset& data) const {
  Dataset out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(Example{Apply(ex.x), ex.y});
  return out;
}

namespace {

int Nearest(std::span<const double> z, const std::vector<Vector>& centroids, double* dist2) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    const double d = SquaredDistance(z, centroids[j]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  if (dist2) *dist2 = best_d;
  return best;
}

std::vector<Vector> SeedPlusPlus(std::span<const Vector> points, int k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<Vector> centers;
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  centers.push_back(points[first(rng)]);
  std::vector<double> d2(n);
  for (std::size_t t = 0; t < n; ++t) d2[t] = SquaredDistance(points[t], centers[0]);
  while (static_cast<int>(centers.size()) < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = 0;
    if (total > 0.0) {
      std::discrete_distribution<std::size_t> dist(d2.begin(), d2.end());
      pick = dist(rng);
    } else {
      pick = first(rng);
    }
    centers.push_back(points[pick]);
    for (std::size_t t = 0; t < n; ++t) {
      d2[t] = std::min(d2[t], SquaredDistance(points[t], centers.back()));
    }
  }
  return centers;
}

Vector MeanOf(std::span<const Vector> points, const std::vector<int>& assignments, int cluster) {
  Vector mean(points.front().size(), 0.0);
  std::size_t count = 0;
  for (std::size_t t = 0; t < points.size(); ++t) {
    if (assignments[t] != cluster) continue;
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += points[t][j];
    ++count;
  }
  for (double& v : mean) v /= static_cast<double>(count);
  return mean;
}

double Sse(std::span<const Vector> points, const std::vector<int>& assignments,
           const std::vector<Vector>& centroids) {
  double acc = 0.0;
  for (std::size_t t = 0; t < points.size(); ++t) {
    acc += SquaredDistance(points[t], centroids[assignments[t]]);
  }
  return acc;
}

// Moves the worst-fitting point of a multi-member cluster into each empty
// cluster so all k clusters stay populated.
void FillEmptyClusters(std::span<const Vector> points, std::vector<int>& assignments,
                       std::vector<Vector>& centroids) {
  const int k = static_cast<int>(centroids.size());
  std::vector<int> sizes(k, 0);
  for (int a : assignments) ++sizes[a];
  for (int j = 0; j < k; ++j) {
    if (sizes[j] > 0) continue;
    std::size_t worst = points.size();
    double worst_d = -1.0;
    for (std::size_t t = 0; t < points.size(); ++t) {
      if (sizes[assignments[t]] < 2) continue;
      const double d = SquaredDistance(points[t], centroids[assignments[t]]);
      if (d > worst_d) {
        worst_d = d;
        worst = t;
      }
    }
    --sizes[assignments[worst]];
    assignments[worst] = j;
    sizes[j] = 1;
    centroids[j] = points[worst];
  }
}

KMeansFit LloydOnce(std::span<const Vector> points, int k, Rng& rng, int max_iterations) {
  KMeansFit fit;
  fit.centroids = SeedPlusPlus(points, k, rng);
  fit.assignments.assign(points.size(), -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    std::vector<int> next(points.size());
    for (std::size_t t = 0; t < points.size(); ++t) next[t] = Nearest(points[t], fit.centroids, nullptr);
    FillEmptyClusters(points, next, fit.centroids);
    const bool converged = next == fit.assignments;
    fit.assignments = std::move(next);
    if (converged) break;
    for (int j = 0; j < k; ++j) fit.centroids[j] = MeanOf(points, fit.assignments, j);
    fit.inertia_history.push_back(Sse(points, fit.assignments, fit.centroids));
    fit.iterations = iter + 1;
  }
  fit.inertia = Sse(points, fit.assignments, fit.centroids);
  return fit;
}

}  // namespace

KMeansFit KMeans(std::span<const Vector> points, int k, Rng& rng, const KMeansOptions& options) {
  if (k < 1) throw ConfigError("kmeans: need at least one cluster");
  if (points.size() < static_cast<std::size_t>(k)) {
    throw ConfigError("kmeans: " + std::to_string(points.size()) + " points cannot fill " +
                      std::to_string(k) + " clusters");
  }
  const std::size_t d = points.front().size();
  for (const auto& p : points) {
    if (p.size() != d) throw InputError("kmeans: inconsistent point dimension");
  }
  KMeansFit best;
  std::vector<double> all;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    KMeansFit fit = LloydOnce(points, k, rng, options.max_iterations);
    all.push_back(fit.inertia);
    if (r == 0 || fit.inertia < best.inertia) best = std::move(fit);
  }
  best.restart_inertias = std::move(all);
  return best;
}

double SilhouetteScore(std::span<const Vector> points, std::span<const int> assignments, int k) {
  if (k < 2) throw ConfigError("silhouette: needs at least two clusters");
  if (assignments.size() != points.size()) throw InputError("silhouette: assignment length mismatch");
  std::vector<int> sizes(k, 0);
  for (int a : assignments) ++sizes[a];
  double total = 0.0;
  std::vector<double> sums(k);
  for (std::size_t t = 0; t < points.size(); ++t) {
    const int own = assignments[t];
    if (sizes[own] < 2) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t u = 0; u < points.size(); ++u) {
      if (u != t) sums[assignments[u]] += Distance(points[t], points[u]);
    }
    const double a = sums[own] / (sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) {
      if (j != own && sizes[j] > 0) b = std::min(b, sums[j] / sizes[j]);
    }
    const double denom = std::max(a, b);
    if (denom > 0.0 && std::isfinite(b)) total += (b - a) / denom;
  }
  return total / static_cast<double>(points.size());
}

int ChooseClusterCount(std::span<const Vector> points, const ClusterPolicy& policy, Rng& rng) {
  const int max_k = std::min<int>(policy.auto_max, static_cast<int>(points.size()) - 1);
  if (max_k < 2) return 1;
  // Silhouette is quadratic; score on a fixed subsample.
  std::vector<Vector> sample(points.begin(), points.end());
  if (sample.size() > policy.silhouette_sample) {
    std::shuffle(sample.begin(), sample.end(), rng);
    sample.resize(policy.silhouette_sample);
  }
  int best_k = 1;
  double best_score = policy.auto_min_silhouette;
  for (int k = 2; k <= std::min<int>(max_k, static_cast<int>(sample.size()) - 1); ++k) {
    const KMeansFit fit = KMeans(sample, k, rng, policy.kmeans);
    const double score = SilhouetteScore(sample, fit.assignments, k);
    if (score > best_score) {
      best_score = score;
      best_k = k;
    }
  }
  return best_k;
}

Clustering ClusterByLabel(std::span<const LatentPoint> points, const ClusterPolicy& policy, Rng& rng) {
  if (points.empty()) throw ConfigError("cluster: no points");
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t t = 0; t < points.size(); ++t) by_label[points[t].label].push_back(t);

  Clustering out;
  out.assignments.assign(points.size(), -1);
  for (const auto& [label, idx] : by_label) {
    std::vector<Vector> group;
    group.reserve(idx.size());
    for (std::size_t t : idx) group.push_back(points[t].z);
    int k = 1;
    switch (policy.mode) {
      case ClusterPolicy::Mode::kFixed:
        if (policy.fixed < 1) throw ConfigError("cluster: m_k must be at least 1");
        k = std::min<int>(policy.fixed, static_cast<int>(group.size()));
        break;
      case ClusterPolicy::Mode::kPerLabel: {
        const auto it = policy.per_label.find(label);
        if (it == policy.per_label.end()) {
          throw ConfigError("cluster: no m_k given for label " + std::to_string(label));
        }
        k = it->second;
        break;
      }
      case ClusterPolicy::Mode::kAuto:
        k = ChooseClusterCount(group, policy, rng);
        break;
    }
    const KMeansFit fit = KMeans(group, k, rng, policy.kmeans);
    const int offset = out.num_clusters();
    for (std::size_t g = 0; g < idx.size(); ++g) out.assignments[idx[g]] = offset + fit.assignments[g];
    for (const auto& c : fit.centroids) {
      out.centroids.push_back(c);
      out.cluster_labels.push_back(label);
    }
  }
  RecomputeObjectives(points, out);
  return out;
}

void RecomputeObjectives(std::span<const LatentPoint> points, Clustering& clustering) {
  clustering.inertia = 0.0;
  clustering.objective = 0.0;
  for (std::size_t t = 0; t < points.size(); ++t) {
    const double d2 = SquaredDistance(points[t].z, clustering.centroids[clustering.assignments[t]]);
    clustering.inertia += d2;
    clustering.objective += std::sqrt(d2);
  }
}

Vector DiagonalGaussianGenerator::Fit(std::span<const Vector> points) const {
  if (points.empty()) throw InputError("fit: no points");
  const std::size_t d = points.front().size();
  Vector mean(d, 0.0);
  for (const auto& p : points) {
    if (p.size() != d) throw InputError("fit: inconsistent point dimension");
    for (std::size_t j = 0; j < d; ++j) mean[j] += p[j];
  }
  const double n = static_cast<double>(points.size());
  for (double& m : mean) m /= n;
  Vector var(d, 0.0);
  for (const auto& p : points) {
    for (std::size_t j = 0; j < d; ++j) var[j] += (p[j] - mean[j]) * (p[j] - mean[j]);
  }
  Vector v(2 * d);
  for (std::size_t j = 0; j < d; ++j) {
    v[j] = mean[j];
    v[d + j] = std::log(std::max(std::sqrt(var[j] / n), kStdFloor));
  }
  return v;
}

std::vector<Vector> DiagonalGaussianGenerator::Sample(std::span<const double> v, std::size_t n,
                                                      Rng& rng) const {
  if (v.empty() || v.size() % 2 != 0) throw InputError("sample: parameter length must be even");
  const std::size_t d = v.size() / 2;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> out(n, Vector(d));
  for (auto& x : out) {
    for (std::size_t j = 0; j < d; ++j) x[j] = v[j] + std::exp(v[d + j]) * normal(rng);
  }
  return out;
}

const DistributionGenerator& DefaultGenerator() {
  static const DiagonalGaussianGenerator generator;
  return generator;
}

DistributionParameter EstimateParams(std::span<const LatentPoint> members, int owner, int local_index,
                                     const DistributionGenerator& generator) {
  if (members.empty()) throw InputError("estimate_params: empty cluster");
  const int label = members.front().label;
  std::vector<Vector> zs;
  zs.reserve(members.size());
  for (const auto& p : members) {
    if (p.label != label) throw InternalError("estimate_params: cluster mixes labels");
    zs.push_back(p.z);
  }
  DistributionParameter param;
  param.v = generator.Fit(zs);
  param.label = label;
  param.count = static_cast<long long>(members.size());
  param.owner = owner;
  param.local_index = local_index;
  return param;
}

Vector ClipToNorm(std::span<const double> v, double clip_bound) {
  if (!(clip_bound > 0.0)) throw ConfigError("clip bound C must be positive");
  Vector out(v.begin(), v.end());
  const double norm = Norm2(v);
  if (norm <= clip_bound) return out;
  double factor = clip_bound / norm;
  while (true) {
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j] * factor;
    if (Norm2(out) <= clip_bound) return out;
    factor = std::nextafter(factor, 0.0);
  }
}

DistributionParameter DpRelease(const DistributionParameter& param, double clip_bound, double sigma,
                                Rng& rng) {
  if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  DistributionParameter out = param;
  out.v = ClipToNorm(param.v, clip_bound);
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma * clip_bound);
    for (double& x : out.v) x += noise(rng);
  }
  return out;
}

long long UploadMessage::ScalarCount() const {
  long long total = 0;
  for (const auto& p : params) total += static_cast<long long>(p.v.size()) + 1;
  return total;
}

ClientRun RunClient(const ClientShard& shard, const ClientConfig& config, Rng& rng,
                    const DistributionGenerator& generator) {
  if (shard.points.empty()) throw ConfigError("client " + std::to_string(shard.client_id) + ": empty shard");
  ClientRun run;
  run.latents.reserve(shard.points.size());
  for (std::size_t t = 0; t < shard.points.size(); ++t) {
    run.latents.push_back(config.encoder.Encode(shard.points[t], t));
  }
  run.clustering = ClusterByLabel(run.latents, config.policy, rng);

  std::vector<std::vector<LatentPoint>> members(run.clustering.num_clusters());
  for (std::size_t t = 0; t < run.latents.size(); ++t) {
    members[run.clustering.assignments[t]].push_back(run.latents[t]);
  }
  run.message.owner = shard.client_id;
  run.message.clip_bound = config.clip_bound;
  run.message.noise_sigma = config.noise_sigma;
  for (int j = 0; j < run.clustering.num_clusters(); ++j) {
    const auto fitted = EstimateParams(members[j], shard.client_id, j, generator);
    run.message.params.push_back(DpRelease(fitted, config.clip_bound, config.noise_sigma, rng));
  }
  return run;
}

UploadMessage ClientUpload(const ClientShard& shard, const ClientConfig& config, Rng& rng) {
  return RunClient(shard, config, rng).message;
}

std::map<int, int> GroundTruthClusterCounts(const ClientShard& shard) {
  std::map<int, std::set<int>> bases;
  for (std::size_t t = 0; t < shard.points.size(); ++t) {
    bases[shard.points[t].y].insert(shard.base_assignment.at(t));
  }
  std::map<int, int> out;
  for (const auto& [label, ids] : bases) out[label] = static_cast<int>(ids.size());
  return out;
}

std::string FormatUploadMessage(const UploadMessage& message) {
  std::string out;
  for (const auto& p : message.params) {
    out += std::to_string(message.owner) + ',' + std::to_string(p.label) + ',' +
           std::to_string(p.count) + ',' + FormatDouble(message.clip_bound) + ',' +
           FormatDouble(message.noise_sigma);
    for (double x : p.v) out += ',' + FormatDouble(x);
    out += '\n';
  }
  return out;
}

UploadMessage ParseUploadMessage(const std::string& text) {
  UploadMessage message;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    const auto fields = SplitFields(line);
    if (fields.size() < 6) throw InputError("upload record: expected at least 6 fields");
    const int owner = static_cast<int>(ParseInt(fields[0]));
    const double clip = ParseDouble(fields[3]);
    const double sigma = ParseDouble(fields[4]);
    if (first) {
      message.owner = owner;
      message.clip_bound = clip;
      message.noise_sigma = sigma;
      first = false;
    } else if (owner != message.owner || clip != message.clip_bound || sigma != message.noise_sigma) {
      throw InputError("upload record: header fields differ within one message");
    }
    DistributionParameter p;
    p.owner = owner;
    p.label = static_cast<int>(ParseInt(fields[1]));
    p.count = ParseInt(fields[2]);
    p.local_index = static_cast<int>(message.params.size());
    for (std::size_t f = 5; f < fields.size(); ++f) p.v.push_back(ParseDouble(fields[f]));
    if (p.count < 1) throw InputError("upload record: count must be positive");
    if (!message.params.empty() && p.v.size() != message.params.front().v.size()) {
      throw InputError("upload record: parameter length differs within one message");
    }
    message.params.push_back(std::move(p));
  }
  if (message.params.empty()) throw InputError("upload record: empty message");
  return message;
}

}  // namespace feddistr
