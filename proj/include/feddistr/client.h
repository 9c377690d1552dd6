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

#ifndef FEDDISTR_CLIENT_H_
#define FEDDISTR_CLIENT_H_

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "feddistr/common.h"
#include "feddistr/mixture.h"

namespace feddistr {

struct LatentPoint {
  Vector z;
  int label = 0;
  std::size_t source_index = 0;
};

// Fixed public encoder shared by all clients. Either the identity or a
// linear projection whose rows are orthonormal.
class Encoder {
 public:
  static Encoder Identity(std::size_t dim);
  // Throws ConfigError unless the rows are orthonormal (within 1e-9).
  static Encoder Projection(std::vector<Vector> rows);
  // Gram-Schmidt on Gaussian rows.
  static Encoder RandomProjection(std::size_t latent_dim, std::size_t input_dim, Rng& rng);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t latent_dim() const { return rows_.empty() ? input_dim_ : rows_.size(); }
  bool is_identity() const { return rows_.empty(); }

  // Throws InputError on a dimension mismatch.
  Vector Apply(std::span<const double> x) const;
  LatentPoint Encode(const Example& example, std::size_t source_index = 0) const;
  Dataset EncodeDataset(const Dataset& data) const;

 private:
  std::size_t input_dim_ = 0;
  std::vector<Vector> rows_;
};

struct KMeansOptions {
  int max_iterations = 300;
  int restarts = 5;
};

struct KMeansFit {
  std::vector<int> assignments;
  std::vector<Vector> centroids;
  double inertia = 0.0;  // sum of squared distances to the assigned centroid
  std::vector<double> inertia_history;      // per Lloyd iteration, chosen restart
  std::vector<double> restart_inertias;     // final inertia of every restart
  int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding, best of `restarts` by inertia.
// Every returned cluster is nonempty. Throws ConfigError when k < 1 or there
// are fewer points than clusters.
KMeansFit KMeans(std::span<const Vector> points, int k, Rng& rng, const KMeansOptions& options = {});

// Mean silhouette coefficient of a labelling with k >= 2 clusters. Points in
// singleton clusters score 0.
double SilhouetteScore(std::span<const Vector> points, std::span<const int> assignments, int k);

struct ClusterPolicy {
  enum class Mode { kFixed, kAuto, kPerLabel };
  Mode mode = Mode::kFixed;
  int fixed = 1;                      // kFixed: clusters per label (capped by group size)
  std::map<int, int> per_label;       // kPerLabel: explicit count for every label present
  int auto_max = 8;                   // kAuto: candidates 1..auto_max
  double auto_min_silhouette = 0.5;   // kAuto: below this the label stays one cluster
  std::size_t silhouette_sample = 500;
  KMeansOptions kmeans;
};

// Picks the cluster count in [1, max_k] with the highest mean silhouette;
// 1 when no candidate reaches `min_silhouette`.
int ChooseClusterCount(std::span<const Vector> points, const ClusterPolicy& policy, Rng& rng);

// Clusters of all labels; cluster indices of one label are contiguous and
// labels appear in ascending order.
struct Clustering {
  std::vector<int> assignments;
  std::vector<Vector> centroids;
  std::vector<int> cluster_labels;
  double inertia = 0.0;    // squared-distance objective minimized by Lloyd
  double objective = 0.0;  // sum of plain Euclidean distances to the centroid

  int num_clusters() const { return static_cast<int>(centroids.size()); }
};

// Runs k-means independently inside each label group.
Clustering ClusterByLabel(std::span<const LatentPoint> points, const ClusterPolicy& policy, Rng& rng);

// Recomputes both objectives of a stored assignment.
void RecomputeObjectives(std::span<const LatentPoint> points, Clustering& clustering);

struct DistributionParameter {
  Vector v;
  int label = 0;
  long long count = 0;
  int owner = 0;
  int local_index = 0;
};

// Fits a parameter vector to a point set and samples from one. This is the
// seam where a learned generator would plug in.
class DistributionGenerator {
 public:
  virtual ~DistributionGenerator() = default;
  virtual Vector Fit(std::span<const Vector> points) const = 0;
  virtual std::vector<Vector> Sample(std::span<const double> v, std::size_t n, Rng& rng) const = 0;
  virtual std::size_t ParameterLength(std::size_t latent_dim) const = 0;
};

// v = [per-axis mean | per-axis log standard deviation] of an axis-aligned
// Gaussian, fitted by maximum likelihood.
class DiagonalGaussianGenerator : public DistributionGenerator {
 public:
  static constexpr double kStdFloor = 1e-3;

  Vector Fit(std::span<const Vector> points) const override;
  std::vector<Vector> Sample(std::span<const double> v, std::size_t n, Rng& rng) const override;
  std::size_t ParameterLength(std::size_t latent_dim) const override { return 2 * latent_dim; }
};

const DistributionGenerator& DefaultGenerator();

// Throws InputError on an empty member list, InternalError on mixed labels.
DistributionParameter EstimateParams(std::span<const LatentPoint> members, int owner, int local_index,
                                     const DistributionGenerator& generator = DefaultGenerator());

// v / max(1, |v|/C); the result never has norm above C.
Vector ClipToNorm(std::span<const double> v, double clip_bound);

// Clip to norm C then add N(0, sigma^2 C^2 I) to v. Count and label pass
// through unchanged.
DistributionParameter DpRelease(const DistributionParameter& param, double clip_bound, double sigma, Rng& rng);

struct UploadMessage {
  int owner = 0;
  std::vector<DistributionParameter> params;
  double clip_bound = 1.0;
  double noise_sigma = 0.0;

  // Scalars on the wire: every v plus one count per parameter.
  long long ScalarCount() const;
};

struct ClientConfig {
  Encoder encoder = Encoder::Identity(1);
  ClusterPolicy policy;
  double clip_bound = 1.0;
  double noise_sigma = 0.0;
};

// Everything a client computed locally. Only `message` is transmitted.
struct ClientRun {
  UploadMessage message;
  std::vector<LatentPoint> latents;
  Clustering clustering;
};

ClientRun RunClient(const ClientShard& shard, const ClientConfig& config, Rng& rng,
                    const DistributionGenerator& generator = DefaultGenerator());

// encode -> per-label cluster -> estimate -> release.
UploadMessage ClientUpload(const ClientShard& shard, const ClientConfig& config, Rng& rng);

// Per label, the number of distinct true bases in the shard.
std::map<int, int> GroundTruthClusterCounts(const ClientShard& shard);

// One line per parameter: owner,label,count,C,sigma,v_0,...,v_{L-1}
// with 17 significant digits. Line order is the local index.
std::string FormatUploadMessage(const UploadMessage& message);
UploadMessage ParseUploadMessage(const std::string& text);

}  // namespace feddistr

#endif  // FEDDISTR_CLIENT_H_
