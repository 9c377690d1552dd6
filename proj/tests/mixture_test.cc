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

#include <cmath>
#include <set>
#include <sstream>

#include "gtest/gtest.h"

namespace feddistr {
namespace {

MixtureSpec TwoBaseSpec(double w0) {
  MixtureSpec spec;
  spec.bases.push_back({0, 0, {0.0, 0.0}, {1.0, 1.0}});
  spec.bases.push_back({1, 1, {10.0, 0.0}, {1.0, 1.0}});
  spec.global_weights = {w0, 1.0 - w0};
  return spec;
}

MixtureSpec Benchmark(int m, int d, int labels, std::uint64_t seed) {
  Rng rng(seed);
  BenchmarkOptions options;
  options.num_bases = m;
  options.dim = d;
  options.num_labels = labels;
  return MakeBenchmarkSpec(options, rng);
}

TEST(EntangleCoeffTest, Examples) {
  EXPECT_EQ(EntangleCoeff(Vector{1, 0}, Vector{0, 1}), 0.0);
  EXPECT_DOUBLE_EQ(EntangleCoeff(Vector{0.5, 0.5}, Vector{0.5, 0.5}), 1.0);
  // 0.32 / 0.68
  EXPECT_NEAR(EntangleCoeff(Vector{0.8, 0.2}, Vector{0.2, 0.8}), 0.47058823529411764, 1e-15);
}

TEST(EntangleCoeffTest, ZeroNormIsDomainError) {
  EXPECT_THROW(EntangleCoeff(Vector{0, 0}, Vector{1, 0}), DomainError);
  EXPECT_THROW(EntangleCoeff(Vector{1, 0}, Vector{1, 0, 0}), InputError);
}

TEST(EntangleCoeffTest, SymmetricScaleInvariantAndBounded) {
  Rng rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> c(0.01, 100.0);
  for (int trial = 0; trial < 500; ++trial) {
    Vector a(6), b(6);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    const double s = EntangleCoeff(a, b);
    EXPECT_EQ(s, EntangleCoeff(b, a));
    Vector scaled = a;
    const double factor = c(rng);
    for (auto& x : scaled) x *= factor;
    EXPECT_NEAR(EntangleCoeff(scaled, b), s, 1e-12);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

ClientShard WithPi(Vector pi) {
  ClientShard s;
  s.pi = std::move(pi);
  return s;
}

TEST(ReportEntanglementTest, Examples) {
  const auto disjoint = ReportEntanglement({WithPi({1, 0}), WithPi({0, 1})});
  EXPECT_EQ(disjoint.average, 0.0);
  EXPECT_EQ(disjoint.xi_max, 0.0);

  const auto iid = ReportEntanglement({WithPi({0.3, 0.7}), WithPi({0.3, 0.7}), WithPi({0.3, 0.7})});
  EXPECT_NEAR(iid.average, 1.0, 1e-12);

  const auto three = ReportEntanglement({WithPi({1, 0, 0}), WithPi({0, 1, 0}), WithPi({0.6, 0.8, 0})});
  EXPECT_NEAR(three.average, 0.4666666666666666, 1e-12);
  EXPECT_NEAR(three.xi_max, 0.8, 1e-12);
  for (int a = 0; a < 3; ++a) {
    EXPECT_EQ(three.pairwise[a][a], 1.0);
    for (int b = 0; b < 3; ++b) EXPECT_EQ(three.pairwise[a][b], three.pairwise[b][a]);
  }
}

TEST(ReportEntanglementTest, RejectsSingleClientAndZeroWeights) {
  EXPECT_THROW(ReportEntanglement({WithPi({1, 0})}), ConfigError);
  EXPECT_THROW(ReportEntanglement({WithPi({0, 0}), WithPi({1, 0})}), DomainError);
}

TEST(SampleMixtureTest, SampleMeanConverges) {
  MixtureSpec spec;
  spec.bases.push_back({0, 0, {0.0, 0.0}, {1.0, 1.0}});
  spec.global_weights = {1.0};
  Rng rng(3);
  const auto data = SampleMixture(spec, 10000, rng);
  double mx = 0, my = 0;
  for (const auto& ex : data) {
    mx += ex.x[0];
    my += ex.x[1];
  }
  EXPECT_NEAR(mx / 1e4, 0.0, 0.05);
  EXPECT_NEAR(my / 1e4, 0.0, 0.05);
}

TEST(SampleMixtureTest, ZeroSamplesRejected) {
  Rng rng(1);
  EXPECT_THROW(SampleMixture(TwoBaseSpec(0.5), 0, rng), ConfigError);
}

TEST(SampleMixtureTest, DegenerateWeightPicksOneBase) {
  Rng rng(1);
  for (const auto& ex : SampleMixture(TwoBaseSpec(1.0), 500, rng)) EXPECT_EQ(ex.y, 0);
}

TEST(SampleMixtureTest, DeterministicUnderSeed) {
  Rng a(99), b(99);
  const auto da = SampleMixture(TwoBaseSpec(0.3), 200, a);
  const auto db = SampleMixture(TwoBaseSpec(0.3), 200, b);
  ASSERT_EQ(da.size(), db.size());
  for (std::size_t i = 0; i < da.size(); ++i) {
    EXPECT_EQ(da[i].x, db[i].x);
    EXPECT_EQ(da[i].y, db[i].y);
  }
}

TEST(MixtureSpecTest, ValidationFailures) {
  auto spec = TwoBaseSpec(0.5);
  spec.bases[1].scale[0] = 0.0;
  EXPECT_THROW(spec.Validate(), ConfigError);
  spec = TwoBaseSpec(0.5);
  spec.global_weights = {0.5, 0.6};
  EXPECT_THROW(spec.Validate(), ConfigError);
  spec = TwoBaseSpec(0.5);
  spec.bases[1].id = 0;
  EXPECT_THROW(spec.Validate(), ConfigError);
  EXPECT_THROW(MixtureSpec{}.Validate(), ConfigError);
}

TEST(PartitionForXiTest, ZeroXiGivesDisjointTwoBaseBlocks) {
  const auto spec = Benchmark(10, 3, 5, 1);
  Rng rng(2);
  const auto shards = PartitionForXi(10, 5, 0.0, 300, spec, rng);
  ASSERT_EQ(shards.size(), 5u);
  for (std::size_t a = 0; a < shards.size(); ++a) {
    int owned = 0;
    for (double w : shards[a].pi) owned += w > 0.0;
    EXPECT_EQ(owned, 2);
    for (std::size_t b = a + 1; b < shards.size(); ++b) {
      for (std::size_t i = 0; i < 10; ++i) EXPECT_FALSE(shards[a].pi[i] > 0 && shards[b].pi[i] > 0);
    }
    std::set<int> bases(shards[a].base_assignment.begin(), shards[a].base_assignment.end());
    EXPECT_LE(bases.size(), 2u);
  }
  EXPECT_EQ(ReportEntanglement(shards).xi_max, 0.0);
}

TEST(PartitionForXiTest, RealizedXiWithinTolerance) {
  const auto spec = Benchmark(10, 3, 5, 1);
  for (double target : {0.003, 0.057, 0.2, 0.5}) {
    Rng rng(4);
    const auto shards = PartitionForXi(10, 5, target, 50, spec, rng);
    const auto report = ReportEntanglement(shards);
    EXPECT_GE(report.xi_max, target - 0.01) << target;
    EXPECT_LE(report.xi_max, target + 0.01) << target;
  }
}

TEST(PartitionForXiTest, LeftoverBasesOnlyReceiveLeak) {
  // m = 7, K = 3: blocks of two, base 6 belongs to nobody.
  const auto weights = BlockLeakWeights(7, 3, SolveLeakMass(7, 3, 0.1));
  for (const auto& w : weights) {
    double total = 0.0;
    for (double x : w) total += x;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  EXPECT_NEAR(EntangleCoeff(weights[0], weights[2]), 0.1, 1e-9);
  EXPECT_NEAR(EntangleCoeff(weights[1], weights[2]), 0.1, 1e-9);
}

TEST(PartitionForXiTest, Infeasible) {
  const auto spec = Benchmark(3, 2, 2, 1);
  Rng rng(1);
  EXPECT_THROW(PartitionForXi(3, 4, 0.0, 10, spec, rng), ConfigError);
  EXPECT_THROW(PartitionForXi(3, 2, 1.0, 10, spec, rng), ConfigError);
  EXPECT_THROW(PartitionForXi(4, 2, 0.0, 10, spec, rng), ConfigError);
}

TEST(PartitionForXiTest, BitReproducible) {
  const auto spec = Benchmark(10, 4, 5, 9);
  Rng a(17), b(17);
  const auto sa = PartitionForXi(10, 5, 0.057, 100, spec, a);
  const auto sb = PartitionForXi(10, 5, 0.057, 100, spec, b);
  std::ostringstream oa, ob;
  WriteShardsCsv(oa, sa);
  WriteShardsCsv(ob, sb);
  EXPECT_EQ(oa.str(), ob.str());
}

TEST(BenchmarkSpecTest, LabelsCycleAndSeparationHolds) {
  Rng rng(1);
  BenchmarkOptions options;
  options.num_bases = 10;
  options.dim = 8;
  options.mean_spread = 40.0;
  options.min_separation = 10.0;
  const auto spec = MakeBenchmarkSpec(options, rng);
  EXPECT_NO_THROW(spec.Validate());
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(spec.bases[i].label, i % 5);
    for (int j = 0; j < i; ++j) EXPECT_GE(Distance(spec.bases[i].mean, spec.bases[j].mean), 10.0);
  }
}

TEST(ShardsCsvTest, HeaderAndRowShape) {
  Rng rng(1);
  const auto spec = TwoBaseSpec(0.5);
  const auto shard = SampleShard(spec, 3, {0.5, 0.5}, 4, rng);
  std::ostringstream out;
  WriteShardsCsv(out, {shard});
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "client_id,base_id,label,x_0,x_1");
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(line.rfind("3,", 0), 0u);
    EXPECT_EQ(SplitFields(line).size(), 5u);
    ++rows;
  }
  EXPECT_EQ(rows, 4);
}

TEST(MixtureSpecTextTest, RoundTripAndUnknownKey) {
  const auto spec = Benchmark(4, 3, 2, 8);
  const auto parsed = ParseMixtureSpec(SerializeMixtureSpec(spec));
  ASSERT_EQ(parsed.num_bases(), spec.num_bases());
  for (std::size_t i = 0; i < spec.num_bases(); ++i) {
    EXPECT_EQ(parsed.bases[i].mean, spec.bases[i].mean);
    EXPECT_EQ(parsed.bases[i].scale, spec.bases[i].scale);
    EXPECT_EQ(parsed.bases[i].label, spec.bases[i].label);
  }
  EXPECT_EQ(parsed.global_weights, spec.global_weights);
  EXPECT_THROW(ParseMixtureSpec(SerializeMixtureSpec(spec) + "bogus = 1\n"), ConfigError);
}

}  // namespace
}  // namespace feddistr
