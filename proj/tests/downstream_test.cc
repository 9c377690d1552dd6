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

#include "feddistr/downstream.h"

#include <cmath>
#include <numeric>

#include "gtest/gtest.h"
#include "support.h"

namespace feddistr {
namespace {

Dataset TwoBlobs(Rng& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Dataset data;
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    data.push_back({{(y == 0 ? -5.0 : 5.0) + g(rng), g(rng)}, y});
  }
  return data;
}

TEST(SoftmaxTest, SumsToOneEvenForExtremeLogits) {
  Rng rng(1);
  std::normal_distribution<double> g(0.0, 300.0);
  for (int t = 0; t < 1000; ++t) {
    Vector logits(1 + t % 7);
    for (auto& x : logits) x = g(rng);
    const auto p = Softmax(logits);
    double total = std::accumulate(p.begin(), p.end(), 0.0);
    EXPECT_NEAR(total, 1.0, 1e-9);
    for (double x : p) EXPECT_TRUE(std::isfinite(x));
  }
}

TEST(CrossEntropyTest, GradientMatchesFiniteDifferences) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto [model, batch] = testing::RandomGradientInstance(rng);
    EXPECT_LE(testing::GradientCheckError(model, batch), 1e-5) << "instance " << t;
  }
}

TEST(CrossEntropyTest, ZeroModelLossIsLogLabels) {
  const auto model = Classifier::Zeros(4, 3);
  const Dataset batch{{{1, 2, 3}, 0}, {{0, 0, 0}, 3}};
  EXPECT_NEAR(CrossEntropyLoss(model, batch), std::log(4.0), 1e-12);
}

TEST(TrainClassifierTest, SeparableBlobsFitNearlyPerfectly) {
  Rng rng(3);
  const auto data = TwoBlobs(rng, 200);
  TrainOptions options;
  options.epochs = 50;
  const auto result = TrainClassifier(data, options, rng);
  EXPECT_GE(Evaluate(result.model, data).accuracy, 0.99);
  EXPECT_EQ(result.epoch_loss.size(), 50u);
  EXPECT_LT(result.epoch_loss.back(), result.epoch_loss.front());
}

TEST(TrainClassifierTest, Preconditions) {
  Rng rng(4);
  const Dataset one_label{{{0.0}, 0}, {{1.0}, 0}};
  EXPECT_THROW(TrainClassifier(one_label, {}, rng), ConfigError);
  TrainOptions bad;
  bad.learning_rate = 0.0;
  EXPECT_THROW(TrainClassifier(TwoBlobs(rng, 10), bad, rng), ConfigError);
}

TEST(TrainClassifierTest, DeterministicUnderSeed) {
  Rng data_rng(5);
  const auto data = TwoBlobs(data_rng, 100);
  Rng a(6), b(6);
  EXPECT_EQ(TrainClassifier(data, {}, a).model.weights, TrainClassifier(data, {}, b).model.weights);
}

TEST(EvaluateTest, PerfectAndChanceModels) {
  auto model = Classifier::Zeros(2, 1);
  model.weights[0] = {-1.0, 0.0};
  model.weights[1] = {1.0, 0.0};
  const Dataset data{{{-2.0}, 0}, {{3.0}, 1}, {{-0.5}, 0}};
  EXPECT_EQ(Evaluate(model, data).accuracy, 1.0);
  EXPECT_THROW(Evaluate(model, Dataset{}), InputError);

  Rng rng(7);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> g(0.0, 1.0);
  Dataset noise(10000);
  for (auto& ex : noise) ex = {{g(rng)}, coin(rng) ? 1 : 0};
  EXPECT_NEAR(Evaluate(model, noise).accuracy, 0.5, 0.02);
}

TEST(UtilityLossTest, IdentityUntrainedAndMismatch) {
  Rng rng(8);
  const auto data = TwoBlobs(rng, 200);
  const auto trained = TrainClassifier(data, {}, rng).model;
  EXPECT_EQ(UtilityLoss(trained, trained, data), 0.0);
  EXPECT_GT(UtilityLoss(Classifier::Zeros(2, 2), trained, data), 0.0);
  EXPECT_THROW(UtilityLoss(Classifier::Zeros(3, 2), trained, data), InputError);
}

TEST(GenerateTest, CountsAndDegenerateScale) {
  Rng rng(9);
  DistributionParameter p;
  p.v = {1.0, 2.0, std::log(1e-3), std::log(1e-3)};
  p.label = 3;
  const std::vector<DistributionParameter> payload{p};
  EXPECT_TRUE(Generate(payload, std::vector<long long>{0}, rng).empty());
  const auto data = Generate(payload, std::vector<long long>{5}, rng);
  ASSERT_EQ(data.size(), 5u);
  for (const auto& ex : data) {
    EXPECT_EQ(ex.y, 3);
    EXPECT_NEAR(ex.x[0], 1.0, 0.01);
    EXPECT_NEAR(ex.x[1], 2.0, 0.01);
  }
  EXPECT_THROW(Generate(payload, std::vector<long long>{-1}, rng), InputError);
}

TEST(GenerationCountsTest, BudgetScalesProportionally) {
  const std::vector<long long> counts{100, 300};
  EXPECT_EQ(GenerationCounts(counts, 0), (std::vector<std::size_t>{100, 300}));
  const auto scaled = GenerationCounts(counts, 40);
  EXPECT_EQ(scaled[0] + scaled[1], 40u);
  EXPECT_EQ(scaled[0], 10u);
}

TEST(GenerateTest, RegeneratedDataTrainsComparableModel) {
  // One tight Gaussian per label, estimated exactly, then regenerated.
  Rng rng(10);
  const auto truth = TwoBlobs(rng, 4000);
  std::vector<DistributionParameter> payload;
  std::vector<long long> counts;
  for (int y = 0; y < 2; ++y) {
    std::vector<Vector> pts;
    for (const auto& ex : truth)
      if (ex.y == y) pts.push_back(ex.x);
    DistributionParameter p;
    p.v = DefaultGenerator().Fit(pts);
    p.label = y;
    payload.push_back(p);
    counts.push_back(static_cast<long long>(pts.size()));
  }
  const auto regenerated = Generate(payload, counts, rng);
  const auto test = TwoBlobs(rng, 2000);
  const auto star = TrainClassifier(truth, {}, rng).model;
  const auto hat = TrainClassifier(regenerated, {}, rng).model;
  EXPECT_LE(std::abs(UtilityLoss(hat, star, test)), 0.05);
}

}  // namespace
}  // namespace feddistr
