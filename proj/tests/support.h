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

// Randomized generators and numeric checks shared by unit and acceptance
// tests.
#ifndef FEDDISTR_TESTS_SUPPORT_H_
#define FEDDISTR_TESTS_SUPPORT_H_

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "feddistr/downstream.h"
#include "feddistr/theory.h"

namespace feddistr::testing {

// K nonnegative vectors over m coordinates whose entries sum to 1 across the
// vectors: each coordinate has one dominant owner plus small leaks to the
// rest. Draws are rejected until every pairwise inner product is <= xi.
inline std::vector<Vector> RandomLemma3Instance(Rng& rng, int k, int m, double xi) {
  std::uniform_int_distribution<int> owner(0, k - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    std::vector<Vector> vectors(k, Vector(m, 0.0));
    const double max_leak = 0.5 * xi * unit(rng);
    for (int j = 0; j < m; ++j) {
      const int d = owner(rng);
      const double leak = max_leak * unit(rng);
      Vector shares(k, 0.0);
      double total = 0.0;
      for (int i = 0; i < k; ++i) {
        if (i == d) continue;
        shares[i] = unit(rng);
        total += shares[i];
      }
      for (int i = 0; i < k; ++i) {
        vectors[i][j] = i == d ? 1.0 - leak : (total > 0.0 ? leak * shares[i] / total : 0.0);
      }
    }
    bool ok = true;
    for (int a = 0; a < k && ok; ++a) {
      for (int b = a + 1; b < k && ok; ++b) ok = Dot(vectors[a], vectors[b]) <= xi;
    }
    if (ok) return vectors;
  }
}

// Largest relative gap between the analytic cross-entropy gradient and a
// central finite difference, with the denominator floored at 1e-4.
inline double GradientCheckError(const Classifier& model, std::span<const Example> batch, double h = 1e-6) {
  const auto analytic = CrossEntropy(model, batch).gradient;
  double worst = 0.0;
  for (std::size_t c = 0; c < model.weights.size(); ++c) {
    for (std::size_t j = 0; j < model.weights[c].size(); ++j) {
      Classifier plus = model, minus = model;
      plus.weights[c][j] += h;
      minus.weights[c][j] -= h;
      const double numeric = (CrossEntropyLoss(plus, batch) - CrossEntropyLoss(minus, batch)) / (2 * h);
      const double denom = std::max({1e-4, std::abs(numeric), std::abs(analytic[c][j])});
      worst = std::max(worst, std::abs(numeric - analytic[c][j]) / denom);
    }
  }
  return worst;
}

// Random model and batch for gradient checks.
inline std::pair<Classifier, Dataset> RandomGradientInstance(Rng& rng) {
  std::uniform_int_distribution<int> labels(2, 5);
  std::uniform_int_distribution<int> dims(1, 6);
  std::normal_distribution<double> g(0.0, 1.0);
  auto model = Classifier::Zeros(labels(rng), dims(rng));
  for (auto& row : model.weights)
    for (auto& w : row) w = g(rng);
  std::uniform_int_distribution<int> label(0, model.num_labels - 1);
  Dataset batch(16);
  for (auto& ex : batch) {
    ex.x.resize(model.dim);
    for (auto& x : ex.x) x = g(rng);
    ex.y = label(rng);
  }
  return {model, batch};
}

}  // namespace feddistr::testing

#endif  // FEDDISTR_TESTS_SUPPORT_H_
