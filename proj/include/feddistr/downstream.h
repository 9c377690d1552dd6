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

#ifndef FEDDISTR_DOWNSTREAM_H_
#define FEDDISTR_DOWNSTREAM_H_

#include <iosfwd>
#include <vector>

#include "feddistr/client.h"
#include "feddistr/common.h"

namespace feddistr {

// Multinomial logistic regression. Row c of `weights` holds the coefficients
// of class c followed by its bias.
struct Classifier {
  int num_labels = 0;
  std::size_t dim = 0;
  std::vector<Vector> weights;

  static Classifier Zeros(int num_labels, std::size_t dim);
  std::size_t ParameterCount() const { return static_cast<std::size_t>(num_labels) * (dim + 1); }

  Vector Logits(std::span<const double> x) const;
  int Predict(std::span<const double> x) const;
};

Vector Softmax(std::span<const double> logits);

// Mean cross-entropy of a batch and its gradient with respect to every weight.
struct LossAndGradient {
  double loss = 0.0;
  std::vector<Vector> gradient;
};
LossAndGradient CrossEntropy(const Classifier& model, std::span<const Example> batch);
double CrossEntropyLoss(const Classifier& model, std::span<const Example> batch);

struct TrainOptions {
  int epochs = 20;
  double learning_rate = 0.1;
  std::size_t batch_size = 64;
  // 0 infers max label + 1 from the data.
  int num_labels = 0;
};

struct TrainResult {
  Classifier model;
  std::vector<double> epoch_loss;  // mean batch loss seen during each epoch
};

// Mini-batch SGD from `init`, reshuffling with `rng` every epoch. Used both
// for FedDistr training and FedAvg local updates; accepts single-label data.
TrainResult LocalSgd(Classifier init, std::span<const Example> data, const TrainOptions& options, Rng& rng);

// From zero weights. Throws ConfigError with fewer than two labels, zero
// epochs or a non-positive learning rate.
TrainResult TrainClassifier(std::span<const Example> data, const TrainOptions& options, Rng& rng);

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  std::size_t n_test = 0;
  std::size_t correct = 0;
};

// Throws InputError on an empty test set.
EvalResult Evaluate(const Classifier& model, std::span<const Example> test);

// Mean test loss of `model_hat` minus that of `model_star`. Not clamped.
double UtilityLoss(const Classifier& model_hat, const Classifier& model_star, std::span<const Example> test);

// Per payload entry, the number of samples to draw: `counts` scaled down
// proportionally when their sum exceeds `budget` (0 = unlimited).
std::vector<std::size_t> GenerationCounts(std::span<const long long> counts, std::size_t budget);

// Draws counts[i] samples from the distribution decoded from payload[i],
// labelled with payload[i].label.
Dataset Generate(std::span<const DistributionParameter> payload, std::span<const long long> counts, Rng& rng,
                 const DistributionGenerator& generator = DefaultGenerator());

// Columns: label,w_0..w_{d-1},bias
void WriteWeightsCsv(std::ostream& out, const Classifier& model);
// Columns: epoch,loss
void WriteLossCurveCsv(std::ostream& out, std::span<const double> epoch_loss);

}  // namespace feddistr

#endif  // FEDDISTR_DOWNSTREAM_H_
