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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

namespace feddistr {

Classifier Classifier::Zeros(int num_labels, std::size_t dim) {
  if (num_labels < 2) throw ConfigError("classifier needs at least two labels");
  if (dim == 0) throw ConfigError("classifier needs a positive input dimension");
  Classifier c;
  c.num_labels = num_labels;
  c.dim = dim;
  c.weights.assign(num_labels, Vector(dim + 1, 0.0));
  return c;
}

Vector Classifier::Logits(std::span<const double> x) const {
  if (x.size() != dim) throw InputError("classifier: feature dimension mismatch");
  Vector out(num_labels);
  for (int c = 0; c < num_labels; ++c) {
    const auto& w = weights[c];
    double acc = w[dim];
    for (std::size_t j = 0; j < dim; ++j) acc += w[j] * x[j];
    out[c] = acc;
  }
  return out;
}

int Classifier::Predict(std::span<const double> x) const {
  const Vector logits = Logits(x);
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

Vector Softmax(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double total = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out[c] = std::exp(logits[c] - top);
    total += out[c];
  }
  for (double& p : out) p /= total;
  return out;
}

namespace {

double LogSumExp(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double l : logits) total += std::exp(l - top);
  return top + std::log(total);
}

void CheckLabel(const Classifier& model, int y) {
  if (y < 0 || y >= model.num_labels) {
    throw InputError("label " + std::to_string(y) + " outside the classifier's label space");
  }
}

}  // namespace

LossAndGradient CrossEntropy(const Classifier& model, std::span<const Example> batch) {
  if (batch.empty()) throw InputError("cross entropy of an empty batch");
  LossAndGradient out;
  out.gradient.assign(model.num_labels, Vector(model.dim + 1, 0.0));
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    CheckLabel(model, ex.y);
    const Vector logits = model.Logits(ex.x);
    out.loss += (LogSumExp(logits) - logits[ex.y]) * inv_n;
    const Vector prob = Softmax(logits);
    for (int c = 0; c < model.num_labels; ++c) {
      const double r = (prob[c] - (c == ex.y ? 1.0 : 0.0)) * inv_n;
      auto& g = out.gradient[c];
      for (std::size_t j = 0; j < model.dim; ++j) g[j] += r * ex.x[j];
      g[model.dim] += r;
    }
  }
  return out;
}

double CrossEntropyLoss(const Classifier& model, std::span<const Example> batch) {
  if (batch.empty()) throw InputError("cross entropy of an empty batch");
  double loss = 0.0;
  for (const auto& ex : batch) {
    CheckLabel(model, ex.y);
    const Vector logits = model.Logits(ex.x);
    loss += LogSumExp(logits) - logits[ex.y];
  }
  return loss / static_cast<double>(batch.size());
}

TrainResult LocalSgd(Classifier init, std::span<const Example> data, const TrainOptions& options, Rng& rng) {
  if (options.epochs < 1) throw ConfigError("training: epochs must be at least 1");
  if (!(options.learning_rate > 0.0)) throw ConfigError("training: learning rate must be positive");
  if (options.batch_size == 0) throw ConfigError("training: batch size must be positive");
  TrainResult result;
  result.model = std::move(init);
  if (data.empty()) return result;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Example> batch;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      batch.clear();
      for (std::size_t t = start; t < end; ++t) batch.push_back(data[order[t]]);
      const LossAndGradient lg = CrossEntropy(result.model, batch);
      for (int c = 0; c < result.model.num_labels; ++c) {
        for (std::size_t j = 0; j <= result.model.dim; ++j) {
          result.model.weights[c][j] -= options.learning_rate * lg.gradient[c][j];
        }
      }
      loss_sum += lg.loss;
      ++batches;
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
  }
  return result;
}

TrainResult TrainClassifier(std::span<const Example> data, const TrainOptions& options, Rng& rng) {
  if (data.empty()) throw ConfigError("training: no data");
  std::set<int> labels;
  for (const auto& ex : data) labels.insert(ex.y);
  if (labels.size() < 2) throw ConfigError("training: data must contain at least two labels");
  if (*labels.begin() < 0) throw InputError("training: negative label");
  const int num_labels = options.num_labels > 0 ? options.num_labels : *labels.rbegin() + 1;
  return LocalSgd(Classifier::Zeros(num_labels, data.front().x.size()), data, options, rng);
}

EvalResult Evaluate(const Classifier& model, std::span<const Example> test) {
  if (test.empty()) throw InputError("evaluate: empty test set");
  EvalResult r;
  r.n_test = test.size();
  for (const auto& ex : test) {
    CheckLabel(model, ex.y);
    if (model.Predict(ex.x) == ex.y) ++r.correct;
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.n_test);
  r.mean_loss = CrossEntropyLoss(model, test);
  return r;
}

double UtilityLoss(const Classifier& model_hat, const Classifier& model_star, std::span<const Example> test) {
  if (model_hat.num_labels != model_star.num_labels || model_hat.dim != model_star.dim) {
    throw InputError("utility_loss: models disagree on label space or dimension");
  }
  return Evaluate(model_hat, test).mean_loss - Evaluate(model_star, test).mean_loss;
}

std::vector<std::size_t> GenerationCounts(std::span<const long long> counts, std::size_t budget) {
  long long total = 0;
  for (long long c : counts) {
    if (c < 0) throw InputError("generation: negative count");
    total += c;
  }
  std::vector<std::size_t> out(counts.size());
  const bool scale = budget > 0 && static_cast<unsigned long long>(total) > budget;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = scale ? static_cast<std::size_t>(static_cast<double>(counts[i]) * budget / total)
                   : static_cast<std::size_t>(counts[i]);
  }
  return out;
}

Dataset Generate(std::span<const DistributionParameter> payload, std::span<const long long> counts, Rng& rng,
                 const DistributionGenerator& generator) {
  if (payload.size() != counts.size()) throw InputError("generate: counts not aligned with payload");
  Dataset out;
  for (std::size_t i = 0; i < payload.size(); ++i) {
    if (counts[i] < 0) throw InputError("generate: negative count");
    for (auto& x : generator.Sample(payload[i].v, static_cast<std::size_t>(counts[i]), rng)) {
      out.push_back(Example{std::move(x), payload[i].label});
    }
  }
  return out;
}

void WriteWeightsCsv(std::ostream& out, const Classifier& model) {
  out << "label";
  for (std::size_t j = 0; j < model.dim; ++j) out << ",w_" << j;
  out << ",bias\n";
  for (int c = 0; c < model.num_labels; ++c) {
    out << c;
    for (double w : model.weights[c]) out << ',' << FormatDouble(w);
    out << '\n';
  }
}

void WriteLossCurveCsv(std::ostream& out, std::span<const double> epoch_loss) {
  out << "epoch,loss\n";
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) out << e + 1 << ',' << FormatDouble(epoch_loss[e]) << '\n';
}

}  // namespace feddistr
