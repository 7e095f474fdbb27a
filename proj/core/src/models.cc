// Copyright 2026 The DPFL Simulator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpfl/models.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "dpfl/errors.h"

namespace dpfl {
namespace {

void CheckBatch(const Model& model, const ModelVector& params,
                const Dataset& data, std::span<const size_t> rows,
                size_t input_dim, const ModelVector* grad) {
  if (rows.empty()) throw InvalidInputError("empty batch");
  if (params.size() != model.parameter_count()) {
    throw InvalidInputError("parameter vector has dimension " +
                            std::to_string(params.size()) + ", expected " +
                            std::to_string(model.parameter_count()));
  }
  if (data.feature_dim != input_dim) {
    throw InvalidInputError("data has " + std::to_string(data.feature_dim) +
                            " features, model expects " +
                            std::to_string(input_dim));
  }
  if (grad != nullptr && grad->size() != params.size()) {
    throw InvalidInputError("gradient buffer has wrong dimension");
  }
}

size_t ClassLabel(double label, size_t classes) {
  const auto k = static_cast<long long>(label);
  if (k < 0 || static_cast<size_t>(k) >= classes ||
      static_cast<double>(k) != label) {
    throw InvalidInputError("label " + std::to_string(label) +
                            " is not a class index below " +
                            std::to_string(classes));
  }
  return static_cast<size_t>(k);
}

// Replaces logits by softmax probabilities; returns log-sum-exp.
double SoftmaxInPlace(std::span<double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) {
    z = std::exp(z - peak);
    sum += z;
  }
  for (double& z : logits) z /= sum;
  return peak + std::log(sum);
}

class LinearRegression final : public Model {
 public:
  explicit LinearRegression(size_t input_dim) : input_dim_(input_dim) {}

  size_t parameter_count() const override { return input_dim_ + 1; }
  bool is_classifier() const override { return false; }

  double LossAndGrad(const ModelVector& params, const Dataset& data,
                     std::span<const size_t> rows,
                     ModelVector* grad) const override {
    CheckBatch(*this, params, data, rows, input_dim_, grad);
    if (grad != nullptr) *grad *= 0.0;
    double loss = 0.0;
    const double scale = 1.0 / rows.size();
    for (size_t r : rows) {
      const auto x = data.row(r);
      const double residual = Predict(params, x) - data.labels[r];
      loss += residual * residual;
      if (grad != nullptr) {
        const double g = 2.0 * residual * scale;
        for (size_t j = 0; j < input_dim_; ++j) (*grad)[j] += g * x[j];
        (*grad)[input_dim_] += g;
      }
    }
    return loss * scale;
  }

  double Predict(const ModelVector& params,
                 std::span<const double> x) const override {
    double y = params[input_dim_];
    for (size_t j = 0; j < input_dim_; ++j) y += params[j] * x[j];
    return y;
  }

  ModelVector InitialParameters(Rng&) const override {
    return ModelVector(parameter_count());
  }

 private:
  size_t input_dim_;
};

// Layout: weights (classes x input_dim, row-major) then biases (classes).
class LogisticRegression final : public Model {
 public:
  LogisticRegression(size_t input_dim, size_t classes)
      : input_dim_(input_dim), classes_(classes) {}

  size_t parameter_count() const override {
    return classes_ * (input_dim_ + 1);
  }
  bool is_classifier() const override { return true; }

  double LossAndGrad(const ModelVector& params, const Dataset& data,
                     std::span<const size_t> rows,
                     ModelVector* grad) const override {
    CheckBatch(*this, params, data, rows, input_dim_, grad);
    if (grad != nullptr) *grad *= 0.0;
    std::vector<double> probs(classes_);
    const double scale = 1.0 / rows.size();
    const size_t bias = classes_ * input_dim_;
    double loss = 0.0;
    for (size_t r : rows) {
      const auto x = data.row(r);
      const size_t label = ClassLabel(data.labels[r], classes_);
      Logits(params, x, probs);
      const double lse = SoftmaxInPlace(probs);
      loss += lse - LogitOf(params, x, label);
      if (grad != nullptr) {
        for (size_t k = 0; k < classes_; ++k) {
          const double g = (probs[k] - (k == label ? 1.0 : 0.0)) * scale;
          for (size_t j = 0; j < input_dim_; ++j) {
            (*grad)[k * input_dim_ + j] += g * x[j];
          }
          (*grad)[bias + k] += g;
        }
      }
    }
    return loss * scale;
  }

  double Predict(const ModelVector& params,
                 std::span<const double> x) const override {
    std::vector<double> logits(classes_);
    Logits(params, x, logits);
    return static_cast<double>(std::max_element(logits.begin(), logits.end()) -
                               logits.begin());
  }

  ModelVector InitialParameters(Rng&) const override {
    return ModelVector(parameter_count());
  }

 private:
  double LogitOf(const ModelVector& params, std::span<const double> x,
                 size_t k) const {
    double z = params[classes_ * input_dim_ + k];
    for (size_t j = 0; j < input_dim_; ++j) z += params[k * input_dim_ + j] * x[j];
    return z;
  }
  void Logits(const ModelVector& params, std::span<const double> x,
              std::span<double> out) const {
    for (size_t k = 0; k < classes_; ++k) out[k] = LogitOf(params, x, k);
  }

  size_t input_dim_;
  size_t classes_;
};

// Layout: W1 (hidden x input), b1 (hidden), W2 (classes x hidden),
// b2 (classes).
class Perceptron final : public Model {
 public:
  Perceptron(size_t input_dim, size_t hidden, size_t classes)
      : input_dim_(input_dim), hidden_(hidden), classes_(classes) {}

  size_t parameter_count() const override {
    return hidden_ * (input_dim_ + 1) + classes_ * (hidden_ + 1);
  }
  bool is_classifier() const override { return true; }

  double LossAndGrad(const ModelVector& params, const Dataset& data,
                     std::span<const size_t> rows,
                     ModelVector* grad) const override {
    CheckBatch(*this, params, data, rows, input_dim_, grad);
    if (grad != nullptr) *grad *= 0.0;
    std::vector<double> act(hidden_);
    std::vector<double> probs(classes_);
    std::vector<double> delta_hidden(hidden_);
    const double scale = 1.0 / rows.size();
    double loss = 0.0;
    for (size_t r : rows) {
      const auto x = data.row(r);
      const size_t label = ClassLabel(data.labels[r], classes_);
      Forward(params, x, act, probs);
      const double true_logit = probs[label];
      const double lse = SoftmaxInPlace(probs);
      loss += lse - true_logit;
      if (grad == nullptr) continue;

      std::fill(delta_hidden.begin(), delta_hidden.end(), 0.0);
      for (size_t k = 0; k < classes_; ++k) {
        const double g = (probs[k] - (k == label ? 1.0 : 0.0)) * scale;
        for (size_t h = 0; h < hidden_; ++h) {
          (*grad)[w2_ + k * hidden_ + h] += g * act[h];
          delta_hidden[h] += g * params[w2_ + k * hidden_ + h];
        }
        (*grad)[b2_ + k] += g;
      }
      for (size_t h = 0; h < hidden_; ++h) {
        const double d = delta_hidden[h] * (1.0 - act[h] * act[h]);
        for (size_t j = 0; j < input_dim_; ++j) {
          (*grad)[h * input_dim_ + j] += d * x[j];
        }
        (*grad)[b1_ + h] += d;
      }
    }
    return loss * scale;
  }

  double Predict(const ModelVector& params,
                 std::span<const double> x) const override {
    std::vector<double> act(hidden_);
    std::vector<double> logits(classes_);
    Forward(params, x, act, logits);
    return static_cast<double>(std::max_element(logits.begin(), logits.end()) -
                               logits.begin());
  }

  ModelVector InitialParameters(Rng& rng) const override {
    ModelVector params(parameter_count());
    const double in_bound = 1.0 / std::sqrt(static_cast<double>(input_dim_));
    const double hid_bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
    for (size_t i = 0; i < w2_; ++i) {
      params[i] = in_bound * (2.0 * rng.Uniform() - 1.0);
    }
    for (size_t i = w2_; i < params.size(); ++i) {
      params[i] = hid_bound * (2.0 * rng.Uniform() - 1.0);
    }
    return params;
  }

 private:
  // Fills tanh activations and output logits.
  void Forward(const ModelVector& params, std::span<const double> x,
               std::span<double> act, std::span<double> logits) const {
    for (size_t h = 0; h < hidden_; ++h) {
      double z = params[b1_ + h];
      for (size_t j = 0; j < input_dim_; ++j) {
        z += params[h * input_dim_ + j] * x[j];
      }
      act[h] = std::tanh(z);
    }
    for (size_t k = 0; k < classes_; ++k) {
      double z = params[b2_ + k];
      for (size_t h = 0; h < hidden_; ++h) {
        z += params[w2_ + k * hidden_ + h] * act[h];
      }
      logits[k] = z;
    }
  }

  size_t input_dim_;
  size_t hidden_;
  size_t classes_;
  size_t b1_ = hidden_ * input_dim_;
  size_t w2_ = b1_ + hidden_;
  size_t b2_ = w2_ + classes_ * hidden_;
};

}  // namespace

ModelKind ParseModelKind(const std::string& name) {
  if (name == "linear" || name == "linear_regression") {
    return ModelKind::kLinearRegression;
  }
  if (name == "logistic" || name == "logistic_regression") {
    return ModelKind::kLogisticRegression;
  }
  if (name == "mlp" || name == "perceptron") return ModelKind::kPerceptron;
  throw InvalidInputError("unknown model kind '" + name + "'");
}

std::string ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLinearRegression:
      return "linear_regression";
    case ModelKind::kLogisticRegression:
      return "logistic_regression";
    case ModelKind::kPerceptron:
      return "perceptron";
  }
  return "unknown";
}

Evaluation Model::Evaluate(const ModelVector& params,
                           const Dataset& data) const {
  Evaluation eval;
  if (data.empty()) {
    eval.loss = std::numeric_limits<double>::quiet_NaN();
    eval.accuracy = std::numeric_limits<double>::quiet_NaN();
    return eval;
  }
  std::vector<size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  eval.loss = LossAndGrad(params, data, rows, nullptr);
  if (!is_classifier()) {
    eval.accuracy = std::numeric_limits<double>::quiet_NaN();
    return eval;
  }
  size_t correct = 0;
  for (size_t r = 0; r < data.size(); ++r) {
    if (Predict(params, data.row(r)) == data.labels[r]) ++correct;
  }
  eval.accuracy = static_cast<double>(correct) / data.size();
  return eval;
}

std::unique_ptr<Model> MakeModel(const ModelShape& shape) {
  if (shape.input_dim == 0) throw InvalidInputError("input_dim must be > 0");
  switch (shape.kind) {
    case ModelKind::kLinearRegression:
      return std::make_unique<LinearRegression>(shape.input_dim);
    case ModelKind::kLogisticRegression:
      if (shape.classes < 2) throw InvalidInputError("classes must be >= 2");
      return std::make_unique<LogisticRegression>(shape.input_dim,
                                                  shape.classes);
    case ModelKind::kPerceptron:
      if (shape.classes < 2) throw InvalidInputError("classes must be >= 2");
      if (shape.hidden == 0) throw InvalidInputError("hidden must be > 0");
      return std::make_unique<Perceptron>(shape.input_dim, shape.hidden,
                                          shape.classes);
  }
  throw InvalidInputError("unknown model kind");
}

}  // namespace dpfl
