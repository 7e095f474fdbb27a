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

#ifndef DPFL_MODELS_H_
#define DPFL_MODELS_H_

#include <memory>
#include <span>
#include <string>

#include "dpfl/data.h"
#include "dpfl/model_vector.h"
#include "dpfl/rng.h"

namespace dpfl {

enum class ModelKind {
  kLinearRegression,
  kLogisticRegression,  // multinomial, softmax cross-entropy
  kPerceptron,          // one tanh hidden layer, softmax output
};

ModelKind ParseModelKind(const std::string& name);
std::string ModelKindName(ModelKind kind);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;  // NaN for regression
};

// Differentiable model over flat parameters. Implementations are stateless
// and safe to share across threads.
class Model {
 public:
  virtual ~Model() = default;

  virtual size_t parameter_count() const = 0;
  virtual bool is_classifier() const = 0;

  // Mean loss over `rows`; writes the exact mean gradient into `grad` when
  // it is non-null. Throws InvalidInputError on an empty batch or mismatched
  // dimensions.
  virtual double LossAndGrad(const ModelVector& params, const Dataset& data,
                             std::span<const size_t> rows,
                             ModelVector* grad) const = 0;

  // Arg-max class for classifiers, prediction for regressors.
  virtual double Predict(const ModelVector& params,
                         std::span<const double> features) const = 0;

  virtual ModelVector InitialParameters(Rng& rng) const = 0;

  Evaluation Evaluate(const ModelVector& params, const Dataset& data) const;
};

struct ModelShape {
  ModelKind kind = ModelKind::kLogisticRegression;
  size_t input_dim = 0;
  size_t classes = 2;  // ignored by linear regression
  size_t hidden = 16;  // perceptron only
};

std::unique_ptr<Model> MakeModel(const ModelShape& shape);

}  // namespace dpfl

#endif  // DPFL_MODELS_H_
