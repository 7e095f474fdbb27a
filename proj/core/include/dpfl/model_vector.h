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

#ifndef DPFL_MODEL_VECTOR_H_
#define DPFL_MODEL_VECTOR_H_

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace dpfl {

// Flat parameter vector: a model, an update, or a perturbed update.
class ModelVector {
 public:
  ModelVector() = default;
  explicit ModelVector(size_t dimension) : values_(dimension, 0.0) {}
  explicit ModelVector(std::vector<double> values)
      : values_(std::move(values)) {}
  ModelVector(std::initializer_list<double> values) : values_(values) {}

  size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator[](size_t i) { return values_[i]; }
  double operator[](size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double Norm() const {
    double sum = 0.0;
    for (double v : values_) sum += v * v;
    return std::sqrt(sum);
  }

  // this += scale * other
  void AddScaled(const ModelVector& other, double scale) {
    for (size_t i = 0; i < values_.size(); ++i) {
      values_[i] += scale * other.values_[i];
    }
  }

  ModelVector& operator+=(const ModelVector& other) {
    AddScaled(other, 1.0);
    return *this;
  }
  ModelVector& operator-=(const ModelVector& other) {
    AddScaled(other, -1.0);
    return *this;
  }
  ModelVector& operator*=(double scale) {
    for (double& v : values_) v *= scale;
    return *this;
  }

  bool AllFinite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const ModelVector&, const ModelVector&) = default;

 private:
  std::vector<double> values_;
};

inline ModelVector operator+(ModelVector a, const ModelVector& b) {
  a += b;
  return a;
}
inline ModelVector operator-(ModelVector a, const ModelVector& b) {
  a -= b;
  return a;
}
inline ModelVector operator*(ModelVector a, double s) {
  a *= s;
  return a;
}

}  // namespace dpfl

#endif  // DPFL_MODEL_VECTOR_H_
