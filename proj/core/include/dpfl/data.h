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

// Datasets and their federated partitioning.

#ifndef DPFL_DATA_H_
#define DPFL_DATA_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dpfl {

// Row-major feature matrix with one label per row. Classification labels
// are class indices stored as doubles.
struct Dataset {
  size_t feature_dim = 0;
  std::vector<double> features;
  std::vector<double> labels;

  size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::span<const double> row(size_t i) const {
    return {features.data() + i * feature_dim, feature_dim};
  }
  void Append(std::span<const double> x, double y);
  Dataset Subset(std::span<const size_t> rows) const;
  // Number of classes assuming labels are 0..K-1.
  size_t ClassCount() const;
};

enum class PartitionKind { kIid, kDirichlet };

struct PartitionDescriptor {
  PartitionKind kind = PartitionKind::kIid;
  double beta = 0.1;  // Dirichlet concentration
};

struct FederatedDataset {
  std::vector<Dataset> shards;
  Dataset test;
  // Row indices into the source dataset.
  std::vector<std::vector<size_t>> shard_rows;
  std::vector<size_t> test_rows;
  PartitionDescriptor partition;
  size_t source_size = 0;
};

// Uniformly random equal-size split of all rows.
FederatedDataset PartitionIid(const Dataset& data, size_t clients,
                              uint64_t seed);

// Label-skewed split: per class, client proportions drawn from
// Dirichlet(beta * 1). Empty shards are repaired by moving single samples
// from the largest shard. The test set is left empty.
FederatedDataset PartitionDirichlet(const Dataset& data, size_t clients,
                                    double beta, uint64_t seed);

// Holds out `test_fraction` of the rows as the global test set and
// partitions the rest. With `standardize`, features are standardized with
// statistics of the training rows.
FederatedDataset Federate(const Dataset& source, size_t clients,
                          const PartitionDescriptor& partition,
                          double test_fraction, uint64_t seed,
                          bool standardize = false);

struct SyntheticTaskSpec {
  size_t dimension = 10;
  size_t classes = 2;
  double separation = 4.0;  // distance scale of the class centers
  double noise = 1.0;       // per-coordinate std around a center
  size_t samples_per_client = 100;
  size_t clients = 30;
  uint64_t seed = 0;
  double test_fraction = 0.2;
};

// Gaussian class clusters. Centers are separation/2 times random unit
// directions; samples per class are balanced.
Dataset MakeSyntheticSource(const SyntheticTaskSpec& spec);

FederatedDataset MakeSynthetic(const SyntheticTaskSpec& spec,
                               const PartitionDescriptor& partition);

struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<size_t> constant_columns;  // stddev clamped to 1
};

Standardization FitStandardization(const Dataset& data);
void ApplyStandardization(const Standardization& s, Dataset& data);

enum class MissingPolicy { kDrop, kImputeMean };

struct CsvSchema {
  std::string label_column;
  std::vector<std::string> categorical_columns;
  std::vector<std::string> ignored_columns;
  MissingPolicy missing = MissingPolicy::kDrop;
  bool standardize = true;
};

struct CsvData {
  Dataset data;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;  // empty for numeric labels
  std::vector<size_t> constant_columns;
  size_t dropped_rows = 0;
};

// Header row required. Categorical columns are one-hot encoded (levels in
// sorted order); missing fields ("", "?", "NA") are dropped or imputed with
// the column mean (numeric) or most frequent level (categorical). A
// non-numeric label column becomes class indices. Malformed rows throw
// InvalidInputError naming the line.
CsvData LoadCsv(const std::string& path, const CsvSchema& schema);
CsvData ParseCsv(const std::string& text, const CsvSchema& schema);

}  // namespace dpfl

#endif  // DPFL_DATA_H_
