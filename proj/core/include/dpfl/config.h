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

// Run configuration: a JSON document, parsed strictly (unknown keys are
// errors) with every default resolved. See configs/ for examples and the
// README for the schema.

#ifndef DPFL_CONFIG_H_
#define DPFL_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpfl/baselines.h"
#include "dpfl/data.h"
#include "dpfl/models.h"

namespace dpfl {

struct DatasetConfig {
  std::string source = "synthetic";  // synthetic | csv
  // synthetic
  size_t dimension = 10;
  size_t classes = 4;
  double separation = 3.0;
  double noise = 1.0;
  size_t samples_per_client = 64;
  // csv
  std::string path;
  std::string label_column;
  std::vector<std::string> categorical_columns;
  std::vector<std::string> ignored_columns;
  std::string missing = "drop";  // drop | impute
  // both
  double test_fraction = 0.2;
  std::string partition = "dirichlet";  // iid | dirichlet
  double beta = 0.1;
};

struct SweepConfig {
  std::vector<std::string> schemes;
  std::vector<uint64_t> seeds;
  std::vector<std::vector<double>> group_budgets;
  std::vector<std::vector<double>> group_saving_rates;
  std::vector<std::vector<int>> group_transition_rounds;
  int parallel = 1;
};

struct RunConfig {
  std::string scheme = "time_adaptive";
  PrivacySpec privacy;  // alpha, delta, clip, q, rounds, clients

  std::vector<double> group_budgets = {12.0, 20.0, 30.0};
  std::vector<double> group_fractions = {0.34, 0.43, 0.23};
  std::vector<double> group_saving_rates = {0.3, 0.5, 0.7};
  std::vector<int> group_transition_rounds = {13, 13, 13};

  std::string model = "logistic";
  size_t hidden = 16;
  DatasetConfig dataset;

  int local_epochs = 3;
  size_t batch_size = 32;
  double learning_rate = 0.1;
  std::string lr_schedule = "constant";  // constant | cosine

  bool permute_rates = false;
  bool repermute_each_round = false;
  double rho = 2.0;

  AdaptiveClipState adaptive;

  uint64_t seed = 0;
  std::string output_dir = "runs";
  int threads = 1;

  SweepConfig sweep;

  // Throws InvalidInputError naming the offending field.
  void Validate() const;
};

RunConfig ParseConfigJson(const nlohmann::json& doc);
RunConfig ParseConfigText(const std::string& text);
// Reads a config file. A relative dataset.path is taken relative to the
// directory holding the file.
RunConfig ParseConfig(const std::string& path);

// Every resolved field, in a stable key order.
nlohmann::json ConfigToJson(const RunConfig& config);

// Client -> group index, from the group fractions and the seed.
std::vector<int> GroupMembership(const RunConfig& config);

SchemeConfig ToSchemeConfig(const RunConfig& config);
ModelShape ToModelShape(const RunConfig& config, const FederatedDataset& data);
FederatedDataset BuildDataset(const RunConfig& config);

}  // namespace dpfl

#endif  // DPFL_CONFIG_H_
