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

// Clipping-bias bounds for heterogeneous clip norms and sampling rates, the
// rate-to-client assignment that minimizes the budget-averaged bound, and a
// Monte Carlo estimator of the true aggregation bias used to check them.

#ifndef DPFL_SAMPLING_OPT_H_
#define DPFL_SAMPLING_OPT_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "dpfl/model_vector.h"
#include "dpfl/rng.h"

namespace dpfl {

struct BiasBoundInput {
  std::vector<double> rates;               // q_n^t
  std::vector<double> clips;               // c_n^t
  double rho = 2.0;                        // moment order, > 1
  std::vector<double> moments;             // E||update_n||^rho
  std::vector<ModelVector> mean_updates;   // E[update_n]

  double MeanRate() const;
  // Throws InvalidInputError/DomainError on violated invariants.
  void Validate() const;
};

// Bias of clipping one update at `clip`, bounded by its rho-th moment.
double ClippingBiasBound(double moment_rho, double clip, double rho);

// Bound holding for a fixed assignment of budgets to clients. The first
// term vanishes when all rates are equal.
double BiasBoundFixedAssignment(const BiasBoundInput& input);

// Bound averaged over random assignments of budgets to clients; depends on
// the data only through the summed moments.
double BiasBoundRandomAssignment(const BiasBoundInput& input);

struct PermutationAssignment {
  // rate_of_client[n] indexes the input rate list; client_of_rate is its
  // inverse.
  std::vector<size_t> rate_of_client;
  std::vector<size_t> client_of_rate;
  // sum_n rates[rate_of_client[n]] / clips[n]^(rho - 1)
  double objective = 0.0;
};

double PermutationObjective(const std::vector<double>& clips,
                            const std::vector<double>& rates,
                            const std::vector<size_t>& rate_of_client,
                            double rho);

// Pairs the smallest rates with the smallest clip norms. Returns the
// identity when all clips or all rates are equal.
PermutationAssignment OptimizeRatePermutation(const std::vector<double>& clips,
                                              const std::vector<double>& rates,
                                              double rho);

// Draws one local update for a client (data randomness).
using UpdateSampler = std::function<ModelVector(size_t client, Rng& rng)>;

struct UpdateMoments {
  std::vector<double> moments;
  std::vector<ModelVector> means;
};

UpdateMoments EstimateUpdateMoments(const UpdateSampler& sampler,
                                    size_t clients, size_t samples, double rho,
                                    uint64_t seed);

struct BiasMcConfig {
  std::vector<double> rates;
  std::vector<double> clips;
  std::vector<double> sigmas;  // per-client noise multipliers
  size_t dimension = 0;
  UpdateSampler draw_update;
  // Randomly reassign (rate, clip, sigma) triples to clients on every draw.
  bool permute_budgets = false;
};

struct BiasMcResult {
  ModelVector mean_error;
  ModelVector standard_error;  // per coordinate
  double bias_norm = 0.0;      // ||mean_error||
  double norm_standard_error = 0.0;
  size_t draws = 0;
};

// Monte Carlo estimate of E[full-participation update - private update].
// Replicas run concurrently and are merged in replica order, so the result
// only depends on (seed, draws, replicas).
BiasMcResult EstimateBiasMc(const BiasMcConfig& config, size_t draws,
                            uint64_t seed, size_t replicas = 1);

}  // namespace dpfl

#endif  // DPFL_SAMPLING_OPT_H_
