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

#include "dpfl/sampling_opt.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <string>

#include "dpfl/errors.h"
#include "dpfl/fl_engine.h"

namespace dpfl {
namespace {

void CheckRho(double rho) {
  if (!(rho > 1.0)) {
    throw DomainError("moment order rho must be > 1, got " +
                      std::to_string(rho));
  }
}

bool AllEqual(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) ==
         v.end();
}

struct McAccumulator {
  std::vector<double> sum;
  std::vector<double> sum_sq;
  size_t draws = 0;
};

McAccumulator RunBiasReplica(const BiasMcConfig& config, size_t draws,
                             Rng rng) {
  const size_t n = config.rates.size();
  const size_t dim = config.dimension;
  const double mean_rate =
      std::accumulate(config.rates.begin(), config.rates.end(), 0.0) / n;
  const double inv_root_n = 1.0 / std::sqrt(static_cast<double>(n));

  McAccumulator acc;
  acc.sum.assign(dim, 0.0);
  acc.sum_sq.assign(dim, 0.0);
  std::vector<size_t> budget_of_client(n);
  for (size_t draw = 0; draw < draws; ++draw) {
    std::iota(budget_of_client.begin(), budget_of_client.end(), 0);
    if (config.permute_budgets) rng.Shuffle(budget_of_client);

    ModelVector reference(dim);
    ModelVector perturbed(dim);
    for (size_t c = 0; c < n; ++c) {
      const ModelVector update = config.draw_update(c, rng);
      if (update.size() != dim) {
        throw InvalidInputError("sampled update has wrong dimension");
      }
      reference += update;
      const size_t b = budget_of_client[c];
      const double noise_std = config.sigmas[b] * config.clips[b] * inv_root_n;
      if (rng.Bernoulli(config.rates[b])) {
        perturbed += ClipUpdate(update, config.clips[b]);
      }
      for (size_t j = 0; j < dim; ++j) perturbed[j] += noise_std * rng.Gaussian();
    }
    reference *= 1.0 / n;
    perturbed *= 1.0 / (n * mean_rate);
    for (size_t j = 0; j < dim; ++j) {
      const double e = reference[j] - perturbed[j];
      acc.sum[j] += e;
      acc.sum_sq[j] += e * e;
    }
    ++acc.draws;
  }
  return acc;
}

}  // namespace

double BiasBoundInput::MeanRate() const {
  return std::accumulate(rates.begin(), rates.end(), 0.0) / rates.size();
}

void BiasBoundInput::Validate() const {
  CheckRho(rho);
  const size_t n = rates.size();
  if (n == 0 || clips.size() != n || moments.size() != n ||
      mean_updates.size() != n) {
    throw InvalidInputError("bias bound inputs must be non-empty and aligned");
  }
  for (size_t i = 0; i < n; ++i) {
    if (!(clips[i] > 0.0)) throw DomainError("clip norms must be positive");
    if (!(rates[i] > 0.0 && rates[i] <= 1.0)) {
      throw DomainError("sampling rates must lie in (0, 1]");
    }
    if (mean_updates[i].size() != mean_updates[0].size()) {
      throw InvalidInputError("mean updates differ in dimension");
    }
  }
}

double ClippingBiasBound(double moment_rho, double clip, double rho) {
  CheckRho(rho);
  if (!(clip > 0.0)) throw DomainError("clip norm must be positive");
  return moment_rho / std::pow(clip, rho - 1.0);
}

double BiasBoundFixedAssignment(const BiasBoundInput& input) {
  input.Validate();
  const size_t n = input.rates.size();
  const double mean_rate = input.MeanRate();
  ModelVector drift(input.mean_updates[0].size());
  double clipping = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double weight = input.rates[i] / mean_rate;
    drift.AddScaled(input.mean_updates[i], 1.0 - weight);
    clipping += weight * ClippingBiasBound(input.moments[i], input.clips[i],
                                           input.rho);
  }
  return drift.Norm() / n + clipping / n;
}

double BiasBoundRandomAssignment(const BiasBoundInput& input) {
  input.Validate();
  const size_t n = input.rates.size();
  const double mean_rate = input.MeanRate();
  const double moment_sum =
      std::accumulate(input.moments.begin(), input.moments.end(), 0.0);
  // Written per client so that N = 1 reproduces ClippingBiasBound exactly.
  double weighted = 0.0;
  for (size_t i = 0; i < n; ++i) {
    weighted += (input.rates[i] / mean_rate) *
                ClippingBiasBound(moment_sum, input.clips[i], input.rho);
  }
  return weighted / (static_cast<double>(n) * n);
}

double PermutationObjective(const std::vector<double>& clips,
                            const std::vector<double>& rates,
                            const std::vector<size_t>& rate_of_client,
                            double rho) {
  double objective = 0.0;
  for (size_t c = 0; c < clips.size(); ++c) {
    objective += rates[rate_of_client[c]] / std::pow(clips[c], rho - 1.0);
  }
  return objective;
}

PermutationAssignment OptimizeRatePermutation(const std::vector<double>& clips,
                                              const std::vector<double>& rates,
                                              double rho) {
  CheckRho(rho);
  if (clips.size() != rates.size()) {
    throw InvalidInputError("clip and rate lists differ in length (" +
                            std::to_string(clips.size()) + " vs " +
                            std::to_string(rates.size()) + ")");
  }
  for (size_t i = 0; i < clips.size(); ++i) {
    if (!(clips[i] > 0.0) || !(rates[i] > 0.0)) {
      throw DomainError("clips and rates must be positive");
    }
  }
  const size_t n = clips.size();
  PermutationAssignment result;
  result.rate_of_client.resize(n);
  std::iota(result.rate_of_client.begin(), result.rate_of_client.end(), 0);

  if (!AllEqual(clips) && !AllEqual(rates)) {
    // Rearrangement: weights 1/c^(rho-1) descend as clips ascend, so the
    // smallest rate goes to the smallest clip.
    std::vector<size_t> clients_by_clip(n);
    std::vector<size_t> rates_ascending(n);
    std::iota(clients_by_clip.begin(), clients_by_clip.end(), 0);
    std::iota(rates_ascending.begin(), rates_ascending.end(), 0);
    std::stable_sort(clients_by_clip.begin(), clients_by_clip.end(),
                     [&](size_t a, size_t b) { return clips[a] < clips[b]; });
    std::stable_sort(rates_ascending.begin(), rates_ascending.end(),
                     [&](size_t a, size_t b) { return rates[a] < rates[b]; });
    for (size_t k = 0; k < n; ++k) {
      result.rate_of_client[clients_by_clip[k]] = rates_ascending[k];
    }
  }
  result.client_of_rate.resize(n);
  for (size_t c = 0; c < n; ++c) {
    result.client_of_rate[result.rate_of_client[c]] = c;
  }
  result.objective =
      PermutationObjective(clips, rates, result.rate_of_client, rho);
  return result;
}

UpdateMoments EstimateUpdateMoments(const UpdateSampler& sampler,
                                    size_t clients, size_t samples, double rho,
                                    uint64_t seed) {
  CheckRho(rho);
  if (samples < 1) throw InvalidInputError("need at least one sample");
  const RngStreams streams(seed);
  UpdateMoments out;
  out.moments.assign(clients, 0.0);
  out.means.resize(clients);
  for (size_t c = 0; c < clients; ++c) {
    Rng rng = streams.Stream(RngStreams::Purpose::kMonteCarlo, c);
    for (size_t s = 0; s < samples; ++s) {
      const ModelVector update = sampler(c, rng);
      if (out.means[c].empty()) out.means[c] = ModelVector(update.size());
      out.means[c] += update;
      out.moments[c] += std::pow(update.Norm(), rho);
    }
    out.means[c] *= 1.0 / samples;
    out.moments[c] /= samples;
  }
  return out;
}

BiasMcResult EstimateBiasMc(const BiasMcConfig& config, size_t draws,
                            uint64_t seed, size_t replicas) {
  if (draws < 2) throw InvalidInputError("Monte Carlo needs at least 2 draws");
  const size_t n = config.rates.size();
  if (n == 0 || config.clips.size() != n || config.sigmas.size() != n) {
    throw InvalidInputError("Monte Carlo rates, clips and sigmas must align");
  }
  if (!config.draw_update) throw InvalidInputError("missing update sampler");
  replicas = std::clamp<size_t>(replicas, 1, draws);

  const RngStreams streams(seed);
  std::vector<std::future<McAccumulator>> jobs;
  jobs.reserve(replicas);
  for (size_t r = 0; r < replicas; ++r) {
    const size_t share = draws / replicas + (r < draws % replicas ? 1 : 0);
    jobs.push_back(std::async(
        std::launch::async, RunBiasReplica, std::cref(config), share,
        streams.Stream(RngStreams::Purpose::kMonteCarlo, r)));
  }

  const size_t dim = config.dimension;
  std::vector<double> sum(dim, 0.0);
  std::vector<double> sum_sq(dim, 0.0);
  size_t total = 0;
  for (auto& job : jobs) {
    const McAccumulator acc = job.get();
    for (size_t j = 0; j < dim; ++j) {
      sum[j] += acc.sum[j];
      sum_sq[j] += acc.sum_sq[j];
    }
    total += acc.draws;
  }

  BiasMcResult result;
  result.draws = total;
  result.mean_error = ModelVector(dim);
  result.standard_error = ModelVector(dim);
  double se_sq = 0.0;
  for (size_t j = 0; j < dim; ++j) {
    const double mean = sum[j] / total;
    const double var =
        std::max(0.0, (sum_sq[j] - total * mean * mean) / (total - 1));
    result.mean_error[j] = mean;
    result.standard_error[j] = std::sqrt(var / total);
    se_sq += var / total;
  }
  result.bias_norm = result.mean_error.Norm();
  result.norm_standard_error = std::sqrt(se_sq);
  return result;
}

}  // namespace dpfl
