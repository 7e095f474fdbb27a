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

#include "dpfl/baselines.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "dpfl/errors.h"
#include "dpfl/format.h"

namespace dpfl {
namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

void CheckBudgetCount(const PrivacySpec& spec,
                      const std::vector<double>& budgets) {
  if (budgets.empty()) throw InvalidInputError("no client budgets given");
  if (static_cast<int>(budgets.size()) != spec.client_count) {
    throw InvalidInputError("expected " + std::to_string(spec.client_count) +
                            " budgets, got " + std::to_string(budgets.size()));
  }
}

// Every client spends its budget uniformly at rate q.
Schedule UniformSchedule(const PrivacySpec& spec,
                         const std::vector<double>& budgets) {
  std::vector<ClientBudgetState> clients;
  clients.reserve(budgets.size());
  for (size_t i = 0; i < budgets.size(); ++i) {
    clients.push_back(MakeClient(static_cast<int>(i), budgets[i],
                                 spec.spend_rate, 1, spec));
  }
  return BuildSchedule(spec, clients);
}

}  // namespace

SchemeKind ParseSchemeKind(const std::string& name) {
  if (name == "fedavg") return SchemeKind::kFedAvg;
  if (name == "dp_fedavg") return SchemeKind::kDpFedAvg;
  if (name == "idp_fedavg") return SchemeKind::kIdpFedAvg;
  if (name == "adaptive_clip") return SchemeKind::kAdaptiveClip;
  if (name == "time_adaptive") return SchemeKind::kTimeAdaptive;
  throw InvalidInputError("unknown scheme '" + name + "'");
}

std::string SchemeKindName(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::kFedAvg:
      return "fedavg";
    case SchemeKind::kDpFedAvg:
      return "dp_fedavg";
    case SchemeKind::kIdpFedAvg:
      return "idp_fedavg";
    case SchemeKind::kAdaptiveClip:
      return "adaptive_clip";
    case SchemeKind::kTimeAdaptive:
      return "time_adaptive";
  }
  return "unknown";
}

std::vector<SchemeKind> AllSchemes() {
  return {SchemeKind::kFedAvg, SchemeKind::kDpFedAvg, SchemeKind::kIdpFedAvg,
          SchemeKind::kAdaptiveClip, SchemeKind::kTimeAdaptive};
}

Schedule ScheduleFedAvg(const PrivacySpec& spec) {
  spec.Validate();
  Schedule schedule;
  schedule.spec = spec;
  schedule.non_private = true;
  for (int i = 0; i < spec.client_count; ++i) {
    ClientBudgetState c;
    c.client_id = i;
    c.epsilon_dp = kInfinity;
    c.epsilon_rdp_total = kInfinity;
    c.saving_rate = spec.spend_rate;
    c.spent_rdp_cumulative = kInfinity;
    schedule.clients.push_back(c);
  }
  for (int t = 1; t <= spec.rounds; ++t) {
    RoundPlan round;
    round.round = t;
    round.mean_rate = spec.spend_rate;
    round.sigma_global = 0.0;
    ClientRoundPlan plan;
    plan.mode = 1;
    plan.rate = spec.spend_rate;
    plan.sigma = 0.0;
    plan.clip = kInfinity;
    plan.remaining_rdp = kInfinity;
    plan.rdp_spent = kInfinity;
    round.clients.assign(spec.client_count, plan);
    schedule.rounds.push_back(std::move(round));
  }
  return schedule;
}

Schedule ScheduleDpFedAvg(const PrivacySpec& spec,
                          const std::vector<double>& budgets) {
  CheckBudgetCount(spec, budgets);
  const double smallest = *std::min_element(budgets.begin(), budgets.end());
  return UniformSchedule(spec, std::vector<double>(budgets.size(), smallest));
}

Schedule ScheduleIdpFedAvg(const PrivacySpec& spec,
                           const std::vector<double>& budgets) {
  CheckBudgetCount(spec, budgets);
  return UniformSchedule(spec, budgets);
}

Schedule ScheduleTimeAdaptive(const PrivacySpec& spec,
                              const std::vector<double>& budgets,
                              const std::vector<double>& saving_rates,
                              const std::vector<int>& transition_rounds,
                              const TimeAdaptiveOptions& options,
                              PermutationAssignment* permutation) {
  CheckBudgetCount(spec, budgets);
  if (saving_rates.size() != budgets.size() ||
      transition_rounds.size() != budgets.size()) {
    throw InvalidInputError(
        "budgets, saving rates and transition rounds must have one entry per "
        "client");
  }
  std::vector<ClientBudgetState> clients;
  clients.reserve(budgets.size());
  for (size_t i = 0; i < budgets.size(); ++i) {
    clients.push_back(MakeClient(static_cast<int>(i), budgets[i],
                                 saving_rates[i], transition_rounds[i], spec));
  }

  if (options.permute_rates) {
    // Round-1 noise does not depend on the rates, so neither do the clips.
    RoundPlan first;
    first.clients.resize(clients.size());
    for (size_t i = 0; i < clients.size(); ++i) {
      first.clients[i].sigma =
          SolveNoiseMultiplier(clients[i].epsilon_rdp_total, spec.rounds,
                               spec.spend_rate, spec.order());
    }
    AllocateClips(first, spec.clip_mean);
    std::vector<double> clips;
    for (const auto& c : first.clients) clips.push_back(c.clip);
    PermutationAssignment assignment =
        OptimizeRatePermutation(clips, saving_rates, options.rho);
    for (size_t i = 0; i < clients.size(); ++i) {
      clients[i].saving_rate = saving_rates[assignment.rate_of_client[i]];
    }
    if (permutation != nullptr) *permutation = std::move(assignment);
  }

  ScheduleOptions schedule_options;
  schedule_options.repermute_each_round = options.repermute_each_round;
  schedule_options.rho = options.rho;
  return BuildSchedule(spec, clients, schedule_options);
}

AdaptiveClipState AdaptiveClipController(const AdaptiveClipState& state,
                                         std::span<const bool> under_clip,
                                         Rng& rng) {
  if (under_clip.empty()) return state;
  double count = 0.0;
  for (bool b : under_clip) count += b ? 1.0 : 0.0;
  if (state.quantile_noise_std > 0.0) {
    count += state.quantile_noise_std * rng.Gaussian();
  }
  const double fraction = count / static_cast<double>(under_clip.size());
  AdaptiveClipState next = state;
  next.clip =
      state.clip * std::exp(-state.clip_lr * (fraction - state.target_quantile));
  return next;
}

AdaptiveClipPolicy::AdaptiveClipPolicy(const PrivacySpec& spec,
                                       double budget_dp,
                                       const AdaptiveClipState& initial,
                                       const RngStreams& streams)
    : spec_(spec), state_(initial), streams_(streams) {
  spec_.Validate();
  if (!(initial.clip > 0.0)) throw InvalidInputError("initial clip must be > 0");
  if (!(initial.quantile_noise_std > 0.0)) {
    throw InvalidInputError("quantile noise std must be positive");
  }
  quantile_cost_ =
      SgmRdpCost(spec_.spend_rate, initial.quantile_noise_std, spec_.order());
  for (int i = 0; i < spec_.client_count; ++i) {
    clients_.push_back(MakeClient(i, budget_dp, spec_.spend_rate, 1, spec_));
  }
  if (!(clients_.front().epsilon_rdp_total > spec_.rounds * quantile_cost_)) {
    throw BudgetExhaustedError(
        "quantile queries alone exhaust the budget; raise quantile_noise_std");
  }
}

RoundPlan AdaptiveClipPolicy::Plan(int t) {
  const int rounds_left = spec_.rounds - t + 1;
  RoundPlan round;
  round.round = t;
  round.clients.resize(clients_.size());
  for (size_t i = 0; i < clients_.size(); ++i) {
    const ClientBudgetState& c = clients_[i];
    ClientRoundPlan& p = round.clients[i];
    p.mode = 1;
    p.rate = spec_.spend_rate;
    p.remaining_rdp = c.epsilon_rdp_total - c.spent_rdp_cumulative;
    const double available = p.remaining_rdp - rounds_left * quantile_cost_;
    p.sigma = SolveNoiseMultiplier(available, rounds_left, spec_.spend_rate,
                                   spec_.order());
    p.rdp_spent = SgmRdpCost(p.rate, p.sigma, spec_.order());
  }
  AllocateClips(round, state_.clip);
  return round;
}

void AdaptiveClipPolicy::Observe(RoundPlan& plan, const RoundOutcome& outcome) {
  // std::vector<bool> has no contiguous storage to span over.
  const size_t n = outcome.updates.size();
  std::unique_ptr<bool[]> under(new bool[n]);
  size_t sampled = 0;
  for (size_t i = 0; i < n; ++i) {
    const ClientUpdate& u = outcome.updates[i];
    if (u.sampled && u.status == ClientStatus::kOk) {
      under[sampled++] = u.raw.Norm() <= state_.clip;
      plan.clients[i].extra_rdp = quantile_cost_;
      plan.clients[i].rdp_spent += quantile_cost_;
    }
  }
  for (size_t i = 0; i < clients_.size(); ++i) {
    clients_[i].spent_rdp_cumulative += plan.clients[i].rdp_spent;
  }
  Rng rng = streams_.Stream(RngStreams::Purpose::kQuantileNoise, 0,
                            static_cast<uint64_t>(plan.round));
  state_ = AdaptiveClipController(
      state_, std::span<const bool>(under.get(), sampled), rng);
  clip_history_.push_back(state_.clip);
  executed_.push_back(plan);
}

Schedule AdaptiveClipPolicy::RealizedSchedule() const {
  Schedule schedule;
  schedule.spec = spec_;
  schedule.clients = clients_;
  schedule.rounds = executed_;
  return schedule;
}

Schedule ScheduleAdaptiveClipWorstCase(const PrivacySpec& spec,
                                       double budget_dp,
                                       const AdaptiveClipState& initial) {
  AdaptiveClipState frozen = initial;
  frozen.clip_lr = 0.0;
  AdaptiveClipPolicy policy(spec, budget_dp, frozen, RngStreams(0));
  for (int t = 1; t <= spec.rounds; ++t) {
    RoundPlan plan = policy.Plan(t);
    RoundOutcome all_sampled;
    all_sampled.round = t;
    all_sampled.updates.resize(spec.client_count);
    for (ClientUpdate& u : all_sampled.updates) {
      u.sampled = true;
      u.status = ClientStatus::kOk;
    }
    policy.Observe(plan, all_sampled);
  }
  return policy.RealizedSchedule();
}

Schedule PlanScheme(const SchemeConfig& config,
                    PermutationAssignment* permutation) {
  const PrivacySpec& spec = config.spec;
  switch (config.kind) {
    case SchemeKind::kFedAvg:
      return ScheduleFedAvg(spec);
    case SchemeKind::kDpFedAvg:
      return ScheduleDpFedAvg(spec, config.budgets);
    case SchemeKind::kIdpFedAvg:
      return ScheduleIdpFedAvg(spec, config.budgets);
    case SchemeKind::kTimeAdaptive:
      return ScheduleTimeAdaptive(spec, config.budgets, config.saving_rates,
                                  config.transition_rounds,
                                  config.time_adaptive, permutation);
    case SchemeKind::kAdaptiveClip: {
      CheckBudgetCount(spec, config.budgets);
      const double budget = config.budgets.front();
      for (double b : config.budgets) {
        if (b != budget) {
          throw InvalidInputError(
              "adaptive_clip requires a uniform privacy budget; got " +
              FormatDouble(budget) + " and " + FormatDouble(b));
        }
      }
      AdaptiveClipState initial = config.adaptive;
      initial.clip = spec.clip_mean;
      return ScheduleAdaptiveClipWorstCase(spec, budget, initial);
    }
  }
  throw InvalidInputError("unknown scheme");
}

SchemeResult RunScheme(const SchemeConfig& config, const Model& model,
                       const FederatedDataset& data) {
  SchemeResult result;
  const RngStreams streams(config.seed);
  if (static_cast<int>(data.shards.size()) != config.spec.client_count) {
    throw InvalidInputError("dataset has " +
                            std::to_string(data.shards.size()) +
                            " shards, config expects " +
                            std::to_string(config.spec.client_count));
  }
  if (config.kind == SchemeKind::kAdaptiveClip) {
    PlanScheme(config);  // validates the uniform budget
    AdaptiveClipState initial = config.adaptive;
    initial.clip = config.spec.clip_mean;
    AdaptiveClipPolicy policy(config.spec, config.budgets.front(), initial,
                              streams);
    EngineConfig engine = config.engine;
    engine.server_lr = initial.server_lr;
    engine.server_momentum = initial.server_momentum;
    result.train = Train(model, policy, data, engine, streams);
    result.schedule = policy.RealizedSchedule();
    result.clip_history = policy.clip_history();
  } else {
    PermutationAssignment permutation;
    result.schedule = PlanScheme(config, &permutation);
    if (config.kind == SchemeKind::kTimeAdaptive &&
        config.time_adaptive.permute_rates) {
      result.permutation = permutation;
    }
    StaticSchedulePolicy policy(result.schedule);
    result.train = Train(model, policy, data, config.engine, streams);
  }
  result.adherence = VerifyBudgetAdherence(result.schedule, config.spec.delta);
  return result;
}

}  // namespace dpfl
