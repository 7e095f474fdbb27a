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

// The time-adaptive scheme and the reference schemes it is compared with.
// All of them run on the same engine and differ only in their round plans.

#ifndef DPFL_BASELINES_H_
#define DPFL_BASELINES_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpfl/fl_engine.h"
#include "dpfl/sampling_opt.h"
#include "dpfl/scheduler.h"

namespace dpfl {

enum class SchemeKind {
  kFedAvg,        // no clipping, no noise
  kDpFedAvg,      // everyone gets the smallest budget
  kIdpFedAvg,     // individual budgets spent uniformly
  kAdaptiveClip,  // uniform budget, clip tracks an update-norm quantile
  kTimeAdaptive,  // save early at reduced rates, spend later
};

SchemeKind ParseSchemeKind(const std::string& name);
std::string SchemeKindName(SchemeKind kind);
std::vector<SchemeKind> AllSchemes();

// Clip +inf, sigma 0, every client at rate q. Marked non-private.
Schedule ScheduleFedAvg(const PrivacySpec& spec);

Schedule ScheduleDpFedAvg(const PrivacySpec& spec,
                          const std::vector<double>& budgets);

Schedule ScheduleIdpFedAvg(const PrivacySpec& spec,
                           const std::vector<double>& budgets);

struct TimeAdaptiveOptions {
  // Reassign the saving rates across clients so that smaller round-1 clip
  // norms get smaller rates.
  bool permute_rates = false;
  bool repermute_each_round = false;
  double rho = 2.0;
};

Schedule ScheduleTimeAdaptive(const PrivacySpec& spec,
                              const std::vector<double>& budgets,
                              const std::vector<double>& saving_rates,
                              const std::vector<int>& transition_rounds,
                              const TimeAdaptiveOptions& options = {},
                              PermutationAssignment* permutation = nullptr);

struct AdaptiveClipState {
  double clip = 1.0;                // c^t
  double target_quantile = 0.5;     // gamma
  double clip_lr = 0.2;             // eta_c
  double server_lr = 1.0;           // lambda_s
  double server_momentum = 0.0;     // beta_s
  double quantile_noise_std = 10.0; // sigma_b
};

// Geometric quantile step: with m = under_clip.size() sampled clients,
// b = (#under + N(0, sigma_b^2)) / m and clip <- clip * exp(-eta (b - gamma)).
// With no sampled clients the state is returned unchanged.
AdaptiveClipState AdaptiveClipController(const AdaptiveClipState& state,
                                         std::span<const bool> under_clip,
                                         Rng& rng);

// Round plans for adaptive clipping under one uniform budget. Every round
// reserves the worst-case cost of the remaining quantile queries, solves
// the update noise from what is left, and charges the quantile query to
// the clients that were actually sampled.
class AdaptiveClipPolicy final : public RoundPolicy {
 public:
  AdaptiveClipPolicy(const PrivacySpec& spec, double budget_dp,
                     const AdaptiveClipState& initial,
                     const RngStreams& streams);

  int rounds() const override { return spec_.rounds; }
  RoundPlan Plan(int t) override;
  void Observe(RoundPlan& plan, const RoundOutcome& outcome) override;

  const AdaptiveClipState& state() const { return state_; }
  const std::vector<double>& clip_history() const { return clip_history_; }
  // Plans as executed, with quantile charges filled in.
  Schedule RealizedSchedule() const;
  double quantile_cost() const { return quantile_cost_; }

 private:
  PrivacySpec spec_;
  std::vector<ClientBudgetState> clients_;
  AdaptiveClipState state_;
  RngStreams streams_;
  double quantile_cost_;
  std::vector<double> clip_history_;
  std::vector<RoundPlan> executed_;
};

// Data-independent projection of the adaptive-clipping schedule with a
// fixed clip and every quantile query charged to every client.
Schedule ScheduleAdaptiveClipWorstCase(const PrivacySpec& spec,
                                       double budget_dp,
                                       const AdaptiveClipState& initial);

struct SchemeConfig {
  SchemeKind kind = SchemeKind::kTimeAdaptive;
  PrivacySpec spec;
  std::vector<double> budgets;         // epsilon_n, DP
  std::vector<double> saving_rates;    // q_n
  std::vector<int> transition_rounds;  // T_n
  TimeAdaptiveOptions time_adaptive;
  AdaptiveClipState adaptive;
  EngineConfig engine;
  uint64_t seed = 0;
};

struct SchemeResult {
  Schedule schedule;  // as executed
  TrainResult train;
  AdherenceReport adherence;
  std::optional<PermutationAssignment> permutation;
  std::vector<double> clip_history;  // adaptive clipping only
};

// The pre-training schedule of a scheme.
Schedule PlanScheme(const SchemeConfig& config,
                    PermutationAssignment* permutation = nullptr);

SchemeResult RunScheme(const SchemeConfig& config, const Model& model,
                       const FederatedDataset& data);

}  // namespace dpfl

#endif  // DPFL_BASELINES_H_
