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

// Pre-training privacy scheduling.
//
// BuildSchedule turns per-client budgets into a full T-round plan: which
// rate each client is sampled at, its noise multiplier, its clip norm and
// what it spends. The plan depends only on budgets and hyperparameters,
// never on data, so computing it costs no privacy.

#ifndef DPFL_SCHEDULER_H_
#define DPFL_SCHEDULER_H_

#include <cstdint>
#include <ostream>
#include <vector>

#include "dpfl/rdp_accountant.h"

namespace dpfl {

struct PrivacySpec {
  double alpha = 2.0;
  double delta = 1e-5;
  double clip_mean = 1.0;   // c
  double spend_rate = 0.9;  // q
  int rounds = 25;          // T
  int client_count = 30;    // N

  RdpOrder order() const { return RdpOrder(alpha); }
  // Throws InvalidInputError naming the offending field.
  void Validate() const;
};

struct ClientBudgetState {
  int client_id = 0;
  double epsilon_dp = 0.0;
  double epsilon_rdp_total = 0.0;
  double saving_rate = 0.0;  // q_n
  int transition_round = 1;  // T_n
  double spent_rdp_cumulative = 0.0;
};

// Converts the DP budget to RDP at spec.alpha and validates q_n <= q.
ClientBudgetState MakeClient(int client_id, double epsilon_dp,
                             double saving_rate, int transition_round,
                             const PrivacySpec& spec);

// 0 while saving (t < T_n), 1 while spending.
int Mode(const ClientBudgetState& client, int t);

struct ClientRoundPlan {
  int mode = 1;
  double rate = 0.0;           // q_n^t
  double sigma = 0.0;          // sigma_n^t
  double clip = 0.0;           // c_n^t
  double remaining_rdp = 0.0;  // budget left at the start of the round
  double rdp_spent = 0.0;      // update cost + extra_rdp
  double extra_rdp = 0.0;      // side mechanisms (quantile estimation)
};

struct RoundPlan {
  int round = 1;
  std::vector<ClientRoundPlan> clients;
  double sigma_global = 0.0;  // N / sum_n (1 / sigma_n^t)
  double mean_rate = 0.0;     // q^t
};

struct Schedule {
  PrivacySpec spec;
  std::vector<ClientBudgetState> clients;  // final cumulative spend
  std::vector<RoundPlan> rounds;
  bool non_private = false;
};

struct ScheduleOptions {
  // Reassign the saving rates to clients every round by clip order instead
  // of using each client's own saving_rate.
  bool repermute_each_round = false;
  double rho = 2.0;
};

// Global noise multiplier and per-client clips whose mean is `clip_mean`
// and whose products clip_n * sigma_n all equal clip_mean * sigma_global.
void AllocateClips(RoundPlan& round, double clip_mean);

Schedule BuildSchedule(const PrivacySpec& spec,
                       const std::vector<ClientBudgetState>& clients,
                       const ScheduleOptions& options = {});

struct ClientAdherence {
  int client_id = 0;
  double spent_rdp = 0.0;
  double spent_dp = 0.0;
  double budget_dp = 0.0;
  double slack = 0.0;  // budget_dp - spent_dp
  bool violated = false;
};

struct AdherenceReport {
  std::vector<ClientAdherence> clients;
  bool ok = true;
  bool non_private = false;  // nothing was accounted
};

// Recomputes every client's spend from the scheduled (rate, sigma) pairs and
// compares it against the DP budget with a 1e-6 tolerance. Never throws on
// a violation; the offending client is flagged.
AdherenceReport VerifyBudgetAdherence(const Schedule& schedule, double delta);

// Cumulative DP epsilon of client n after each round.
std::vector<double> CumulativeDpSpend(const Schedule& schedule, size_t client,
                                      double delta);

// Deterministic group membership: exact group sizes from the fractions
// (largest remainder), then a seeded shuffle of the client order.
std::vector<int> AssignGroups(int client_count,
                              const std::vector<double>& fractions,
                              uint64_t seed);

// round,client,mode,q,sigma,clip,rdp_spent_this_round,rdp_remaining
void WriteScheduleCsv(std::ostream& out, const Schedule& schedule);
// round,client,dp_spent_this_round,dp_spent_cumulative
void WriteSpendCurveCsv(std::ostream& out, const Schedule& schedule,
                        double delta);
// client,spent_rdp,spent_dp,budget_dp,slack,violated
void WriteAdherenceCsv(std::ostream& out, const AdherenceReport& report);

}  // namespace dpfl

#endif  // DPFL_SCHEDULER_H_
