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

#include "dpfl/scheduler.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dpfl/errors.h"
#include "dpfl/format.h"
#include "dpfl/rng.h"
#include "dpfl/sampling_opt.h"

namespace dpfl {
namespace {

constexpr double kAdherenceTolerance = 1e-6;
constexpr double kRoundOffFloor = -1e-12;

}  // namespace

void PrivacySpec::Validate() const {
  if (!(alpha > 1.0)) throw InvalidInputError("alpha: must be > 1");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidInputError("delta: must lie in (0, 1)");
  }
  if (!(clip_mean > 0.0)) throw InvalidInputError("clip: must be positive");
  if (!(spend_rate > 0.0 && spend_rate <= 1.0)) {
    throw InvalidInputError("q: must lie in (0, 1]");
  }
  if (rounds < 1) throw InvalidInputError("rounds: must be at least 1");
  if (client_count < 1) throw InvalidInputError("clients: must be at least 1");
}

ClientBudgetState MakeClient(int client_id, double epsilon_dp,
                             double saving_rate, int transition_round,
                             const PrivacySpec& spec) {
  if (saving_rate > spec.spend_rate) {
    throw InvalidSavingRateError(
        "client " + std::to_string(client_id) + ": saving rate " +
        std::to_string(saving_rate) + " exceeds spending rate " +
        std::to_string(spec.spend_rate));
  }
  if (!(saving_rate > 0.0)) {
    throw InvalidSavingRateError("client " + std::to_string(client_id) +
                                 ": saving rate must be positive");
  }
  if (transition_round < 1 || transition_round > spec.rounds) {
    throw InvalidInputError("client " + std::to_string(client_id) +
                            ": transition round outside [1, T]");
  }
  ClientBudgetState client;
  client.client_id = client_id;
  client.epsilon_dp = epsilon_dp;
  client.epsilon_rdp_total =
      DpToRdp(DpBudget{epsilon_dp, spec.delta}, spec.order()).epsilon_rdp;
  client.saving_rate = saving_rate;
  client.transition_round = transition_round;
  return client;
}

int Mode(const ClientBudgetState& client, int t) {
  return t < client.transition_round ? 0 : 1;
}

void AllocateClips(RoundPlan& round, double clip_mean) {
  const size_t n = round.clients.size();
  double inverse_sum = 0.0;
  double rate_sum = 0.0;
  for (const ClientRoundPlan& c : round.clients) {
    inverse_sum += 1.0 / c.sigma;
    rate_sum += c.rate;
  }
  round.sigma_global = n / inverse_sum;
  round.mean_rate = rate_sum / n;
  for (ClientRoundPlan& c : round.clients) {
    c.clip = clip_mean * round.sigma_global / c.sigma;
  }
}

Schedule BuildSchedule(const PrivacySpec& spec,
                       const std::vector<ClientBudgetState>& clients,
                       const ScheduleOptions& options) {
  spec.Validate();
  if (static_cast<int>(clients.size()) != spec.client_count) {
    throw InvalidInputError("client list size " +
                            std::to_string(clients.size()) +
                            " does not match N = " +
                            std::to_string(spec.client_count));
  }
  std::vector<double> saving_rates;
  for (const ClientBudgetState& c : clients) {
    if (!(c.epsilon_rdp_total > 0.0)) {
      throw BudgetExhaustedError("client " + std::to_string(c.client_id) +
                                 " has no RDP budget");
    }
    if (c.saving_rate > spec.spend_rate || !(c.saving_rate > 0.0)) {
      throw InvalidSavingRateError("client " + std::to_string(c.client_id) +
                                   ": saving rate outside (0, q]");
    }
    if (c.transition_round < 1 || c.transition_round > spec.rounds) {
      throw InvalidInputError("client " + std::to_string(c.client_id) +
                              ": transition round outside [1, T]");
    }
    saving_rates.push_back(c.saving_rate);
  }

  const RdpOrder order = spec.order();
  const int n = spec.client_count;
  const int rounds = spec.rounds;
  Schedule schedule;
  schedule.spec = spec;
  schedule.clients = clients;
  for (ClientBudgetState& c : schedule.clients) c.spent_rdp_cumulative = 0.0;
  schedule.rounds.reserve(rounds);

  for (int t = 1; t <= rounds; ++t) {
    RoundPlan round;
    round.round = t;
    round.clients.resize(n);
    // Noise is chosen as if the remainder were spent uniformly at rate q,
    // whatever mode the client is in.
    for (int i = 0; i < n; ++i) {
      const ClientBudgetState& state = schedule.clients[i];
      ClientRoundPlan& plan = round.clients[i];
      plan.mode = Mode(state, t);
      plan.remaining_rdp =
          state.epsilon_rdp_total - state.spent_rdp_cumulative;
      plan.sigma = SolveNoiseMultiplier(plan.remaining_rdp, rounds - t + 1,
                                        spec.spend_rate, order);
    }
    AllocateClips(round, spec.clip_mean);

    std::vector<size_t> rate_of_client(n);
    std::iota(rate_of_client.begin(), rate_of_client.end(), 0);
    if (options.repermute_each_round) {
      std::vector<double> clips(n);
      for (int i = 0; i < n; ++i) clips[i] = round.clients[i].clip;
      rate_of_client =
          OptimizeRatePermutation(clips, saving_rates, options.rho)
              .rate_of_client;
    }
    for (int i = 0; i < n; ++i) {
      ClientRoundPlan& plan = round.clients[i];
      plan.rate =
          plan.mode == 1 ? spec.spend_rate : saving_rates[rate_of_client[i]];
      plan.rdp_spent = SgmRdpCost(plan.rate, plan.sigma, order);
      schedule.clients[i].spent_rdp_cumulative += plan.rdp_spent;
    }
    double rate_sum = 0.0;
    for (const ClientRoundPlan& plan : round.clients) rate_sum += plan.rate;
    round.mean_rate = rate_sum / n;
    schedule.rounds.push_back(std::move(round));
  }
  return schedule;
}

AdherenceReport VerifyBudgetAdherence(const Schedule& schedule, double delta) {
  AdherenceReport report;
  report.non_private = schedule.non_private;
  const RdpOrder order = schedule.spec.order();
  for (size_t i = 0; i < schedule.clients.size(); ++i) {
    const ClientBudgetState& state = schedule.clients[i];
    ClientAdherence entry;
    entry.client_id = state.client_id;
    entry.budget_dp = state.epsilon_dp;
    if (schedule.non_private) {
      entry.spent_rdp = INFINITY;
      entry.spent_dp = INFINITY;
    } else {
      double spent = 0.0;
      for (const RoundPlan& round : schedule.rounds) {
        const ClientRoundPlan& plan = round.clients[i];
        spent += (plan.sigma > 0.0 ? SgmRdpCost(plan.rate, plan.sigma, order)
                                   : INFINITY) +
                 plan.extra_rdp;
      }
      entry.spent_rdp = spent;
      entry.spent_dp = RdpToDp(RdpBudget{spent, order}, delta);
    }
    entry.slack = entry.budget_dp - entry.spent_dp;
    entry.violated = !(entry.slack >= -kAdherenceTolerance);
    report.ok = report.ok && !entry.violated;
    report.clients.push_back(entry);
  }
  return report;
}

std::vector<double> CumulativeDpSpend(const Schedule& schedule, size_t client,
                                      double delta) {
  const RdpOrder order = schedule.spec.order();
  std::vector<double> out;
  out.reserve(schedule.rounds.size());
  double spent = 0.0;
  for (const RoundPlan& round : schedule.rounds) {
    spent += round.clients.at(client).rdp_spent;
    out.push_back(RdpToDp(RdpBudget{spent, order}, delta));
  }
  return out;
}

std::vector<int> AssignGroups(int client_count,
                              const std::vector<double>& fractions,
                              uint64_t seed) {
  if (fractions.empty()) throw InvalidInputError("no group fractions given");
  const double total = std::accumulate(fractions.begin(), fractions.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidInputError("group fractions must sum to 1, got " +
                            FormatDouble(total));
  }
  const size_t groups = fractions.size();
  std::vector<int> sizes(groups);
  std::vector<std::pair<double, size_t>> remainders;
  int assigned = 0;
  for (size_t g = 0; g < groups; ++g) {
    if (fractions[g] < 0.0) {
      throw InvalidInputError("group fractions must be non-negative");
    }
    const double exact = fractions[g] * client_count;
    sizes[g] = static_cast<int>(std::floor(exact));
    assigned += sizes[g];
    remainders.emplace_back(exact - sizes[g], g);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t k = 0; assigned < client_count; ++k, ++assigned) {
    ++sizes[remainders[k % groups].second];
  }

  std::vector<int> membership;
  membership.reserve(client_count);
  for (size_t g = 0; g < groups; ++g) {
    membership.insert(membership.end(), sizes[g], static_cast<int>(g));
  }
  Rng rng = RngStreams(seed).Stream(RngStreams::Purpose::kPermutation);
  rng.Shuffle(membership);
  return membership;
}

void WriteScheduleCsv(std::ostream& out, const Schedule& schedule) {
  out << "round,client,mode,q,sigma,clip,rdp_spent_this_round,rdp_remaining\n";
  const size_t last = schedule.rounds.size();
  for (const RoundPlan& round : schedule.rounds) {
    for (size_t i = 0; i < round.clients.size(); ++i) {
      const ClientRoundPlan& p = round.clients[i];
      double remaining = p.remaining_rdp - p.rdp_spent;
      if (static_cast<size_t>(round.round) == last && remaining < 0.0 &&
          remaining > kRoundOffFloor) {
        remaining = 0.0;
      }
      out << round.round << ',' << schedule.clients[i].client_id << ','
          << p.mode << ',' << FormatDouble(p.rate) << ','
          << FormatDouble(p.sigma) << ',' << FormatDouble(p.clip) << ','
          << FormatDouble(p.rdp_spent) << ',' << FormatDouble(remaining)
          << '\n';
    }
  }
}

void WriteSpendCurveCsv(std::ostream& out, const Schedule& schedule,
                        double delta) {
  out << "round,client,dp_spent_this_round,dp_spent_cumulative\n";
  if (schedule.non_private) return;
  const size_t n = schedule.clients.size();
  std::vector<std::vector<double>> curves(n);
  for (size_t i = 0; i < n; ++i) {
    curves[i] = CumulativeDpSpend(schedule, i, delta);
  }
  const double baseline =
      RdpToDp(RdpBudget{0.0, schedule.spec.order()}, delta);
  for (size_t t = 0; t < schedule.rounds.size(); ++t) {
    for (size_t i = 0; i < n; ++i) {
      const double previous = t == 0 ? baseline : curves[i][t - 1];
      out << t + 1 << ',' << schedule.clients[i].client_id << ','
          << FormatDouble(curves[i][t] - previous) << ','
          << FormatDouble(curves[i][t]) << '\n';
    }
  }
}

void WriteAdherenceCsv(std::ostream& out, const AdherenceReport& report) {
  out << "client,spent_rdp,spent_dp,budget_dp,slack,violated\n";
  for (const ClientAdherence& c : report.clients) {
    out << c.client_id << ',' << FormatDouble(c.spent_rdp) << ','
        << FormatDouble(c.spent_dp) << ',' << FormatDouble(c.budget_dp) << ','
        << FormatDouble(c.slack) << ',' << (c.violated ? 1 : 0) << '\n';
  }
}

}  // namespace dpfl
