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

#include "dpfl/rdp_accountant.h"

#include <cassert>
#include <cmath>
#include <numeric>
#include <string>

#include "dpfl/errors.h"

namespace dpfl {
namespace {

void CheckSpendArguments(double total_rdp, int rounds, int transition_round,
                         double ratio) {
  if (!(total_rdp > 0.0)) {
    throw BudgetExhaustedError("total RDP budget must be positive, got " +
                               std::to_string(total_rdp));
  }
  if (rounds < 1) {
    throw InvalidInputError("round count must be at least 1");
  }
  if (transition_round < 1 || transition_round > rounds) {
    throw InvalidInputError("transition round " +
                            std::to_string(transition_round) +
                            " outside [1, " + std::to_string(rounds) + "]");
  }
  if (ratio > 1.0) {
    throw InvalidSavingRateError("saving rate exceeds spending rate (ratio " +
                                 std::to_string(ratio) + ")");
  }
  if (!(ratio > 0.0)) {
    throw InvalidSavingRateError("saving rate ratio must be positive");
  }
}

}  // namespace

RdpOrder::RdpOrder(double alpha) : alpha_(alpha) {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) {
    throw DomainError("RDP order must be > 1, got " + std::to_string(alpha));
  }
}

double SpendSchedule::total() const {
  return std::accumulate(per_round_spend.begin(), per_round_spend.end(), 0.0);
}

double SgmRdpCost(double q, double sigma, RdpOrder order) {
  if (!(sigma > 0.0)) {
    throw DomainError("noise multiplier must be positive, got " +
                      std::to_string(sigma));
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw DomainError("sampling rate must lie in [0, 1], got " +
                      std::to_string(q));
  }
  return 2.0 * order.alpha() * q * q / (sigma * sigma);
}

double SolveNoiseMultiplier(double remaining_rdp, int rounds_remaining,
                            double q, RdpOrder order) {
  if (!(remaining_rdp > 0.0)) {
    throw BudgetExhaustedError("no RDP budget remaining");
  }
  // Unreachable from the scheduler; a caller bug if hit.
  assert(rounds_remaining >= 1);
  if (rounds_remaining < 1) {
    throw InvalidInputError("rounds_remaining must be at least 1");
  }
  if (!(q > 0.0 && q <= 1.0)) {
    throw DomainError("sampling rate must lie in (0, 1], got " +
                      std::to_string(q));
  }
  return q * std::sqrt(2.0 * order.alpha() * rounds_remaining / remaining_rdp);
}

SpendSchedule SpendRecursive(double total_rdp, int rounds, int transition_round,
                             double ratio) {
  CheckSpendArguments(total_rdp, rounds, transition_round, ratio);
  SpendSchedule schedule;
  schedule.transition_round = transition_round;
  schedule.saving_rate_ratio = ratio;
  schedule.per_round_spend.reserve(rounds);
  const double saving_factor = ratio * ratio;
  double spent = 0.0;
  for (int t = 1; t <= rounds; ++t) {
    const double share = (total_rdp - spent) / (rounds - t + 1);
    const double spend = t < transition_round ? share * saving_factor : share;
    schedule.per_round_spend.push_back(spend);
    spent += spend;
  }
  return schedule;
}

double SpendClosedForm(double total_rdp, int rounds, int transition_round,
                       double ratio, int t) {
  CheckSpendArguments(total_rdp, rounds, transition_round, ratio);
  if (t < 1 || t > rounds) {
    throw InvalidInputError("round " + std::to_string(t) + " outside [1, " +
                            std::to_string(rounds) + "]");
  }
  const double saving_factor = ratio * ratio;
  // Saving rounds use t itself; every spending round equals round T_n.
  const bool saving = t < transition_round;
  const int pivot = saving ? t : transition_round;
  double product = 1.0;
  for (int i = 1; i <= pivot - 1; ++i) {
    product *= 1.0 - saving_factor / (rounds - pivot + 1 + i);
  }
  const double base = total_rdp / (rounds - pivot + 1) * product;
  return saving ? base * saving_factor : base;
}

double ConversionOffset(RdpOrder order, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw DomainError("delta must lie in (0, 1), got " + std::to_string(delta));
  }
  const double a = order.alpha();
  return std::log((a - 1.0) / a) - (std::log(delta) + std::log(a)) / (a - 1.0);
}

double RdpToDp(const RdpBudget& rdp, double delta) {
  return rdp.epsilon_rdp + ConversionOffset(rdp.order, delta);
}

RdpBudget DpToRdp(const DpBudget& dp, RdpOrder order) {
  const double offset = ConversionOffset(order, dp.delta);
  const double epsilon_rdp = dp.epsilon - offset;
  if (epsilon_rdp < 0.0) {
    throw BudgetTooSmallError(
        "DP budget " + std::to_string(dp.epsilon) +
        " is below the conversion offset " + std::to_string(offset) +
        " at RDP order " + std::to_string(order.alpha()));
  }
  return RdpBudget{epsilon_rdp, order};
}

}  // namespace dpfl
