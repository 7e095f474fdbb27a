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

// Single-order Renyi-DP accounting for the sampled Gaussian mechanism and
// the spend-as-you-go budget recursion.
//
// All budgets are tracked at one fixed order alpha. The per-round cost of
// sampling at rate q with noise multiplier sigma is bounded by
// 2 * alpha * q^2 / sigma^2, and everything here follows from that bound.
// Every function is pure.

#ifndef DPFL_RDP_ACCOUNTANT_H_
#define DPFL_RDP_ACCOUNTANT_H_

#include <vector>

namespace dpfl {

// Order of the Renyi divergence. Always strictly greater than one.
class RdpOrder {
 public:
  // Throws DomainError unless alpha > 1.
  explicit RdpOrder(double alpha);

  double alpha() const { return alpha_; }

 private:
  double alpha_;
};

struct DpBudget {
  double epsilon = 0.0;
  double delta = 1e-5;
};

struct RdpBudget {
  double epsilon_rdp = 0.0;
  RdpOrder order{2.0};
};

// Per-round RDP spends of one client over a whole run.
struct SpendSchedule {
  std::vector<double> per_round_spend;  // index 0 is round 1
  int transition_round = 1;             // T_n, first spending round
  double saving_rate_ratio = 1.0;       // q_n / q

  double total() const;
};

// RDP cost of one sampled Gaussian step.
double SgmRdpCost(double q, double sigma, RdpOrder order);

// Noise multiplier that spends `remaining_rdp` uniformly over
// `rounds_remaining` rounds at sampling rate q.
double SolveNoiseMultiplier(double remaining_rdp, int rounds_remaining,
                            double q, RdpOrder order);

// Iterates the spend-as-you-go recursion: in round t the client spends the
// uniform share of what is left, scaled by ratio^2 while t < T_n.
SpendSchedule SpendRecursive(double total_rdp, int rounds, int transition_round,
                             double ratio);

// Product form of the same recursion, evaluated for a single round t
// (1-based). Agrees with SpendRecursive to round-off.
double SpendClosedForm(double total_rdp, int rounds, int transition_round,
                       double ratio, int t);

// (epsilon, delta)-DP implied by an RDP guarantee.
double RdpToDp(const RdpBudget& rdp, double delta);

// Exact inverse of RdpToDp at fixed order. Throws BudgetTooSmallError when
// the budget does not cover the conversion offset at this order.
RdpBudget DpToRdp(const DpBudget& dp, RdpOrder order);

// Epsilon at which DpToRdp yields zero: RdpToDp({0, order}, delta).
double ConversionOffset(RdpOrder order, double delta);

}  // namespace dpfl

#endif  // DPFL_RDP_ACCOUNTANT_H_
