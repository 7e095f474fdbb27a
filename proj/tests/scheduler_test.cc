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

#include <cmath>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "dpfl/errors.h"
#include "dpfl/rng.h"
#include "oracles.h"

namespace dpfl {
namespace {

// DP budget whose RDP conversion at `alpha` is exactly `rdp`.
double DpFor(double rdp, const PrivacySpec& spec) {
  return RdpToDp({rdp, spec.order()}, spec.delta);
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

TEST(ModeTest, TransitionRoundIsSpending) {
  PrivacySpec spec;
  EXPECT_EQ(Mode(MakeClient(0, 20.0, 0.5, 13, spec), 12), 0);
  EXPECT_EQ(Mode(MakeClient(0, 20.0, 0.5, 13, spec), 13), 1);
  EXPECT_EQ(Mode(MakeClient(0, 20.0, 0.5, 1, spec), 1), 1);
}

TEST(MakeClientTest, ValidatesRatesAndRounds) {
  PrivacySpec spec;
  EXPECT_THROW(MakeClient(0, 20.0, 0.95, 5, spec), InvalidSavingRateError);
  EXPECT_THROW(MakeClient(0, 20.0, 0.0, 5, spec), InvalidSavingRateError);
  EXPECT_THROW(MakeClient(0, 20.0, 0.5, 26, spec), InvalidInputError);
  EXPECT_THROW(MakeClient(0, 5.0, 0.5, 5, spec), BudgetTooSmallError);
}

TEST(AllocateClipsTest, HarmonicMeanExample) {
  RoundPlan round;
  round.clients.resize(3);
  round.clients[0].sigma = 2.0;
  round.clients[1].sigma = 4.0;
  round.clients[2].sigma = 4.0;
  AllocateClips(round, 1.0);
  EXPECT_DOUBLE_EQ(round.sigma_global, 3.0);
  EXPECT_DOUBLE_EQ(round.clients[0].clip, 1.5);
  EXPECT_DOUBLE_EQ(round.clients[1].clip, 0.75);
  EXPECT_DOUBLE_EQ(round.clients[2].clip, 0.75);
}

TEST(AllocateClipsTest, EqualSigmasGiveEqualClips) {
  RoundPlan round;
  round.clients.resize(3);
  for (auto& c : round.clients) c.sigma = 7.5;
  AllocateClips(round, 2.0);
  EXPECT_DOUBLE_EQ(round.sigma_global, 7.5);
  for (const auto& c : round.clients) EXPECT_DOUBLE_EQ(c.clip, 2.0);
}

TEST(AllocateClipsTest, MatchesOracleOnRandomRounds) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    RoundPlan round;
    round.clients.resize(1 + rng.UniformIndex(40));
    std::vector<double> sigmas;
    for (auto& c : round.clients) {
      c.sigma = 0.1 + 30.0 * rng.Uniform();
      sigmas.push_back(c.sigma);
    }
    const double clip = 0.1 + 5.0 * rng.Uniform();
    AllocateClips(round, clip);
    const auto ref = oracle::AllocateClips(sigmas, clip);
    EXPECT_LE(oracle::RelErr(ref.sigma_global, round.sigma_global), 1e-12);
    double sum = 0.0;
    for (size_t n = 0; n < sigmas.size(); ++n) {
      EXPECT_LE(oracle::RelErr(ref.clips[n], round.clients[n].clip), 1e-12);
      EXPECT_LE(oracle::RelErr(round.clients[n].clip * round.clients[n].sigma,
                               clip * round.sigma_global),
                1e-12);
      sum += round.clients[n].clip;
    }
    EXPECT_LE(oracle::RelErr(sum / sigmas.size(), clip), 1e-12);
  }
}

TEST(BuildScheduleTest, SingleClientFollowsRecursion) {
  PrivacySpec spec;
  spec.client_count = 1;
  spec.rounds = 4;
  spec.spend_rate = 0.8;
  ClientBudgetState client = MakeClient(0, DpFor(1.0, spec), 0.4, 3, spec);
  client.epsilon_rdp_total = 1.0;
  const Schedule s = BuildSchedule(spec, {client});
  const double expected[] = {0.0625, 0.078125, 0.4296875, 0.4296875};
  for (int t = 0; t < 4; ++t) {
    const ClientRoundPlan& p = s.rounds[t].clients[0];
    EXPECT_NEAR(p.rdp_spent, expected[t], 1e-12);
    EXPECT_DOUBLE_EQ(p.clip, spec.clip_mean);
    EXPECT_DOUBLE_EQ(s.rounds[t].sigma_global, p.sigma);
    EXPECT_EQ(p.rate, t < 2 ? 0.4 : 0.8);
    EXPECT_EQ(p.mode, t < 2 ? 0 : 1);
  }
  EXPECT_NEAR(s.clients[0].spent_rdp_cumulative, 1.0, 1e-12);
}

TEST(BuildScheduleTest, RandomPopulationsKeepIdentities) {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    PrivacySpec spec;
    spec.alpha = 2.0 + 10.0 * rng.Uniform();
    spec.client_count = 1 + static_cast<int>(rng.UniformIndex(20));
    spec.rounds = 1 + static_cast<int>(rng.UniformIndex(60));
    spec.spend_rate = 0.2 + 0.8 * rng.Uniform();
    spec.clip_mean = 0.1 + 3.0 * rng.Uniform();
    std::vector<ClientBudgetState> clients;
    for (int n = 0; n < spec.client_count; ++n) {
      const double eps = ConversionOffset(spec.order(), spec.delta) + 0.1 +
                         30.0 * rng.Uniform();
      const double qn = spec.spend_rate * (0.05 + 0.95 * rng.Uniform());
      const int tn = 1 + static_cast<int>(rng.UniformIndex(spec.rounds));
      clients.push_back(MakeClient(n, eps, qn, tn, spec));
    }
    const Schedule s = BuildSchedule(spec, clients);
    ASSERT_EQ(s.rounds.size(), static_cast<size_t>(spec.rounds));
    for (const RoundPlan& round : s.rounds) {
      double clip_sum = 0.0;
      double rate_sum = 0.0;
      for (const ClientRoundPlan& p : round.clients) {
        clip_sum += p.clip;
        rate_sum += p.rate;
        EXPECT_LE(oracle::RelErr(p.clip * p.sigma,
                                 spec.clip_mean * round.sigma_global),
                  1e-9);
      }
      EXPECT_LE(oracle::RelErr(clip_sum / spec.client_count, spec.clip_mean),
                1e-9);
      EXPECT_LE(oracle::RelErr(rate_sum / spec.client_count, round.mean_rate),
                1e-12);
    }
    // Per-client spends follow the closed form and exhaust the budget.
    for (int n = 0; n < spec.client_count; ++n) {
      const ClientBudgetState& c = clients[n];
      const double ratio = c.saving_rate / spec.spend_rate;
      for (int t = 1; t <= spec.rounds; ++t) {
        EXPECT_LE(oracle::RelErr(
                      s.rounds[t - 1].clients[n].rdp_spent,
                      SpendClosedForm(c.epsilon_rdp_total, spec.rounds,
                                      c.transition_round, ratio, t)),
                  1e-9);
      }
      EXPECT_LE(oracle::RelErr(s.clients[n].spent_rdp_cumulative,
                               c.epsilon_rdp_total),
                1e-9);
    }
    const AdherenceReport report = VerifyBudgetAdherence(s, spec.delta);
    EXPECT_TRUE(report.ok);
    for (const auto& a : report.clients) EXPECT_GE(a.slack, -1e-6);
  }
}

TEST(BuildScheduleTest, FullRateReproducesUniformSpending) {
  PrivacySpec spec;
  spec.client_count = 3;
  spec.rounds = 10;
  std::vector<ClientBudgetState> clients = {
      MakeClient(0, 12.0, spec.spend_rate, 4, spec),
      MakeClient(1, 20.0, 0.3, 1, spec),
      MakeClient(2, 30.0, spec.spend_rate, 10, spec)};
  const Schedule s = BuildSchedule(spec, clients);
  for (int n = 0; n < 3; ++n) {
    const double sigma0 = s.rounds[0].clients[n].sigma;
    for (const RoundPlan& round : s.rounds) {
      EXPECT_LE(oracle::RelErr(round.clients[n].sigma, sigma0), 1e-9);
      EXPECT_LE(oracle::RelErr(round.clients[n].rdp_spent,
                               clients[n].epsilon_rdp_total / 10),
                1e-9);
    }
  }
}

TEST(BuildScheduleTest, RejectsInvalidClients) {
  PrivacySpec spec;
  spec.client_count = 1;
  ClientBudgetState c = MakeClient(0, 20.0, 0.5, 3, spec);
  ClientBudgetState empty = c;
  empty.epsilon_rdp_total = 0.0;
  EXPECT_THROW(BuildSchedule(spec, {empty}), BudgetExhaustedError);
  ClientBudgetState greedy = c;
  greedy.saving_rate = 0.95;
  EXPECT_THROW(BuildSchedule(spec, {greedy}), InvalidSavingRateError);
  EXPECT_THROW(BuildSchedule(spec, {c, c}), InvalidInputError);
  spec.rounds = 0;
  EXPECT_THROW(BuildSchedule(spec, {c}), InvalidInputError);
}

TEST(BuildScheduleTest, SingleRoundSpendsEverything) {
  PrivacySpec spec;
  spec.client_count = 2;
  spec.rounds = 1;
  const Schedule s = BuildSchedule(
      spec, {MakeClient(0, 15.0, 0.5, 1, spec), MakeClient(1, 25.0, 0.2, 1, spec)});
  ASSERT_EQ(s.rounds.size(), 1u);
  const AdherenceReport report = VerifyBudgetAdherence(s, spec.delta);
  for (const auto& a : report.clients) EXPECT_NEAR(a.slack, 0.0, 1e-9);
}

TEST(VerifyBudgetAdherenceTest, FlagsTamperedClient) {
  PrivacySpec spec;
  spec.client_count = 3;
  spec.rounds = 5;
  Schedule s = BuildSchedule(spec, {MakeClient(0, 12.0, 0.5, 3, spec),
                                    MakeClient(1, 20.0, 0.5, 3, spec),
                                    MakeClient(2, 30.0, 0.5, 3, spec)});
  EXPECT_TRUE(VerifyBudgetAdherence(s, spec.delta).ok);
  // Halving sigma quadruples that round's spend.
  s.rounds[3].clients[1].sigma /= 2.0;
  const AdherenceReport report = VerifyBudgetAdherence(s, spec.delta);
  EXPECT_FALSE(report.ok);
  EXPECT_FALSE(report.clients[0].violated);
  EXPECT_TRUE(report.clients[1].violated);
  EXPECT_FALSE(report.clients[2].violated);
  EXPECT_LT(report.clients[1].slack, -1e-6);
}

TEST(VerifyBudgetAdherenceTest, UniformClientsSpendAlike) {
  PrivacySpec spec;
  spec.client_count = 4;
  spec.rounds = 6;
  std::vector<ClientBudgetState> clients;
  for (int n = 0; n < 4; ++n) {
    clients.push_back(MakeClient(n, 18.0, spec.spend_rate, 1, spec));
  }
  const Schedule s = BuildSchedule(spec, clients);
  const auto first = CumulativeDpSpend(s, 0, spec.delta);
  for (size_t n = 1; n < 4; ++n) {
    const auto other = CumulativeDpSpend(s, n, spec.delta);
    for (size_t t = 0; t < first.size(); ++t) {
      EXPECT_EQ(first[t], other[t]);
    }
  }
}

TEST(AssignGroupsTest, LargestRemainderSizes) {
  const auto membership = AssignGroups(30, {0.34, 0.43, 0.23}, 1);
  ASSERT_EQ(membership.size(), 30u);
  int counts[3] = {0, 0, 0};
  for (int g : membership) ++counts[g];
  EXPECT_EQ(counts[0], 10);
  EXPECT_EQ(counts[1], 13);
  EXPECT_EQ(counts[2], 7);
}

TEST(AssignGroupsTest, DeterministicPerSeed) {
  EXPECT_EQ(AssignGroups(30, {0.34, 0.43, 0.23}, 4),
            AssignGroups(30, {0.34, 0.43, 0.23}, 4));
  EXPECT_NE(AssignGroups(30, {0.34, 0.43, 0.23}, 4),
            AssignGroups(30, {0.34, 0.43, 0.23}, 5));
  EXPECT_THROW(AssignGroups(30, {0.5, 0.4}, 0), InvalidInputError);
}

TEST(ScheduleCsvTest, ColumnsAndRowCount) {
  PrivacySpec spec;
  spec.client_count = 2;
  spec.rounds = 3;
  const Schedule s = BuildSchedule(
      spec, {MakeClient(0, 15.0, 0.5, 2, spec), MakeClient(1, 25.0, 0.2, 3, spec)});
  std::ostringstream out;
  WriteScheduleCsv(out, s);
  const auto lines = Lines(out.str());
  ASSERT_EQ(lines.size(), 1u + 3 * 2);
  EXPECT_EQ(lines[0],
            "round,client,mode,q,sigma,clip,rdp_spent_this_round,rdp_remaining");
  EXPECT_EQ(lines[1].substr(0, 6), "1,0,0,");
  EXPECT_EQ(lines[6].substr(0, 6), "3,1,1,");
  // Nothing is left at the end.
  for (size_t i : {5, 6}) {
    EXPECT_NEAR(std::stod(lines[i].substr(lines[i].rfind(',') + 1)), 0.0,
                1e-12);
  }
}

TEST(SpendCurveCsvTest, IncrementsSumToBudget) {
  PrivacySpec spec;
  spec.client_count = 1;
  spec.rounds = 5;
  const Schedule s = BuildSchedule(spec, {MakeClient(0, 15.0, 0.45, 3, spec)});
  std::ostringstream out;
  WriteSpendCurveCsv(out, s, spec.delta);
  const auto lines = Lines(out.str());
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines[0], "round,client,dp_spent_this_round,dp_spent_cumulative");
  const double offset = ConversionOffset(spec.order(), spec.delta);
  double sum = 0.0;
  for (size_t i = 1; i < lines.size(); ++i) {
    std::istringstream row(lines[i]);
    std::string round, client, spent, cumulative;
    std::getline(row, round, ',');
    std::getline(row, client, ',');
    std::getline(row, spent, ',');
    std::getline(row, cumulative, ',');
    sum += std::stod(spent);
    EXPECT_NEAR(std::stod(cumulative), offset + sum, 1e-9);
  }
  EXPECT_NEAR(offset + sum, 15.0, 1e-9);
}

}  // namespace
}  // namespace dpfl
