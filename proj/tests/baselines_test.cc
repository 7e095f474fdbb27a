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

#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "dpfl/data.h"
#include "dpfl/errors.h"
#include "dpfl/models.h"

namespace dpfl {
namespace {

PrivacySpec SmallSpec(int clients = 6, int rounds = 8) {
  PrivacySpec spec;
  spec.alpha = 10.0;
  spec.clip_mean = 1.0;
  spec.spend_rate = 0.8;
  spec.rounds = rounds;
  spec.client_count = clients;
  return spec;
}

const std::vector<double> kBudgets = {3.0, 3.0, 6.0, 6.0, 9.0, 9.0};

void ExpectSameSchedule(const Schedule& a, const Schedule& b) {
  ASSERT_EQ(a.rounds.size(), b.rounds.size());
  for (size_t t = 0; t < a.rounds.size(); ++t) {
    ASSERT_EQ(a.rounds[t].clients.size(), b.rounds[t].clients.size());
    for (size_t n = 0; n < a.rounds[t].clients.size(); ++n) {
      const auto& x = a.rounds[t].clients[n];
      const auto& y = b.rounds[t].clients[n];
      EXPECT_EQ(x.rate, y.rate);
      EXPECT_NEAR(x.sigma, y.sigma, 1e-12 * y.sigma);
      EXPECT_NEAR(x.clip, y.clip, 1e-12 * y.clip);
    }
  }
}

TEST(SchemeKindTest, NamesRoundTrip) {
  for (SchemeKind k : AllSchemes()) EXPECT_EQ(ParseSchemeKind(SchemeKindName(k)), k);
  EXPECT_EQ(AllSchemes().size(), 5u);
  EXPECT_THROW(ParseSchemeKind("dp_sgd"), InvalidInputError);
}

TEST(FedAvgScheduleTest, NoClipNoNoiseNonPrivate) {
  const Schedule s = ScheduleFedAvg(SmallSpec());
  EXPECT_TRUE(s.non_private);
  for (const auto& round : s.rounds) {
    for (const auto& c : round.clients) {
      EXPECT_EQ(c.rate, 0.8);
      EXPECT_EQ(c.sigma, 0.0);
      EXPECT_TRUE(std::isinf(c.clip));
    }
  }
  EXPECT_TRUE(VerifyBudgetAdherence(s, 1e-5).non_private);
}

TEST(DpFedAvgScheduleTest, EveryoneGetsTheSmallestBudget) {
  const Schedule dp = ScheduleDpFedAvg(SmallSpec(), kBudgets);
  const Schedule uniform =
      ScheduleIdpFedAvg(SmallSpec(), std::vector<double>(6, 3.0));
  ExpectSameSchedule(dp, uniform);
  for (const auto& c : dp.clients) {
    EXPECT_NEAR(c.spent_rdp_cumulative, dp.clients[0].epsilon_rdp_total, 1e-9);
  }
  const AdherenceReport report = VerifyBudgetAdherence(dp, 1e-5);
  EXPECT_TRUE(report.ok);
  for (const auto& a : report.clients) EXPECT_NEAR(a.spent_dp, 3.0, 1e-9);
}

TEST(IdpFedAvgScheduleTest, FlatSpendAtRateQ) {
  const Schedule s = ScheduleIdpFedAvg(SmallSpec(), kBudgets);
  for (size_t n = 0; n < 6; ++n) {
    const double per_round = s.rounds[0].clients[n].rdp_spent;
    for (const auto& round : s.rounds) {
      EXPECT_EQ(round.clients[n].rate, 0.8);
      EXPECT_NEAR(round.clients[n].rdp_spent, per_round, 1e-9 * per_round);
    }
  }
  EXPECT_TRUE(VerifyBudgetAdherence(s, 1e-5).ok);
}

TEST(IdpFedAvgScheduleTest, EqualsTimeAdaptiveWithoutSaving) {
  const std::vector<double> rates(6, 0.3);
  const std::vector<int> transitions(6, 1);
  ExpectSameSchedule(
      ScheduleTimeAdaptive(SmallSpec(), kBudgets, rates, transitions),
      ScheduleIdpFedAvg(SmallSpec(), kBudgets));
}

TEST(TimeAdaptiveScheduleTest, RejectsMismatchedLengths) {
  EXPECT_THROW(ScheduleTimeAdaptive(SmallSpec(), kBudgets, {0.5}, {1, 1, 1, 1, 1, 1}),
               InvalidInputError);
  EXPECT_THROW(ScheduleIdpFedAvg(SmallSpec(), {1.0, 2.0}), InvalidInputError);
}

TEST(AdaptiveClipControllerTest, AllUnderShrinksGeometrically) {
  AdaptiveClipState s;
  s.clip = 2.0;
  s.clip_lr = 0.2;
  s.target_quantile = 0.5;
  s.quantile_noise_std = 0.0;
  Rng rng(1);
  const bool under[] = {true, true, true, true};
  const AdaptiveClipState next = AdaptiveClipController(s, under, rng);
  EXPECT_NEAR(next.clip, 2.0 * std::exp(-0.5 * 0.2), 1e-15);
  const bool over[] = {false, false};
  EXPECT_NEAR(AdaptiveClipController(s, over, rng).clip,
              2.0 * std::exp(0.5 * 0.2), 1e-15);
}

TEST(AdaptiveClipControllerTest, FixedPointAtTargetQuantile) {
  AdaptiveClipState s;
  s.clip = 0.7;
  s.target_quantile = 0.25;
  s.quantile_noise_std = 0.0;
  Rng rng(2);
  const bool under[] = {true, false, false, false};
  EXPECT_DOUBLE_EQ(AdaptiveClipController(s, under, rng).clip, 0.7);
  EXPECT_EQ(AdaptiveClipController(s, {}, rng).clip, 0.7);
}

TEST(AdaptiveClipControllerTest, NoiseIsCenteredOnTheNoiselessStep) {
  AdaptiveClipState s;
  s.clip = 1.0;
  s.clip_lr = 0.01;
  s.quantile_noise_std = 2.0;
  Rng rng(3);
  const bool under[] = {true, true, false, false};
  double sum_log = 0.0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    sum_log += std::log(AdaptiveClipController(s, under, rng).clip);
  }
  // log(clip') = -eta * (noise / 4); its mean is zero, its sd eta * 0.5.
  EXPECT_NEAR(sum_log / draws, 0.0, 3.0 * 0.01 * 0.5 / std::sqrt(draws));
}

TEST(AdaptiveClipPolicyTest, RejectsInfeasibleSettings) {
  AdaptiveClipState s;
  s.quantile_noise_std = 0.0;
  EXPECT_THROW(AdaptiveClipPolicy(SmallSpec(), 3.0, s, RngStreams(0)),
               InvalidInputError);
  s.quantile_noise_std = 0.05;  // each query alone costs more than the budget
  EXPECT_THROW(AdaptiveClipPolicy(SmallSpec(), 3.0, s, RngStreams(0)),
               BudgetExhaustedError);
}

struct Task {
  FederatedDataset data;
  std::unique_ptr<Model> model;
};

Task MakeTask(uint64_t seed, size_t clients) {
  SyntheticTaskSpec spec;
  spec.dimension = 6;
  spec.classes = 3;
  spec.separation = 5.0;
  spec.clients = clients;
  spec.samples_per_client = 40;
  spec.seed = seed;
  Task task;
  task.data = MakeSynthetic(spec, PartitionDescriptor{});
  task.model = MakeModel({ModelKind::kLogisticRegression, 6, 3});
  return task;
}

SchemeConfig BaseConfig(SchemeKind kind, uint64_t seed) {
  SchemeConfig c;
  c.kind = kind;
  c.spec = SmallSpec(6, 10);
  c.budgets = kBudgets;
  c.saving_rates.assign(6, 0.5);
  c.transition_rounds.assign(6, 5);
  c.engine.local = {1, 16, 0.5};
  c.seed = seed;
  return c;
}

TEST(RunSchemeTest, AdaptiveClipNeedsUniformBudget) {
  const Task task = MakeTask(0, 6);
  const SchemeConfig c = BaseConfig(SchemeKind::kAdaptiveClip, 0);
  EXPECT_THROW(RunScheme(c, *task.model, task.data), InvalidInputError);
}

TEST(RunSchemeTest, AdaptiveClipStaysWithinBudget) {
  const Task task = MakeTask(1, 6);
  SchemeConfig c = BaseConfig(SchemeKind::kAdaptiveClip, 1);
  c.budgets.assign(6, 6.0);
  const SchemeResult r = RunScheme(c, *task.model, task.data);
  EXPECT_TRUE(r.adherence.ok);
  EXPECT_FALSE(r.adherence.non_private);
  EXPECT_EQ(r.clip_history.size(), 10u);
  EXPECT_EQ(r.train.history.size(), 10u);
  for (const auto& a : r.adherence.clients) EXPECT_LE(a.spent_dp, 6.0 + 1e-9);
}

TEST(RunSchemeTest, EverySchemeProducesTheSameMetricColumns) {
  const Task task = MakeTask(2, 6);
  std::string header;
  for (SchemeKind kind : AllSchemes()) {
    SchemeConfig c = BaseConfig(kind, 2);
    if (kind == SchemeKind::kAdaptiveClip) c.budgets.assign(6, 6.0);
    const SchemeResult r = RunScheme(c, *task.model, task.data);
    EXPECT_EQ(r.train.history.size(), 10u) << SchemeKindName(kind);
    EXPECT_EQ(r.adherence.non_private, kind == SchemeKind::kFedAvg);
    if (kind != SchemeKind::kFedAvg) EXPECT_TRUE(r.adherence.ok);
    std::ostringstream csv;
    WriteMetricsCsv(csv, r.train.history);
    const std::string first = csv.str().substr(0, csv.str().find('\n'));
    if (header.empty()) header = first;
    EXPECT_EQ(first, header) << SchemeKindName(kind);
  }
}

TEST(RunSchemeTest, NonPrivateBeatsSmallestBudgetOnAverage) {
  double fedavg = 0.0, dp = 0.0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const Task task = MakeTask(seed, 6);
    fedavg += RunScheme(BaseConfig(SchemeKind::kFedAvg, seed), *task.model,
                        task.data).train.history.back().test_acc;
    dp += RunScheme(BaseConfig(SchemeKind::kDpFedAvg, seed), *task.model,
                    task.data).train.history.back().test_acc;
  }
  EXPECT_GE(fedavg, dp);
}

TEST(RunSchemeTest, TimeAdaptiveWithPermutationReportsAssignment) {
  const Task task = MakeTask(3, 6);
  SchemeConfig c = BaseConfig(SchemeKind::kTimeAdaptive, 3);
  c.saving_rates = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  c.time_adaptive.permute_rates = true;
  const SchemeResult r = RunScheme(c, *task.model, task.data);
  ASSERT_TRUE(r.permutation.has_value());
  std::vector<size_t> sorted = r.permutation->rate_of_client;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<size_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_TRUE(r.adherence.ok);
}

}  // namespace
}  // namespace dpfl
