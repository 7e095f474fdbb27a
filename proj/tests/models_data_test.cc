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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "dpfl/data.h"
#include "dpfl/errors.h"
#include "dpfl/models.h"

namespace dpfl {
namespace {

std::vector<size_t> AllRows(const Dataset& d) {
  std::vector<size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

Dataset RandomData(size_t n, size_t dim, size_t classes, Rng& rng) {
  Dataset d;
  d.feature_dim = dim;
  std::vector<double> x(dim);
  for (size_t i = 0; i < n; ++i) {
    for (double& v : x) v = rng.Gaussian();
    d.Append(x, classes ? static_cast<double>(rng.UniformIndex(classes))
                        : rng.Gaussian());
  }
  return d;
}

class GradientTest : public ::testing::TestWithParam<ModelKind> {};

TEST_P(GradientTest, MatchesCentralDifferences) {
  const ModelKind kind = GetParam();
  Rng rng(17);
  const size_t classes = kind == ModelKind::kLinearRegression ? 0 : 3;
  const Dataset data = RandomData(12, 4, classes, rng);
  const auto model = MakeModel({kind, 4, std::max<size_t>(classes, 2), 5});
  const auto rows = AllRows(data);
  double worst = 0.0;
  for (int probe = 0; probe < 100; ++probe) {
    ModelVector params(model->parameter_count());
    for (size_t j = 0; j < params.size(); ++j) params[j] = 0.5 * rng.Gaussian();
    ModelVector grad(params.size());
    model->LossAndGrad(params, data, rows, &grad);
    ModelVector dir(params.size());
    for (size_t j = 0; j < dir.size(); ++j) dir[j] = rng.Gaussian();
    dir *= 1.0 / dir.Norm();
    const double h = 1e-5;
    ModelVector plus = params, minus = params;
    for (size_t j = 0; j < dir.size(); ++j) {
      plus[j] += h * dir[j];
      minus[j] -= h * dir[j];
    }
    const double numeric = (model->LossAndGrad(plus, data, rows, nullptr) -
                            model->LossAndGrad(minus, data, rows, nullptr)) /
                           (2 * h);
    const double analytic = std::inner_product(
        grad.values().begin(), grad.values().end(), dir.values().begin(), 0.0);
    worst = std::max(worst, std::abs(numeric - analytic) /
                                std::max(1.0, std::abs(analytic)));
  }
  EXPECT_LT(worst, 1e-5);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, GradientTest,
                         ::testing::Values(ModelKind::kLinearRegression,
                                           ModelKind::kLogisticRegression,
                                           ModelKind::kPerceptron),
                         [](const auto& info) {
                           return ModelKindName(info.param);
                         });

TEST(ModelTest, LogisticAtZeroHasLogKLoss) {
  Rng rng(1);
  for (size_t k : {2u, 3u, 7u}) {
    const Dataset data = RandomData(20, 3, k, rng);
    const auto model = MakeModel({ModelKind::kLogisticRegression, 3, k});
    ModelVector zero(model->parameter_count());
    EXPECT_NEAR(model->LossAndGrad(zero, data, AllRows(data), nullptr),
                std::log(static_cast<double>(k)), 1e-12);
  }
}

TEST(ModelTest, LinearPerfectFitHasZeroLossAndGradient) {
  Rng rng(2);
  Dataset data = RandomData(15, 3, 0, rng);
  const ModelVector truth{0.5, -2.0, 1.25, 3.0};  // weights, then bias
  for (size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    data.labels[i] = truth[3] + truth[0] * x[0] + truth[1] * x[1] + truth[2] * x[2];
  }
  const auto model = MakeModel({ModelKind::kLinearRegression, 3});
  ModelVector grad(4);
  EXPECT_NEAR(model->LossAndGrad(truth, data, AllRows(data), &grad), 0.0, 1e-24);
  EXPECT_LT(grad.Norm(), 1e-12);
  const Evaluation e = model->Evaluate(truth, data);
  EXPECT_TRUE(std::isnan(e.accuracy));
}

TEST(ModelTest, RejectsEmptyBatchAndWrongDimension) {
  Rng rng(3);
  const Dataset data = RandomData(4, 3, 2, rng);
  const auto model = MakeModel({ModelKind::kPerceptron, 3, 2, 4});
  const ModelVector params(model->parameter_count());
  EXPECT_THROW(model->LossAndGrad(params, data, {}, nullptr), InvalidInputError);
  const auto other = MakeModel({ModelKind::kPerceptron, 5, 2, 4});
  EXPECT_THROW(other->LossAndGrad(ModelVector(other->parameter_count()), data,
                                  AllRows(data), nullptr),
               InvalidInputError);
}

TEST(ModelTest, KindNamesRoundTrip) {
  for (ModelKind k : {ModelKind::kLinearRegression,
                      ModelKind::kLogisticRegression, ModelKind::kPerceptron}) {
    EXPECT_EQ(ParseModelKind(ModelKindName(k)), k);
  }
  EXPECT_THROW(ParseModelKind("resnet"), InvalidInputError);
}

Dataset LabeledData(size_t per_class, size_t classes) {
  Dataset d;
  d.feature_dim = 1;
  for (size_t k = 0; k < classes; ++k) {
    for (size_t i = 0; i < per_class; ++i) {
      d.Append(std::vector<double>{static_cast<double>(i)},
               static_cast<double>(k));
    }
  }
  return d;
}

void ExpectExactCover(const FederatedDataset& fed, size_t source_size) {
  std::vector<size_t> all;
  for (const auto& rows : fed.shard_rows) all.insert(all.end(), rows.begin(), rows.end());
  all.insert(all.end(), fed.test_rows.begin(), fed.test_rows.end());
  std::sort(all.begin(), all.end());
  std::vector<size_t> expected(source_size);
  std::iota(expected.begin(), expected.end(), 0);
  EXPECT_EQ(all, expected);
}

TEST(PartitionTest, IidSplitsEvenlyAndCoversEveryRow) {
  const Dataset data = LabeledData(50, 2);
  const FederatedDataset fed = PartitionIid(data, 7, 3);
  ASSERT_EQ(fed.shards.size(), 7u);
  for (const auto& s : fed.shards) {
    EXPECT_GE(s.size(), 14u);
    EXPECT_LE(s.size(), 15u);
  }
  ExpectExactCover(fed, data.size());
}

TEST(PartitionTest, DirichletCoversEveryRowWithoutEmptyShards) {
  const Dataset data = LabeledData(40, 4);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const FederatedDataset fed = PartitionDirichlet(data, 25, 0.05, seed);
    ExpectExactCover(fed, data.size());
    for (const auto& s : fed.shards) EXPECT_FALSE(s.empty());
  }
}

TEST(PartitionTest, SingleClientGetsEverything) {
  const Dataset data = LabeledData(10, 3);
  EXPECT_EQ(PartitionIid(data, 1, 0).shards[0].size(), 30u);
  EXPECT_EQ(PartitionDirichlet(data, 1, 0.1, 0).shards[0].size(), 30u);
}

TEST(PartitionTest, RejectsBadArguments) {
  const Dataset data = LabeledData(2, 2);
  EXPECT_THROW(PartitionIid(data, 5, 0), InvalidInputError);
  EXPECT_THROW(PartitionIid(Dataset{}, 1, 0), InvalidInputError);
  EXPECT_THROW(PartitionDirichlet(data, 2, 0.0, 0), DomainError);
}

std::vector<double> LabelFractions(const Dataset& d, size_t classes) {
  std::vector<double> f(classes, 0.0);
  for (double y : d.labels) f[static_cast<size_t>(y)] += 1.0 / d.size();
  return f;
}

TEST(PartitionTest, LargeBetaApproachesGlobalLabelMix) {
  const Dataset data = LabeledData(10000, 2);
  const FederatedDataset fed = PartitionDirichlet(data, 10, 1000.0, 5);
  for (const auto& s : fed.shards) {
    const auto f = LabelFractions(s, 2);
    const double tv = 0.5 * (std::abs(f[0] - 0.5) + std::abs(f[1] - 0.5));
    EXPECT_LT(tv, 0.05);
  }
}

TEST(PartitionTest, SmallBetaConcentratesLabels) {
  const Dataset data = LabeledData(400, 5);
  const FederatedDataset fed = PartitionDirichlet(data, 20, 0.1, 6);
  std::vector<double> max_fraction;
  for (const auto& s : fed.shards) {
    const auto f = LabelFractions(s, 5);
    max_fraction.push_back(*std::max_element(f.begin(), f.end()));
  }
  std::nth_element(max_fraction.begin(), max_fraction.begin() + 10,
                   max_fraction.end());
  EXPECT_GT(max_fraction[10], 0.8);
}

TEST(SyntheticTest, DeterministicPerSeed) {
  SyntheticTaskSpec spec;
  spec.clients = 5;
  spec.samples_per_client = 20;
  const PartitionDescriptor iid;
  const FederatedDataset a = MakeSynthetic(spec, iid);
  const FederatedDataset b = MakeSynthetic(spec, iid);
  spec.seed = 1;
  const FederatedDataset c = MakeSynthetic(spec, iid);
  EXPECT_EQ(a.test.features, b.test.features);
  EXPECT_EQ(a.shards[3].features, b.shards[3].features);
  EXPECT_NE(a.test.features, c.test.features);
  // 5 clients x 20 training rows, plus the 20% held out for testing.
  EXPECT_EQ(MakeSyntheticSource(spec).size(), 125u);
}

double TrainedAccuracy(double separation, double noise) {
  SyntheticTaskSpec spec;
  spec.dimension = 5;
  spec.classes = 2;
  spec.separation = separation;
  spec.noise = noise;
  spec.clients = 4;
  spec.samples_per_client = 500;
  spec.seed = 8;
  const FederatedDataset fed = MakeSynthetic(spec, PartitionDescriptor{});
  Dataset train;
  train.feature_dim = spec.dimension;
  for (const auto& s : fed.shards) {
    for (size_t i = 0; i < s.size(); ++i) train.Append(s.row(i), s.labels[i]);
  }
  const auto model = MakeModel({ModelKind::kLogisticRegression, 5, 2});
  ModelVector params(model->parameter_count());
  ModelVector grad(params.size());
  const auto rows = AllRows(train);
  for (int step = 0; step < 300; ++step) {
    model->LossAndGrad(params, train, rows, &grad);
    grad *= 0.5;
    params -= grad;
  }
  return model->Evaluate(params, fed.test).accuracy;
}

TEST(SyntheticTest, WellSeparatedClassesAreLearnable) {
  EXPECT_GE(TrainedAccuracy(10.0, 0.1), 0.99);
}

TEST(SyntheticTest, ZeroSeparationStaysAtChance) {
  EXPECT_NEAR(TrainedAccuracy(0.0, 1.0), 0.5, 0.06);
}

TEST(SyntheticTest, RejectsDegenerateSpecs) {
  SyntheticTaskSpec spec;
  spec.classes = 1;
  EXPECT_THROW(MakeSyntheticSource(spec), InvalidInputError);
  spec.classes = 2;
  spec.dimension = 0;
  EXPECT_THROW(MakeSyntheticSource(spec), InvalidInputError);
}

TEST(StandardizationTest, ZeroMeanUnitVarianceAndConstantColumns) {
  Dataset d;
  d.feature_dim = 2;
  d.Append(std::vector<double>{1.0, 7.0}, 0);
  d.Append(std::vector<double>{3.0, 7.0}, 1);
  d.Append(std::vector<double>{8.0, 7.0}, 0);
  const Standardization s = FitStandardization(d);
  EXPECT_EQ(s.constant_columns, std::vector<size_t>{1});
  ApplyStandardization(s, d);
  double mean = 0.0, sq = 0.0;
  for (size_t i = 0; i < 3; ++i) {
    mean += d.row(i)[0] / 3;
    sq += d.row(i)[0] * d.row(i)[0] / 3;
    EXPECT_EQ(d.row(i)[1], 0.0);
  }
  EXPECT_NEAR(mean, 0.0, 1e-15);
  EXPECT_NEAR(sq, 1.0, 1e-14);
}

TEST(CsvTest, ParsesNumericRows) {
  CsvSchema schema;
  schema.label_column = "y";
  schema.standardize = false;
  const CsvData csv = ParseCsv("a,b,y\n1,2,0\n3,4,1\n5,6,0\n", schema);
  EXPECT_EQ(csv.data.size(), 3u);
  EXPECT_EQ(csv.data.feature_dim, 2u);
  EXPECT_EQ(csv.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(csv.data.features, (std::vector<double>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(csv.data.labels, (std::vector<double>{0, 1, 0}));
  EXPECT_TRUE(csv.class_names.empty());
}

TEST(CsvTest, ConstantColumnIsReportedNotDivided) {
  CsvSchema schema;
  schema.label_column = "y";
  const CsvData csv = ParseCsv("a,c,y\n1,5,0\n2,5,1\n3,5,0\n", schema);
  EXPECT_EQ(csv.constant_columns, std::vector<size_t>{1});
  for (size_t i = 0; i < 3; ++i) EXPECT_TRUE(std::isfinite(csv.data.row(i)[1]));
}

TEST(CsvTest, OneHotEncodesSortedLevels) {
  CsvSchema schema;
  schema.label_column = "label";
  schema.categorical_columns = {"color"};
  schema.standardize = false;
  const CsvData csv = ParseCsv(
      "color,x,label\nred,1,yes\nblue,2,no\ngreen,3,yes\nred,4,no\n", schema);
  EXPECT_EQ(csv.feature_names,
            (std::vector<std::string>{"color=blue", "color=green", "color=red",
                                      "x"}));
  EXPECT_EQ(csv.class_names, (std::vector<std::string>{"no", "yes"}));
  EXPECT_EQ(csv.data.features,
            (std::vector<double>{0, 0, 1, 1, 1, 0, 0, 2, 0, 1, 0, 3, 0, 0, 1, 4}));
  EXPECT_EQ(csv.data.labels, (std::vector<double>{1, 0, 1, 0}));
  // Each one-hot block sums to one.
  for (size_t i = 0; i < 4; ++i) {
    const auto r = csv.data.row(i);
    EXPECT_EQ(r[0] + r[1] + r[2], 1.0);
  }
}

TEST(CsvTest, MissingValuesDroppedOrImputed) {
  const std::string text = "a,b,y\n1,?,0\n3,4,1\n,8,0\n5,NA,1\n";
  CsvSchema schema;
  schema.label_column = "y";
  schema.standardize = false;
  const CsvData dropped = ParseCsv(text, schema);
  EXPECT_EQ(dropped.data.size(), 1u);
  EXPECT_EQ(dropped.dropped_rows, 3u);
  schema.missing = MissingPolicy::kImputeMean;
  const CsvData imputed = ParseCsv(text, schema);
  EXPECT_EQ(imputed.data.size(), 4u);
  EXPECT_EQ(imputed.data.features,
            (std::vector<double>{1, 6, 3, 4, 3, 8, 5, 6}));
}

TEST(CsvTest, IgnoredColumnsAreSkipped) {
  CsvSchema schema;
  schema.label_column = "y";
  schema.ignored_columns = {"id"};
  schema.standardize = false;
  const CsvData csv = ParseCsv("id,a,y\nx1,1,0\nx2,2,1\n", schema);
  EXPECT_EQ(csv.feature_names, std::vector<std::string>{"a"});
}

TEST(CsvTest, MalformedInputNamesTheLine) {
  CsvSchema schema;
  schema.label_column = "y";
  try {
    ParseCsv("a,y\n1,0\n2\n3,1\n", schema);
    FAIL() << "expected InvalidInputError";
  } catch (const InvalidInputError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos)
        << e.what();
  }
  try {
    ParseCsv("a,y\n1,0\nabc,1\n", schema);
    FAIL() << "expected InvalidInputError";
  } catch (const InvalidInputError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos)
        << e.what();
  }
  EXPECT_THROW(ParseCsv("", schema), InvalidInputError);
  schema.label_column = "missing";
  EXPECT_THROW(ParseCsv("a,y\n1,0\n", schema), InvalidInputError);
  EXPECT_THROW(LoadCsv("/nonexistent/file.csv", schema), InvalidInputError);
}

}  // namespace
}  // namespace dpfl
