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

#include "dpfl/verify.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "dpfl/baselines.h"
#include "dpfl/config.h"
#include "dpfl/errors.h"
#include "dpfl/rdp_accountant.h"
#include "dpfl/sampling_opt.h"

namespace dpfl {
namespace {

double RelativeError(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

CheckResult Check(const std::string& suite, const std::string& name,
                  double delta, double tolerance, size_t cases,
                  std::string detail = "") {
  CheckResult r;
  r.suite = suite;
  r.name = name;
  r.delta = delta;
  r.tolerance = tolerance;
  r.cases = cases;
  r.passed = delta <= tolerance;
  r.detail = std::move(detail);
  return r;
}

// ---------------------------------------------------------------- accounting

std::vector<CheckResult> AccountingSuite(uint64_t /*seed*/) {
  const std::vector<int> horizons = {1, 2, 3, 4, 5, 7, 10, 16, 25, 50, 100, 200};
  const std::vector<double> ratios = {0.1, 0.3, 0.5, 0.7, 0.9, 1.0};
  const std::vector<double> budgets = {0.5, 5.0, 100.0};
  double closed_form = 0.0;
  double conservation = 0.0;
  double monotone = 0.0;
  size_t cases = 0;
  for (int rounds : horizons) {
    std::vector<int> transitions = {1, 2, (rounds + 3) / 4, (rounds + 1) / 2,
                                    rounds};
    std::sort(transitions.begin(), transitions.end());
    transitions.erase(std::unique(transitions.begin(), transitions.end()),
                      transitions.end());
    for (int tn : transitions) {
      if (tn < 1 || tn > rounds) continue;
      for (double ratio : ratios) {
        for (double budget : budgets) {
          ++cases;
          const SpendSchedule s = SpendRecursive(budget, rounds, tn, ratio);
          for (int t = 1; t <= rounds; ++t) {
            const double spend = s.per_round_spend[t - 1];
            closed_form = std::max(
                closed_form,
                RelativeError(SpendClosedForm(budget, rounds, tn, ratio, t),
                              spend));
            if (t > 1) {
              const double prev = s.per_round_spend[t - 2];
              // Non-decreasing throughout, constant from T_n on.
              monotone = std::max(monotone, (prev - spend) / budget);
              if (t > tn) {
                monotone = std::max(monotone, RelativeError(prev, spend));
              }
            }
          }
          conservation =
              std::max(conservation, RelativeError(s.total(), budget));
        }
      }
    }
  }

  // RDP -> DP -> RDP round trip over orders and budgets.
  double round_trip = 0.0;
  size_t trips = 0;
  for (double alpha : {1.5, 2.0, 4.0, 8.0, 32.0}) {
    for (double eps : {12.0, 15.0, 30.0, 100.0}) {
      const RdpOrder order(alpha);
      if (eps < ConversionOffset(order, 1e-5)) continue;
      const RdpBudget rdp = DpToRdp({eps, 1e-5}, order);
      round_trip = std::max(round_trip, RelativeError(RdpToDp(rdp, 1e-5), eps));
      ++trips;
    }
  }

  return {
      Check("accounting", "closed_form_matches_recursion", closed_form, 1e-12,
            cases),
      Check("accounting", "budget_conserved", conservation, 1e-9, cases),
      Check("accounting", "spend_non_decreasing_then_flat", monotone, 1e-12,
            cases),
      Check("accounting", "dp_rdp_round_trip", round_trip, 1e-12, trips),
  };
}

// ----------------------------------------------------------------- scheduler

std::vector<CheckResult> SchedulerSuite(uint64_t seed) {
  RunConfig config;
  config.seed = seed;
  double clip_mean = 0.0;
  double product = 0.0;
  double slack = 0.0;
  double exhaustion = 0.0;
  size_t cases = 0;
  for (const char* scheme : {"time_adaptive", "idp_fedavg", "dp_fedavg"}) {
    for (bool permute : {false, true}) {
      config.scheme = scheme;
      config.permute_rates = permute;
      const Schedule s = PlanScheme(ToSchemeConfig(config));
      for (const RoundPlan& round : s.rounds) {
        double sum = 0.0;
        for (const ClientRoundPlan& c : round.clients) {
          sum += c.clip;
          const double target = config.privacy.clip_mean * round.sigma_global;
          product = std::max(product, RelativeError(c.clip * c.sigma, target));
        }
        clip_mean = std::max(
            clip_mean,
            RelativeError(sum / round.clients.size(), config.privacy.clip_mean));
      }
      const AdherenceReport report =
          VerifyBudgetAdherence(s, config.privacy.delta);
      for (const ClientAdherence& a : report.clients) {
        slack = std::max(slack, -a.slack);
        exhaustion = std::max(exhaustion, std::abs(a.slack));
        ++cases;
      }
    }
  }
  return {
      Check("scheduler", "mean_clip_equals_c", clip_mean, 1e-9, cases),
      Check("scheduler", "clip_times_sigma_constant", product, 1e-9, cases),
      Check("scheduler", "budget_slack_non_negative", slack, 1e-6, cases),
      Check("scheduler", "budget_exhausted_at_last_round", exhaustion, 1e-6,
            cases),
  };
}

// --------------------------------------------------------------- permutation

double BruteForceObjective(const std::vector<double>& clips,
                           const std::vector<double>& rates, double rho) {
  std::vector<size_t> perm(clips.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    best = std::min(best, PermutationObjective(clips, rates, perm, rho));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<CheckResult> PermutationSuite(uint64_t seed) {
  Rng rng(MixBits(seed ^ 0x7065726d));
  double worst = 0.0;
  size_t instances = 1000;
  for (size_t i = 0; i < instances; ++i) {
    const size_t n = 1 + rng.UniformIndex(8);
    const bool ties = rng.Bernoulli(0.3);
    std::vector<double> clips(n), rates(n);
    for (size_t k = 0; k < n; ++k) {
      clips[k] = 0.1 + 3.0 * rng.Uniform();
      rates[k] = 0.05 + 0.9 * rng.Uniform();
      if (ties) {
        clips[k] = 0.5 * (1 + rng.UniformIndex(3));
        rates[k] = 0.25 * (1 + rng.UniformIndex(3));
      }
    }
    const double rho = 1.2 + 2.8 * rng.Uniform();
    const PermutationAssignment a = OptimizeRatePermutation(clips, rates, rho);
    worst = std::max(worst, RelativeError(a.objective,
                                          BruteForceObjective(clips, rates, rho)));
  }
  // Only summation order can separate tied optima.
  return {Check("permutation", "matches_exhaustive_search", worst, 1e-14,
                instances)};
}

// --------------------------------------------------------------------- noise

struct NoiseStats {
  double worst = 0.0;     // over sampling-pattern buckets
  double overall = 0.0;
  size_t draws = 0;
  size_t buckets = 0;
};

// Runs the real engine on updates that are exactly zero, so the aggregate is
// pure noise, and compares its per-coordinate variance with (c sigma^t)^2
// for each realized number of sampled clients.
NoiseStats MeasureAggregateNoise(size_t draws, uint64_t seed) {
  const size_t n = 5;
  const size_t dim = 4;
  Dataset zero;
  zero.feature_dim = dim - 1;
  zero.Append(std::vector<double>(dim - 1, 0.0), 0.0);
  const std::vector<Dataset> shards(n, zero);
  const auto model =
      MakeModel({ModelKind::kLinearRegression, dim - 1, 1, 1});

  RoundPlan plan;
  const std::vector<double> rates = {0.2, 0.5, 0.9, 0.35, 0.7};
  const std::vector<double> sigmas = {1.5, 3.0, 0.8, 2.2, 5.0};
  plan.clients.resize(n);
  for (size_t c = 0; c < n; ++c) {
    plan.clients[c].rate = rates[c];
    plan.clients[c].sigma = sigmas[c];
  }
  const double clip = 1.3;
  AllocateClips(plan, clip);
  plan.mean_rate = std::accumulate(rates.begin(), rates.end(), 0.0) / n;
  const double expected = std::pow(clip * plan.sigma_global, 2);

  EngineConfig engine;
  engine.local.epochs = 1;
  const RngStreams streams(seed);
  std::map<int, std::pair<double, size_t>> by_pattern;
  double total = 0.0;
  for (size_t d = 0; d < draws; ++d) {
    plan.round = static_cast<int>(d + 1);
    ServerState state{ModelVector(dim), ModelVector(dim)};
    const RoundOutcome out =
        RunRound(*model, state, plan, shards, engine, streams, 0.1);
    double sq = 0.0;
    for (size_t j = 0; j < dim; ++j) sq += out.aggregate[j] * out.aggregate[j];
    auto& bucket = by_pattern[out.sampled_count];
    bucket.first += sq;
    bucket.second += dim;
    total += sq;
  }
  NoiseStats stats;
  stats.draws = draws;
  stats.overall = RelativeError(total / (draws * dim), expected);
  for (const auto& [count, bucket] : by_pattern) {
    if (bucket.second < 20000) continue;  // too few draws to resolve 5%
    stats.worst =
        std::max(stats.worst, RelativeError(bucket.first / bucket.second, expected));
    ++stats.buckets;
  }
  return stats;
}

std::vector<CheckResult> NoiseSuite(uint64_t seed) {
  const NoiseStats s = MeasureAggregateNoise(100000, seed);
  return {
      Check("noise", "aggregate_variance_overall", s.overall, 0.05, s.draws),
      Check("noise", "aggregate_variance_per_sampling_count", s.worst, 0.05,
            s.draws, std::to_string(s.buckets) + " buckets"),
  };
}

// ------------------------------------------------------------------- lattice

double ScheduleDistance(const Schedule& a, const Schedule& b) {
  if (a.rounds.size() != b.rounds.size()) {
    return std::numeric_limits<double>::infinity();
  }
  auto diff = [](double x, double y) {
    if (x == y) return 0.0;
    return std::abs(x - y);
  };
  double worst = 0.0;
  for (size_t t = 0; t < a.rounds.size(); ++t) {
    const RoundPlan& ra = a.rounds[t];
    const RoundPlan& rb = b.rounds[t];
    if (ra.clients.size() != rb.clients.size()) {
      return std::numeric_limits<double>::infinity();
    }
    worst = std::max({worst, diff(ra.mean_rate, rb.mean_rate),
                      diff(ra.sigma_global, rb.sigma_global)});
    for (size_t c = 0; c < ra.clients.size(); ++c) {
      const ClientRoundPlan& x = ra.clients[c];
      const ClientRoundPlan& y = rb.clients[c];
      worst = std::max({worst, diff(x.rate, y.rate), diff(x.sigma, y.sigma),
                        diff(x.clip, y.clip), diff(x.rdp_spent, y.rdp_spent)});
    }
  }
  return worst;
}

// 0 when both trajectories agree bit for bit, 1 otherwise.
double TrajectoryMismatch(const TrainResult& a, const TrainResult& b) {
  if (a.final_model != b.final_model) return 1.0;
  if (a.history.size() != b.history.size()) return 1.0;
  for (size_t i = 0; i < a.history.size(); ++i) {
    const RoundMetrics& x = a.history[i];
    const RoundMetrics& y = b.history[i];
    if (x.n_sampled != y.n_sampled || x.test_loss != y.test_loss) return 1.0;
  }
  return 0.0;
}

std::vector<CheckResult> LatticeSuite(uint64_t seed) {
  RunConfig config;
  config.seed = seed;
  config.privacy.client_count = 6;
  config.privacy.rounds = 6;
  config.dataset.dimension = 5;
  config.dataset.classes = 3;
  config.dataset.samples_per_client = 20;
  config.group_fractions = {0.5, 0.5};
  config.group_budgets = {15.0, 25.0};
  config.group_saving_rates = {0.3, 0.6};
  config.group_transition_rounds = {1, 1};
  const FederatedDataset data = BuildDataset(config);
  const auto model = MakeModel(ToModelShape(config, data));
  const RngStreams streams(seed);

  auto train = [&](const Schedule& s, const SchemeConfig& sc) {
    StaticSchedulePolicy policy(s);
    return Train(*model, policy, data, sc.engine, streams);
  };
  std::vector<CheckResult> out;
  auto add = [&](const std::string& name, const Schedule& a, const Schedule& b,
                 const SchemeConfig& sc) {
    out.push_back(
        Check("lattice", name + "_schedule", ScheduleDistance(a, b), 1e-9, 1));
    out.push_back(Check("lattice", name + "_trajectory",
                        TrajectoryMismatch(train(a, sc), train(b, sc)), 0.0, 1));
  };

  // Time-adaptive with T_n = 1 everywhere is IDP-FedAvg.
  config.scheme = "time_adaptive";
  SchemeConfig sc = ToSchemeConfig(config);
  const Schedule ta = PlanScheme(sc);
  sc.kind = SchemeKind::kIdpFedAvg;
  const Schedule idp = PlanScheme(sc);
  add("time_adaptive_tn1_is_idp_fedavg", ta, idp, sc);

  // IDP-FedAvg with one shared budget is DP-FedAvg.
  config.group_budgets = {18.0, 18.0};
  sc = ToSchemeConfig(config);
  sc.kind = SchemeKind::kIdpFedAvg;
  const Schedule idp_uniform = PlanScheme(sc);
  sc.kind = SchemeKind::kDpFedAvg;
  const Schedule dp = PlanScheme(sc);
  add("idp_fedavg_uniform_is_dp_fedavg", idp_uniform, dp, sc);

  // DP-FedAvg without noise or clipping at q = 1 is FedAvg.
  config.privacy.spend_rate = 1.0;
  config.group_saving_rates = {1.0, 1.0};
  sc = ToSchemeConfig(config);
  sc.kind = SchemeKind::kDpFedAvg;
  Schedule dp_open = PlanScheme(sc);
  for (RoundPlan& round : dp_open.rounds) {
    round.sigma_global = 0.0;
    round.mean_rate = 1.0;
    for (ClientRoundPlan& c : round.clients) {
      c.sigma = 0.0;
      c.rate = 1.0;
      c.clip = std::numeric_limits<double>::infinity();
      c.rdp_spent = 0.0;
    }
  }
  sc.kind = SchemeKind::kFedAvg;
  Schedule fedavg = PlanScheme(sc);
  for (RoundPlan& round : fedavg.rounds) {
    for (ClientRoundPlan& c : round.clients) c.rdp_spent = 0.0;
  }
  add("dp_fedavg_open_is_fedavg", dp_open, fedavg, sc);
  return out;
}

// ----------------------------------------------------------------- gradients

std::vector<CheckResult> GradientSuite(uint64_t seed) {
  std::vector<CheckResult> out;
  Rng rng(MixBits(seed ^ 0x67726164));
  for (ModelKind kind : {ModelKind::kLinearRegression,
                         ModelKind::kLogisticRegression,
                         ModelKind::kPerceptron}) {
    const ModelShape shape{kind, 4, 3, 5};
    const auto model = MakeModel(shape);
    Dataset data;
    data.feature_dim = shape.input_dim;
    for (int i = 0; i < 12; ++i) {
      std::vector<double> x(shape.input_dim);
      for (double& v : x) v = rng.Gaussian();
      const double y = kind == ModelKind::kLinearRegression
                           ? rng.Gaussian()
                           : static_cast<double>(rng.UniformIndex(3));
      data.Append(x, y);
    }
    double worst = 0.0;
    const size_t probes = 100;
    for (size_t p = 0; p < probes; ++p) {
      ModelVector params(model->parameter_count());
      for (size_t j = 0; j < params.size(); ++j) params[j] = rng.Gaussian();
      std::vector<size_t> rows;
      for (size_t i = 0; i < data.size(); ++i) {
        if (rng.Bernoulli(0.6)) rows.push_back(i);
      }
      if (rows.empty()) rows.push_back(0);
      ModelVector grad(params.size());
      model->LossAndGrad(params, data, rows, &grad);
      ModelVector direction(params.size());
      for (size_t j = 0; j < params.size(); ++j) direction[j] = rng.Gaussian();
      direction *= 1.0 / direction.Norm();
      const double h = 1e-5;
      const double plus =
          model->LossAndGrad(params + direction * h, data, rows, nullptr);
      const double minus =
          model->LossAndGrad(params - direction * h, data, rows, nullptr);
      const double numeric = (plus - minus) / (2.0 * h);
      double analytic = 0.0;
      for (size_t j = 0; j < params.size(); ++j) {
        analytic += grad[j] * direction[j];
      }
      worst = std::max(worst, std::abs(numeric - analytic) /
                                  std::max({std::abs(numeric),
                                            std::abs(analytic), 1e-6}));
    }
    out.push_back(Check("gradients", ModelKindName(kind) + "_finite_difference",
                        worst, 1e-5, probes));
  }
  return out;
}

// ---------------------------------------------------------------------- bias

struct GaussianClients {
  std::vector<ModelVector> means;
  std::vector<double> spreads;
  ModelVector Draw(size_t c, Rng& rng) const {
    ModelVector u = means[c];
    for (size_t j = 0; j < u.size(); ++j) u[j] += spreads[c] * rng.Gaussian();
    return u;
  }
};

std::vector<CheckResult> BiasSuite(uint64_t seed) {
  Rng rng(MixBits(seed ^ 0x62696173));
  const size_t configs = 40;
  size_t fixed_ok = 0;
  size_t random_ok = 0;
  for (size_t k = 0; k < configs; ++k) {
    const size_t n = 1 + rng.UniformIndex(5);
    const size_t dim = 1 + rng.UniformIndex(4);
    GaussianClients clients;
    BiasMcConfig mc;
    mc.dimension = dim;
    for (size_t c = 0; c < n; ++c) {
      ModelVector mean(dim);
      for (size_t j = 0; j < dim; ++j) mean[j] = 1.5 * rng.Gaussian();
      clients.means.push_back(mean);
      clients.spreads.push_back(0.2 + rng.Uniform());
      mc.rates.push_back(0.2 + 0.8 * rng.Uniform());
      mc.clips.push_back(0.3 + 2.5 * rng.Uniform());
      mc.sigmas.push_back(0.1 + rng.Uniform());
    }
    mc.draw_update = [&clients](size_t c, Rng& r) { return clients.Draw(c, r); };
    const double rho = 2.0;
    const UpdateMoments moments = EstimateUpdateMoments(
        mc.draw_update, n, 20000, rho, seed + 7919 * k);
    BiasBoundInput input{mc.rates, mc.clips, rho, moments.moments,
                         clients.means};

    const BiasMcResult fixed = EstimateBiasMc(mc, 4000, seed + k);
    if (fixed.bias_norm <=
        BiasBoundFixedAssignment(input) + 3.0 * fixed.norm_standard_error) {
      ++fixed_ok;
    }
    mc.permute_budgets = true;
    const BiasMcResult shuffled = EstimateBiasMc(mc, 4000, seed + k);
    if (shuffled.bias_norm <=
        BiasBoundRandomAssignment(input) + 3.0 * shuffled.norm_standard_error) {
      ++random_ok;
    }
  }

  double collapse = 0.0;
  for (double m : {0.3, 1.0, 4.0}) {
    for (double c : {0.5, 1.0, 2.0}) {
      for (double rho : {1.5, 2.0, 3.0}) {
        BiasBoundInput one{{0.4}, {c}, rho, {m}, {ModelVector(2)}};
        collapse = std::max(
            collapse, std::abs(BiasBoundRandomAssignment(one) -
                               ClippingBiasBound(m, c, rho)));
      }
    }
  }
  auto miss = [&](size_t ok) {
    return 1.0 - static_cast<double>(ok) / static_cast<double>(configs);
  };
  return {
      Check("bias", "fixed_assignment_bound_holds", miss(fixed_ok), 0.01,
            configs),
      Check("bias", "random_assignment_bound_holds", miss(random_ok), 0.01,
            configs),
      Check("bias", "single_client_reduces_to_clipping_bias", collapse, 0.0,
            27),
  };
}

using Suite = std::function<std::vector<CheckResult>(uint64_t)>;

const std::vector<std::pair<std::string, Suite>>& Registry() {
  static const std::vector<std::pair<std::string, Suite>> suites = {
      {"accounting", AccountingSuite}, {"scheduler", SchedulerSuite},
      {"permutation", PermutationSuite}, {"noise", NoiseSuite},
      {"lattice", LatticeSuite},       {"gradients", GradientSuite},
      {"bias", BiasSuite},
  };
  return suites;
}

}  // namespace

const std::vector<std::string>& VerifySuiteNames() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, suite] : Registry()) v.push_back(name);
    return v;
  }();
  return names;
}

std::vector<CheckResult> RunVerifySuite(const std::string& suite,
                                        uint64_t seed) {
  std::vector<CheckResult> out;
  bool found = false;
  for (const auto& [name, run] : Registry()) {
    if (suite != "all" && suite != name) continue;
    found = true;
    auto checks = run(seed);
    out.insert(out.end(), checks.begin(), checks.end());
  }
  if (!found) throw InvalidInputError("unknown verify suite '" + suite + "'");
  return out;
}

void WriteCheckJsonLines(std::ostream& out,
                         const std::vector<CheckResult>& checks) {
  for (const CheckResult& c : checks) {
    nlohmann::json line = {{"suite", c.suite},     {"check", c.name},
                           {"pass", c.passed},     {"delta", c.delta},
                           {"tolerance", c.tolerance}, {"cases", c.cases}};
    if (!c.detail.empty()) line["detail"] = c.detail;
    out << line.dump() << '\n';
  }
}

bool AllPassed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed; });
}

}  // namespace dpfl
