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

#include "dpfl/fl_engine.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <future>
#include <iostream>
#include <numbers>
#include <numeric>

#include "dpfl/errors.h"
#include "dpfl/format.h"

namespace dpfl {
namespace {

constexpr char kCheckpointMagic[8] = {'D', 'P', 'F', 'L', 'S', 'I', 'M', '1'};

// Noise std of one client's share; zero when the run is non-private.
double ShareStd(double clip, double sigma, size_t clients) {
  if (sigma == 0.0) return 0.0;
  return clip * sigma / std::sqrt(static_cast<double>(clients));
}

void PutU64(std::ostream& out, uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

uint64_t GetU64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw InvalidInputError("truncated checkpoint");
  }
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void WarnIfNoiseMismatched(const RoundPlan& plan) {
  static std::atomic<bool> warned{false};
  if (warned.load() || plan.clients.empty() || plan.sigma_global == 0.0) {
    return;
  }
  double clip_sum = 0.0;
  for (const auto& c : plan.clients) clip_sum += c.clip;
  const double target = clip_sum / plan.clients.size() * plan.sigma_global;
  for (const auto& c : plan.clients) {
    if (std::abs(c.clip * c.sigma - target) > 1e-9 * target) {
      std::clog << "warning: round " << plan.round
                << ": clip * sigma differs across clients; compensation noise "
                   "no longer matches client noise\n";
      warned.store(true);
      return;
    }
  }
}

}  // namespace

ModelVector ClipUpdate(const ModelVector& delta, double clip) {
  const double norm = delta.Norm();
  if (norm <= clip || norm == 0.0) return delta;
  return delta * (clip / norm);
}

ClientUpdate ComputeClientUpdate(const Model& model, const ModelVector& global,
                                 const Dataset& shard,
                                 const LocalTraining& local, double clip,
                                 double noise_std, Rng& data_rng,
                                 Rng& noise_rng) {
  ClientUpdate update;
  update.sampled = true;
  if (shard.empty()) {
    update.status = ClientStatus::kSkippedEmptyShard;
    return update;
  }
  if (local.batch_size == 0) throw InvalidInputError("batch size must be > 0");

  ModelVector params = global;
  ModelVector grad(params.size());
  std::vector<size_t> order(shard.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < local.epochs; ++epoch) {
    data_rng.Shuffle(order);
    for (size_t begin = 0; begin < order.size(); begin += local.batch_size) {
      const size_t end = std::min(order.size(), begin + local.batch_size);
      const std::span<const size_t> batch(order.data() + begin, end - begin);
      model.LossAndGrad(params, shard, batch, &grad);
      params.AddScaled(grad, -local.learning_rate);
    }
  }

  update.raw = params - global;
  update.clipped = ClipUpdate(update.raw, clip);
  update.was_clipped = update.raw.Norm() > clip;
  update.perturbed = update.clipped;
  if (noise_std > 0.0) {
    for (size_t j = 0; j < update.perturbed.size(); ++j) {
      update.perturbed[j] += noise_std * noise_rng.Gaussian();
    }
  }
  update.status = ClientStatus::kOk;
  return update;
}

RoundOutcome RunRound(const Model& model, ServerState& state,
                      const RoundPlan& plan, const std::vector<Dataset>& shards,
                      const EngineConfig& config, const RngStreams& streams,
                      double learning_rate) {
  const size_t n = plan.clients.size();
  if (n != shards.size()) {
    throw InvalidInputError("round plan has " + std::to_string(n) +
                            " clients but there are " +
                            std::to_string(shards.size()) + " shards");
  }
  WarnIfNoiseMismatched(plan);
  const auto t = static_cast<uint64_t>(plan.round);
  LocalTraining local = config.local;
  local.learning_rate = learning_rate;

  RoundOutcome outcome;
  outcome.round = plan.round;
  outcome.updates.resize(n);
  std::vector<bool> sampled(n);
  for (size_t c = 0; c < n; ++c) {
    Rng rng = streams.Stream(RngStreams::Purpose::kSampling, c, t);
    sampled[c] = rng.Bernoulli(plan.clients[c].rate);
  }

  auto work = [&](size_t c) {
    const ClientRoundPlan& p = plan.clients[c];
    Rng data_rng = streams.Stream(RngStreams::Purpose::kDataShuffle, c, t);
    Rng noise_rng = streams.Stream(RngStreams::Purpose::kClientNoise, c, t);
    ClientUpdate u =
        ComputeClientUpdate(model, state.params, shards[c], local, p.clip,
                            ShareStd(p.clip, p.sigma, n), data_rng, noise_rng);
    u.client_id = static_cast<int>(c);
    return u;
  };
  const int threads = std::max(1, config.threads);
  for (size_t begin = 0; begin < n; begin += threads) {
    const size_t end = std::min(n, begin + threads);
    if (threads == 1) {
      if (sampled[begin]) outcome.updates[begin] = work(begin);
      continue;
    }
    std::vector<std::future<ClientUpdate>> jobs(end - begin);
    for (size_t c = begin; c < end; ++c) {
      if (sampled[c]) jobs[c - begin] = std::async(std::launch::async, work, c);
    }
    for (size_t c = begin; c < end; ++c) {
      if (sampled[c]) outcome.updates[c] = jobs[c - begin].get();
    }
  }

  const size_t dim = state.params.size();
  outcome.aggregate = ModelVector(dim);
  const double compensation_std = ShareStd(
      [&] {
        double s = 0.0;
        for (const auto& p : plan.clients) s += p.clip;
        return s / n;
      }(),
      plan.sigma_global, n);
  double norm_sum = 0.0;
  int clipped = 0;
  for (size_t c = 0; c < n; ++c) {
    ClientUpdate& u = outcome.updates[c];
    u.client_id = static_cast<int>(c);
    if (sampled[c] && u.status == ClientStatus::kOk) {
      outcome.aggregate += u.perturbed;
      ++outcome.sampled_count;
      norm_sum += u.raw.Norm();
      if (u.was_clipped) ++clipped;
      continue;
    }
    if (u.status == ClientStatus::kSkippedEmptyShard) ++outcome.skipped_count;
    // Not sampled (or skipped): the server injects the missing noise share.
    if (compensation_std > 0.0) {
      Rng rng = streams.Stream(RngStreams::Purpose::kServerNoise, c, t);
      for (size_t j = 0; j < dim; ++j) {
        outcome.aggregate[j] += compensation_std * rng.Gaussian();
      }
    }
  }
  if (outcome.sampled_count > 0) {
    outcome.mean_update_norm = norm_sum / outcome.sampled_count;
    outcome.frac_clipped = static_cast<double>(clipped) / outcome.sampled_count;
  }

  // The scheduled q^t, never the realized fraction.
  ModelVector step = outcome.aggregate * (1.0 / (plan.mean_rate * n));
  if (state.velocity.size() != dim) state.velocity = ModelVector(dim);
  state.velocity *= config.server_momentum;
  state.velocity += step;
  state.params.AddScaled(state.velocity, config.server_lr);
  return outcome;
}

double RoundLearningRate(const EngineConfig& config, int t, int rounds) {
  const double base = config.local.learning_rate;
  if (config.lr_schedule == LrSchedule::kConstant || rounds <= 1) return base;
  return 0.5 * base *
         (1.0 + std::cos(std::numbers::pi * (t - 1) / static_cast<double>(rounds)));
}

TrainResult Train(const Model& model, RoundPolicy& policy,
                  const FederatedDataset& data, const EngineConfig& config,
                  const RngStreams& streams) {
  TrainResult result;
  Rng init_rng = streams.Stream(RngStreams::Purpose::kInit);
  ServerState state;
  state.params = model.InitialParameters(init_rng);
  result.initial_model = state.params;

  const int rounds = policy.rounds();
  std::vector<double> cumulative(data.shards.size(), 0.0);
  for (int t = 1; t <= rounds; ++t) {
    RoundPlan plan = policy.Plan(t);
    const double lr = RoundLearningRate(config, t, rounds);
    const RoundOutcome outcome =
        RunRound(model, state, plan, data.shards, config, streams, lr);
    policy.Observe(plan, outcome);

    RoundMetrics m;
    m.round = t;
    const Evaluation eval = model.Evaluate(state.params, data.test);
    m.test_acc = eval.accuracy;
    m.test_loss = eval.loss;
    m.n_sampled = outcome.sampled_count;
    m.mean_update_norm = outcome.mean_update_norm;
    m.frac_clipped = outcome.frac_clipped;
    m.skipped = outcome.skipped_count;
    m.learning_rate = lr;
    for (size_t c = 0; c < cumulative.size(); ++c) {
      cumulative[c] += plan.clients[c].rdp_spent;
    }
    m.cumulative_rdp = cumulative;
    result.history.push_back(std::move(m));
    result.plans.push_back(plan);
  }
  result.final_model = state.params;
  return result;
}

void WriteMetricsCsv(std::ostream& out, const std::vector<RoundMetrics>& rows) {
  out << "round,test_acc,test_loss,n_sampled,mean_update_norm,frac_clipped\n";
  for (const RoundMetrics& m : rows) {
    out << m.round << ',' << FormatDouble(m.test_acc) << ','
        << FormatDouble(m.test_loss) << ',' << m.n_sampled << ','
        << FormatDouble(m.mean_update_norm) << ','
        << FormatDouble(m.frac_clipped) << '\n';
  }
}

void WriteCheckpoint(std::ostream& out, const ModelVector& model) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  PutU64(out, model.size());
  for (double v : model.values()) PutU64(out, std::bit_cast<uint64_t>(v));
}

ModelVector ReadCheckpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) ||
      std::memcmp(magic, kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw InvalidInputError("not a DPFLSIM1 checkpoint");
  }
  const uint64_t dim = GetU64(in);
  std::vector<double> values(dim);
  for (double& v : values) v = std::bit_cast<double>(GetU64(in));
  return ModelVector(std::move(values));
}

void SaveCheckpoint(const std::string& path, const ModelVector& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot write checkpoint '" + path + "'");
  WriteCheckpoint(out, model);
}

ModelVector LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot read checkpoint '" + path + "'");
  return ReadCheckpoint(in);
}

}  // namespace dpfl
