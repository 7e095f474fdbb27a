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

// Federated training with client-level distributed DP.
//
// Each round every client is sampled independently with its scheduled rate.
// A sampled client trains locally, clips its update to c_n^t and adds its
// share N(0, (c_n^t sigma_n^t)^2 / N) of the noise. For every client that
// was not sampled the server adds N(0, (c sigma^t)^2 / N) instead, so the
// total noise power does not depend on who participated. The aggregate is
// divided by the scheduled mean rate q^t times N.

#ifndef DPFL_FL_ENGINE_H_
#define DPFL_FL_ENGINE_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dpfl/data.h"
#include "dpfl/model_vector.h"
#include "dpfl/models.h"
#include "dpfl/rng.h"
#include "dpfl/scheduler.h"

namespace dpfl {

// delta * min(1, clip / ||delta||). An infinite clip returns delta.
ModelVector ClipUpdate(const ModelVector& delta, double clip);

struct LocalTraining {
  int epochs = 3;           // L
  size_t batch_size = 32;   // B
  double learning_rate = 0.1;
};

enum class LrSchedule { kConstant, kCosine };

struct EngineConfig {
  LocalTraining local;
  LrSchedule lr_schedule = LrSchedule::kConstant;
  double server_lr = 1.0;
  double server_momentum = 0.0;
  int threads = 1;  // client updates computed concurrently
};

enum class ClientStatus { kOk, kNotSampled, kSkippedEmptyShard };

struct ClientUpdate {
  int client_id = 0;
  ModelVector raw;        // theta^{t,L} - theta^{t,0}
  ModelVector clipped;    // before noise
  ModelVector perturbed;  // clipped + client noise
  bool sampled = false;
  bool was_clipped = false;
  ClientStatus status = ClientStatus::kNotSampled;
};

// L epochs of mini-batch SGD from `global`, then clip and noise. The last
// batch of an epoch may be smaller; its gradient is averaged over its
// actual size. An empty shard yields status kSkippedEmptyShard.
ClientUpdate ComputeClientUpdate(const Model& model, const ModelVector& global,
                                 const Dataset& shard,
                                 const LocalTraining& local, double clip,
                                 double noise_std, Rng& data_rng,
                                 Rng& noise_rng);

struct ServerState {
  ModelVector params;
  ModelVector velocity;  // server momentum buffer
};

struct RoundOutcome {
  int round = 0;
  std::vector<ClientUpdate> updates;  // one per client, id order
  ModelVector aggregate;              // noisy sum before 1/(q^t N)
  int sampled_count = 0;
  int skipped_count = 0;
  double mean_update_norm = 0.0;      // over sampled clients
  double frac_clipped = 0.0;          // over sampled clients
};

// One round against a fixed plan. Random draws come from per-(client,
// round) streams; aggregation runs in client-id order.
RoundOutcome RunRound(const Model& model, ServerState& state,
                      const RoundPlan& plan, const std::vector<Dataset>& shards,
                      const EngineConfig& config, const RngStreams& streams,
                      double learning_rate);

// Supplies round plans during training and observes the outcome, so that
// controllers like adaptive clipping can fold state across rounds.
class RoundPolicy {
 public:
  virtual ~RoundPolicy() = default;
  virtual int rounds() const = 0;
  virtual RoundPlan Plan(int t) = 0;
  // May amend the plan's accounting (e.g. side-mechanism charges).
  virtual void Observe(RoundPlan& /*plan*/, const RoundOutcome& /*outcome*/) {}
};

class StaticSchedulePolicy final : public RoundPolicy {
 public:
  explicit StaticSchedulePolicy(const Schedule& schedule)
      : schedule_(schedule) {}
  int rounds() const override {
    return static_cast<int>(schedule_.rounds.size());
  }
  RoundPlan Plan(int t) override { return schedule_.rounds.at(t - 1); }

 private:
  const Schedule& schedule_;
};

struct RoundMetrics {
  int round = 0;
  double test_acc = 0.0;
  double test_loss = 0.0;
  int n_sampled = 0;
  double mean_update_norm = 0.0;
  double frac_clipped = 0.0;
  int skipped = 0;
  double learning_rate = 0.0;
  std::vector<double> cumulative_rdp;  // per client, echoed from the plan
};

struct TrainResult {
  ModelVector initial_model;
  ModelVector final_model;
  std::vector<RoundMetrics> history;
  std::vector<RoundPlan> plans;  // as executed
};

double RoundLearningRate(const EngineConfig& config, int t, int rounds);

TrainResult Train(const Model& model, RoundPolicy& policy,
                  const FederatedDataset& data, const EngineConfig& config,
                  const RngStreams& streams);

// round,test_acc,test_loss,n_sampled,mean_update_norm,frac_clipped
void WriteMetricsCsv(std::ostream& out, const std::vector<RoundMetrics>& rows);

// "DPFLSIM1", u64 dimension, then float64 values; all little-endian.
void WriteCheckpoint(std::ostream& out, const ModelVector& model);
ModelVector ReadCheckpoint(std::istream& in);
void SaveCheckpoint(const std::string& path, const ModelVector& model);
ModelVector LoadCheckpoint(const std::string& path);

}  // namespace dpfl

#endif  // DPFL_FL_ENGINE_H_
