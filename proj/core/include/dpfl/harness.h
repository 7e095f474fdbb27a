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

// Run orchestration behind the dpfl_sim subcommands.

#ifndef DPFL_HARNESS_H_
#define DPFL_HARNESS_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpfl/baselines.h"
#include "dpfl/config.h"

namespace dpfl {

inline constexpr char kArtifactVersion[] = "0.1.0";

// FNV-1a of the canonical config JSON (output_dir excluded, since it does
// not affect results).
std::string ConfigDigest(const RunConfig& config);
// FNV-1a of the schedule CSV dump.
std::string ScheduleDigest(const Schedule& schedule);

struct PlanArtifacts {
  Schedule schedule;
  AdherenceReport adherence;
  std::optional<PermutationAssignment> permutation;
};

// Builds the pre-training schedule. Adaptive clipping is shown as its
// worst-case projection.
PlanArtifacts PlanRun(const RunConfig& config);

// Writes schedule.csv, spend_curve.csv and adherence.csv into `out_dir`.
PlanArtifacts CmdPlan(const RunConfig& config,
                      const std::filesystem::path& out_dir);

struct RunArtifacts {
  std::filesystem::path directory;
  nlohmann::json manifest;
  SchemeResult result;
};

// Trains one configuration in memory. The manifest holds everything except
// the wall clock.
RunArtifacts ExecuteRun(const RunConfig& config);

// ExecuteRun, then persists manifest.json, metrics.csv, schedule.csv and
// model.bin under <out_root>/<timestamp>_<config digest>/.
RunArtifacts CmdRun(const RunConfig& config,
                    const std::filesystem::path& out_root);

struct SweepMember {
  RunConfig config;
  std::string label;  // e.g. "time_adaptive/budgets=0/rates=1/transitions=0/seed=3"
};

// Cartesian product of schemes x budget sets x rate sets x transition
// sets x seeds. Empty axes fall back to the base config's value.
std::vector<SweepMember> ExpandSweep(const RunConfig& base);

struct SweepRow {
  std::string label;
  std::string scheme;
  uint64_t seed = 0;
  std::filesystem::path directory;
  std::vector<RoundMetrics> history;
};

// Runs every member (up to sweep.parallel at a time), each in its own run
// directory, then writes <scheme>.csv per scheme and summary.csv into
// <out_root>/sweep_<timestamp>_<config digest>/.
std::vector<SweepRow> CmdSweep(const RunConfig& base,
                               const std::filesystem::path& out_root);

}  // namespace dpfl

#endif  // DPFL_HARNESS_H_
