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

// dpfl_sim: plan, run, sweep and verify federated DP experiments.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dpfl/config.h"
#include "dpfl/format.h"
#include "dpfl/harness.h"
#include "dpfl/verify.h"

namespace {

struct Flags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out;
  std::string scheme;
  std::string suite = "all";
};

dpfl::RunConfig LoadConfig(const Flags& flags) {
  dpfl::RunConfig config = flags.config_path.empty()
                               ? dpfl::RunConfig{}
                               : dpfl::ParseConfig(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (!flags.scheme.empty()) config.scheme = flags.scheme;
  if (!flags.out.empty()) config.output_dir = flags.out;
  config.Validate();
  return config;
}

int Plan(const Flags& flags) {
  const dpfl::RunConfig config = LoadConfig(flags);
  const dpfl::PlanArtifacts plan = dpfl::CmdPlan(config, config.output_dir);
  std::cout << "schedule " << dpfl::ScheduleDigest(plan.schedule) << " -> "
            << config.output_dir << "/schedule.csv\n";
  for (const auto& a : plan.adherence.clients) {
    if (a.violated) {
      std::cout << "client " << a.client_id << " exceeds its budget by "
                << dpfl::FormatDouble(-a.slack) << '\n';
    }
  }
  std::cout << (plan.adherence.ok ? "budget adherence: ok\n"
                                  : "budget adherence: VIOLATED\n");
  return plan.adherence.ok ? 0 : 1;
}

int Run(const Flags& flags) {
  const dpfl::RunConfig config = LoadConfig(flags);
  const dpfl::RunArtifacts run = dpfl::CmdRun(config, config.output_dir);
  const auto& history = run.result.train.history;
  if (!history.empty()) {
    std::cout << "final test_acc " << dpfl::FormatDouble(history.back().test_acc)
              << " test_loss " << dpfl::FormatDouble(history.back().test_loss)
              << '\n';
  }
  std::cout << "run directory " << run.directory.string() << '\n';
  return run.result.adherence.ok ? 0 : 1;
}

int Sweep(const Flags& flags) {
  const dpfl::RunConfig config = LoadConfig(flags);
  const auto rows = dpfl::CmdSweep(config, config.output_dir);
  for (const auto& row : rows) {
    const double acc = row.history.empty() ? 0.0 : row.history.back().test_acc;
    std::cout << row.label << " test_acc " << dpfl::FormatDouble(acc) << '\n';
  }
  return 0;
}

int Verify(const Flags& flags) {
  const auto checks =
      dpfl::RunVerifySuite(flags.suite, flags.seed.value_or(0));
  dpfl::WriteCheckJsonLines(std::cout, checks);
  return dpfl::AllPassed(checks) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning simulator with time-adaptive privacy"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "JSON config file")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "master seed (overrides config)");
    sub->add_option("--out", flags.out, "output directory (overrides config)");
    sub->add_option("--scheme", flags.scheme,
                    "fedavg | dp_fedavg | idp_fedavg | adaptive_clip | "
                    "time_adaptive (overrides config)");
  };
  CLI::App* plan = app.add_subcommand("plan", "write the schedule without training");
  CLI::App* run = app.add_subcommand("run", "schedule and train one configuration");
  CLI::App* sweep = app.add_subcommand("sweep", "run every member of the config's sweep");
  CLI::App* verify = app.add_subcommand("verify", "run the self-check suites");
  for (CLI::App* sub : {plan, run, sweep}) add_common(sub);
  verify->add_option("--suite", flags.suite,
                     "accounting | scheduler | permutation | noise | lattice | "
                     "gradients | bias | all");
  verify->add_option("--seed", flags.seed, "seed for randomized checks");

  CLI11_PARSE(app, argc, argv);
  try {
    if (plan->parsed()) return Plan(flags);
    if (run->parsed()) return Run(flags);
    if (sweep->parsed()) return Sweep(flags);
    if (verify->parsed()) return Verify(flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
