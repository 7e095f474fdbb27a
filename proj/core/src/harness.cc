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

#include "dpfl/harness.h"

#include <chrono>
#include <ctime>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <sstream>

#include "dpfl/errors.h"
#include "dpfl/format.h"

namespace dpfl {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot write '" + path.string() + "'");
  return out;
}

json MetricsJson(const std::vector<RoundMetrics>& history) {
  json rows = json::array();
  for (const RoundMetrics& m : history) {
    rows.push_back({{"round", m.round},
                    {"test_acc", m.test_acc},
                    {"test_loss", m.test_loss},
                    {"n_sampled", m.n_sampled},
                    {"mean_update_norm", m.mean_update_norm},
                    {"frac_clipped", m.frac_clipped},
                    {"skipped", m.skipped},
                    {"learning_rate", m.learning_rate}});
  }
  return rows;
}

json PrivacyReportJson(const AdherenceReport& report,
                       const std::vector<int>& membership) {
  json rows = json::array();
  for (const ClientAdherence& a : report.clients) {
    json row = {{"client", a.client_id},
                {"spent_rdp", a.spent_rdp},
                {"spent_dp", a.spent_dp},
                {"budget_dp", a.budget_dp},
                {"slack", a.slack},
                {"violated", a.violated}};
    if (static_cast<size_t>(a.client_id) < membership.size()) {
      row["group"] = membership[a.client_id];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string Timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return out.str();
}

// <root>/<stem>, or <root>/<stem>-2, -3 ... if taken.
fs::path FreshDirectory(const fs::path& root, const std::string& stem) {
  fs::create_directories(root);
  fs::path dir = root / stem;
  for (int i = 2; !fs::create_directory(dir); ++i) {
    dir = root / (stem + "-" + std::to_string(i));
  }
  return dir;
}

std::string JoinNumbers(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += FormatDouble(v[i]);
  }
  return s;
}

std::string JoinNumbers(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace

std::string ConfigDigest(const RunConfig& config) {
  json doc = ConfigToJson(config);
  doc.erase("output_dir");
  return HexDigest(Fnv1a64(doc.dump()));
}

std::string ScheduleDigest(const Schedule& schedule) {
  std::ostringstream dump;
  WriteScheduleCsv(dump, schedule);
  return HexDigest(Fnv1a64(dump.str()));
}

PlanArtifacts PlanRun(const RunConfig& config) {
  const SchemeConfig scheme = ToSchemeConfig(config);
  PlanArtifacts plan;
  PermutationAssignment permutation;
  plan.schedule = PlanScheme(scheme, &permutation);
  if (scheme.kind == SchemeKind::kTimeAdaptive && config.permute_rates) {
    plan.permutation = permutation;
  }
  plan.adherence = VerifyBudgetAdherence(plan.schedule, config.privacy.delta);
  return plan;
}

PlanArtifacts CmdPlan(const RunConfig& config, const fs::path& out_dir) {
  PlanArtifacts plan = PlanRun(config);
  fs::create_directories(out_dir);
  {
    auto out = OpenOut(out_dir / "schedule.csv");
    WriteScheduleCsv(out, plan.schedule);
  }
  {
    auto out = OpenOut(out_dir / "spend_curve.csv");
    WriteSpendCurveCsv(out, plan.schedule, config.privacy.delta);
  }
  {
    auto out = OpenOut(out_dir / "adherence.csv");
    WriteAdherenceCsv(out, plan.adherence);
  }
  return plan;
}

RunArtifacts ExecuteRun(const RunConfig& config) {
  config.Validate();
  const FederatedDataset data = BuildDataset(config);
  const auto model = MakeModel(ToModelShape(config, data));
  const SchemeConfig scheme = ToSchemeConfig(config);

  RunArtifacts run;
  run.result = RunScheme(scheme, *model, data);
  const SchemeResult& r = run.result;

  json& m = run.manifest;
  m["artifact_version"] = kArtifactVersion;
  m["config"] = ConfigToJson(config);
  m["config_digest"] = ConfigDigest(config);
  m["schedule_digest"] = ScheduleDigest(r.schedule);
  m["group_membership"] = GroupMembership(config);
  m["dataset"] = {{"source_size", data.source_size},
                  {"test_size", data.test.size()},
                  {"feature_dim", data.test.feature_dim},
                  {"parameter_count", model->parameter_count()}};
  m["metrics"] = MetricsJson(r.train.history);
  m["privacy_report"] = PrivacyReportJson(r.adherence, GroupMembership(config));
  m["privacy_ok"] = r.adherence.ok;
  m["non_private"] = r.adherence.non_private;
  std::ostringstream model_bytes;
  WriteCheckpoint(model_bytes, r.train.final_model);
  m["model_digest"] = HexDigest(Fnv1a64(model_bytes.str()));
  if (r.permutation) m["rate_of_client"] = r.permutation->rate_of_client;
  if (!r.clip_history.empty()) m["clip_history"] = r.clip_history;
  return run;
}

RunArtifacts CmdRun(const RunConfig& config, const fs::path& out_root) {
  const auto start = std::chrono::steady_clock::now();
  RunArtifacts run = ExecuteRun(config);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  run.manifest["wall_clock_seconds"] = seconds;

  run.directory =
      FreshDirectory(out_root, Timestamp() + "_" + ConfigDigest(config));
  {
    auto out = OpenOut(run.directory / "manifest.json");
    out << run.manifest.dump(2) << '\n';
  }
  {
    auto out = OpenOut(run.directory / "metrics.csv");
    WriteMetricsCsv(out, run.result.train.history);
  }
  {
    auto out = OpenOut(run.directory / "schedule.csv");
    WriteScheduleCsv(out, run.result.schedule);
  }
  SaveCheckpoint((run.directory / "model.bin").string(),
                 run.result.train.final_model);
  return run;
}

std::vector<SweepMember> ExpandSweep(const RunConfig& base) {
  const SweepConfig& s = base.sweep;
  const std::vector<std::string> schemes =
      s.schemes.empty() ? std::vector<std::string>{base.scheme} : s.schemes;
  const std::vector<uint64_t> seeds =
      s.seeds.empty() ? std::vector<uint64_t>{base.seed} : s.seeds;
  const auto budgets = s.group_budgets.empty()
                           ? std::vector<std::vector<double>>{base.group_budgets}
                           : s.group_budgets;
  const auto rates =
      s.group_saving_rates.empty()
          ? std::vector<std::vector<double>>{base.group_saving_rates}
          : s.group_saving_rates;
  const auto transitions =
      s.group_transition_rounds.empty()
          ? std::vector<std::vector<int>>{base.group_transition_rounds}
          : s.group_transition_rounds;

  std::vector<SweepMember> members;
  for (const auto& scheme : schemes) {
    for (size_t b = 0; b < budgets.size(); ++b) {
      for (size_t q = 0; q < rates.size(); ++q) {
        for (size_t tn = 0; tn < transitions.size(); ++tn) {
          for (uint64_t seed : seeds) {
            SweepMember member;
            member.config = base;
            member.config.sweep = SweepConfig{};
            member.config.scheme = scheme;
            member.config.seed = seed;
            member.config.group_budgets = budgets[b];
            member.config.group_saving_rates = rates[q];
            member.config.group_transition_rounds = transitions[tn];
            member.config.Validate();
            member.label = scheme + "/budgets=" + std::to_string(b) +
                           "/rates=" + std::to_string(q) + "/transitions=" +
                           std::to_string(tn) + "/seed=" + std::to_string(seed);
            members.push_back(std::move(member));
          }
        }
      }
    }
  }
  return members;
}

std::vector<SweepRow> CmdSweep(const RunConfig& base, const fs::path& out_root) {
  const std::vector<SweepMember> members = ExpandSweep(base);
  const fs::path sweep_dir =
      FreshDirectory(out_root, "sweep_" + Timestamp() + "_" + ConfigDigest(base));
  const fs::path runs_dir = sweep_dir / "runs";

  std::vector<SweepRow> rows(members.size());
  auto run_member = [&](size_t i) {
    const RunArtifacts run = CmdRun(members[i].config, runs_dir);
    SweepRow row;
    row.label = members[i].label;
    row.scheme = members[i].config.scheme;
    row.seed = members[i].config.seed;
    row.directory = run.directory;
    row.history = run.result.train.history;
    return row;
  };
  const size_t parallel = static_cast<size_t>(std::max(1, base.sweep.parallel));
  for (size_t begin = 0; begin < members.size(); begin += parallel) {
    const size_t end = std::min(members.size(), begin + parallel);
    std::vector<std::future<SweepRow>> jobs;
    for (size_t i = begin; i < end; ++i) {
      jobs.push_back(std::async(std::launch::async, run_member, i));
    }
    for (size_t i = begin; i < end; ++i) rows[i] = jobs[i - begin].get();
  }

  std::map<std::string, std::ofstream> per_scheme;
  auto summary = OpenOut(sweep_dir / "summary.csv");
  summary << "label,scheme,seed,budgets,saving_rates,transition_rounds,"
             "final_test_acc,final_test_loss,run_dir\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& row = rows[i];
    const RunConfig& c = members[i].config;
    auto it = per_scheme.find(row.scheme);
    if (it == per_scheme.end()) {
      it = per_scheme.emplace(row.scheme, OpenOut(sweep_dir / (row.scheme + ".csv")))
               .first;
      it->second << "label,seed,round,test_acc,test_loss,n_sampled,"
                    "mean_update_norm,frac_clipped\n";
    }
    for (const RoundMetrics& m : row.history) {
      it->second << row.label << ',' << row.seed << ',' << m.round << ','
                 << FormatDouble(m.test_acc) << ','
                 << FormatDouble(m.test_loss) << ',' << m.n_sampled << ','
                 << FormatDouble(m.mean_update_norm) << ','
                 << FormatDouble(m.frac_clipped) << '\n';
    }
    const RoundMetrics last =
        row.history.empty() ? RoundMetrics{} : row.history.back();
    summary << row.label << ',' << row.scheme << ',' << row.seed << ','
            << JoinNumbers(c.group_budgets) << ','
            << JoinNumbers(c.group_saving_rates) << ','
            << JoinNumbers(c.group_transition_rounds) << ','
            << FormatDouble(last.test_acc) << ','
            << FormatDouble(last.test_loss) << ','
            << row.directory.filename().string() << '\n';
  }
  return rows;
}

}  // namespace dpfl
