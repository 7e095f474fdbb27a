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

#include "dpfl/config.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "dpfl/errors.h"
#include "dpfl/format.h"

namespace dpfl {
namespace {

using nlohmann::json;

// Reads known keys from one JSON object and rejects everything else.
class StrictObject {
 public:
  StrictObject(const json& object, std::string path)
      : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) {
      throw InvalidInputError(Name("") + ": expected a JSON object");
    }
  }

  template <typename T>
  void Read(const std::string& key, T& out) {
    known_.insert(key);
    const auto it = object_.find(key);
    if (it == object_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw InvalidInputError(Name(key) + ": " + e.what());
    }
  }

  // Runs `fn` on a nested object if present.
  template <typename Fn>
  void Nested(const std::string& key, Fn&& fn) {
    known_.insert(key);
    const auto it = object_.find(key);
    if (it == object_.end()) return;
    StrictObject child(*it, Name(key));
    fn(child);
    child.Finish();
  }

  void Finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (known_.count(key) == 0) {
        throw InvalidInputError("unknown config key '" + Name(key) + "'");
      }
    }
  }

 private:
  std::string Name(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  const json& object_;
  std::string path_;
  std::set<std::string> known_;
};

void Require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw InvalidInputError(field + ": " + what);
}

template <typename T>
std::vector<T> Expand(const std::vector<T>& per_group,
                      const std::vector<int>& membership) {
  std::vector<T> out;
  out.reserve(membership.size());
  for (int g : membership) out.push_back(per_group[g]);
  return out;
}

}  // namespace

void RunConfig::Validate() const {
  ParseSchemeKind(scheme);
  try {
    privacy.Validate();
  } catch (const InvalidInputError& e) {
    throw InvalidInputError(std::string(e.what()));
  }
  const size_t groups = group_fractions.size();
  Require(groups > 0, "groups.fractions", "at least one group required");
  Require(group_budgets.size() == groups, "groups.budgets",
          "one entry per group required");
  Require(group_saving_rates.size() == groups, "groups.saving_rates",
          "one entry per group required");
  Require(group_transition_rounds.size() == groups, "groups.transition_rounds",
          "one entry per group required");
  const double fraction_sum =
      std::accumulate(group_fractions.begin(), group_fractions.end(), 0.0);
  Require(std::abs(fraction_sum - 1.0) <= 1e-9, "groups.fractions",
          "must sum to 1 (got " + FormatDouble(fraction_sum) + ")");
  for (size_t g = 0; g < groups; ++g) {
    const std::string idx = "[" + std::to_string(g) + "]";
    Require(group_fractions[g] >= 0.0, "groups.fractions" + idx,
            "must be non-negative");
    Require(group_budgets[g] > 0.0, "groups.budgets" + idx, "must be positive");
    if (group_saving_rates[g] > privacy.spend_rate) {
      throw InvalidSavingRateError(
          "groups.saving_rates" + idx + ": saving rate " +
          FormatDouble(group_saving_rates[g]) + " exceeds q = " +
          FormatDouble(privacy.spend_rate));
    }
    Require(group_saving_rates[g] > 0.0, "groups.saving_rates" + idx,
            "must be positive");
    Require(group_transition_rounds[g] >= 1 &&
                group_transition_rounds[g] <= privacy.rounds,
            "groups.transition_rounds" + idx, "must lie in [1, rounds]");
  }
  ParseModelKind(model);
  Require(hidden > 0, "model.hidden", "must be positive");
  Require(local_epochs >= 1, "local_epochs", "must be at least 1");
  Require(batch_size >= 1, "batch_size", "must be at least 1");
  Require(learning_rate >= 0.0, "learning_rate", "must be non-negative");
  Require(lr_schedule == "constant" || lr_schedule == "cosine", "lr_schedule",
          "must be 'constant' or 'cosine'");
  Require(rho > 1.0, "sampling.rho", "must be > 1");
  Require(adaptive.target_quantile > 0.0 && adaptive.target_quantile < 1.0,
          "adaptive.target_quantile", "must lie in (0, 1)");
  Require(adaptive.clip_lr > 0.0, "adaptive.clip_lr", "must be positive");
  Require(adaptive.quantile_noise_std > 0.0, "adaptive.quantile_noise_std",
          "must be positive");
  Require(threads >= 1, "threads", "must be at least 1");

  Require(dataset.source == "synthetic" || dataset.source == "csv",
          "dataset.source", "must be 'synthetic' or 'csv'");
  Require(dataset.partition == "iid" || dataset.partition == "dirichlet",
          "dataset.partition", "must be 'iid' or 'dirichlet'");
  Require(dataset.beta > 0.0, "dataset.beta", "must be positive");
  Require(dataset.test_fraction >= 0.0 && dataset.test_fraction < 1.0,
          "dataset.test_fraction", "must lie in [0, 1)");
  Require(dataset.missing == "drop" || dataset.missing == "impute",
          "dataset.missing", "must be 'drop' or 'impute'");
  if (dataset.source == "synthetic") {
    Require(dataset.dimension > 0, "dataset.dimension", "must be positive");
    Require(dataset.classes >= 2, "dataset.classes", "must be at least 2");
    Require(dataset.separation >= 0.0, "dataset.separation",
            "must be non-negative");
    Require(dataset.samples_per_client > 0, "dataset.samples_per_client",
            "must be positive");
  } else {
    Require(!dataset.path.empty(), "dataset.path", "required for csv source");
    Require(!dataset.label_column.empty(), "dataset.label_column",
            "required for csv source");
  }
  for (const auto& s : sweep.schemes) ParseSchemeKind(s);
  Require(sweep.parallel >= 1, "sweep.parallel", "must be at least 1");
}

RunConfig ParseConfigJson(const json& doc) {
  RunConfig c;
  StrictObject root(doc, "");
  root.Read("scheme", c.scheme);
  root.Read("alpha", c.privacy.alpha);
  root.Read("delta", c.privacy.delta);
  root.Read("clip", c.privacy.clip_mean);
  root.Read("q", c.privacy.spend_rate);
  root.Read("rounds", c.privacy.rounds);
  root.Read("clients", c.privacy.client_count);
  root.Nested("groups", [&](StrictObject& g) {
    g.Read("budgets", c.group_budgets);
    g.Read("fractions", c.group_fractions);
    g.Read("saving_rates", c.group_saving_rates);
    g.Read("transition_rounds", c.group_transition_rounds);
  });
  root.Nested("model", [&](StrictObject& m) {
    m.Read("kind", c.model);
    m.Read("hidden", c.hidden);
  });
  root.Nested("dataset", [&](StrictObject& d) {
    DatasetConfig& ds = c.dataset;
    d.Read("source", ds.source);
    d.Read("dimension", ds.dimension);
    d.Read("classes", ds.classes);
    d.Read("separation", ds.separation);
    d.Read("noise", ds.noise);
    d.Read("samples_per_client", ds.samples_per_client);
    d.Read("path", ds.path);
    d.Read("label_column", ds.label_column);
    d.Read("categorical_columns", ds.categorical_columns);
    d.Read("ignored_columns", ds.ignored_columns);
    d.Read("missing", ds.missing);
    d.Read("test_fraction", ds.test_fraction);
    d.Read("partition", ds.partition);
    d.Read("beta", ds.beta);
  });
  root.Read("local_epochs", c.local_epochs);
  root.Read("batch_size", c.batch_size);
  root.Read("learning_rate", c.learning_rate);
  root.Read("lr_schedule", c.lr_schedule);
  root.Nested("sampling", [&](StrictObject& s) {
    s.Read("permute_rates", c.permute_rates);
    s.Read("repermute_each_round", c.repermute_each_round);
    s.Read("rho", c.rho);
  });
  root.Nested("adaptive", [&](StrictObject& a) {
    a.Read("target_quantile", c.adaptive.target_quantile);
    a.Read("clip_lr", c.adaptive.clip_lr);
    a.Read("quantile_noise_std", c.adaptive.quantile_noise_std);
    a.Read("server_lr", c.adaptive.server_lr);
    a.Read("server_momentum", c.adaptive.server_momentum);
  });
  root.Read("seed", c.seed);
  root.Read("output_dir", c.output_dir);
  root.Read("threads", c.threads);
  root.Nested("sweep", [&](StrictObject& s) {
    s.Read("schemes", c.sweep.schemes);
    s.Read("seeds", c.sweep.seeds);
    s.Read("budgets", c.sweep.group_budgets);
    s.Read("saving_rates", c.sweep.group_saving_rates);
    s.Read("transition_rounds", c.sweep.group_transition_rounds);
    s.Read("parallel", c.sweep.parallel);
  });
  root.Finish();
  c.Validate();
  return c;
}

RunConfig ParseConfigText(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInputError(std::string("config is not valid JSON: ") +
                            e.what());
  }
  return ParseConfigJson(doc);
}

RunConfig ParseConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  RunConfig config = ParseConfigText(buffer.str());
  std::filesystem::path data = config.dataset.path;
  if (!data.empty() && data.is_relative()) {
    config.dataset.path =
        (std::filesystem::path(path).parent_path() / data).lexically_normal();
  }
  return config;
}

json ConfigToJson(const RunConfig& c) {
  json doc;
  doc["scheme"] = c.scheme;
  doc["alpha"] = c.privacy.alpha;
  doc["delta"] = c.privacy.delta;
  doc["clip"] = c.privacy.clip_mean;
  doc["q"] = c.privacy.spend_rate;
  doc["rounds"] = c.privacy.rounds;
  doc["clients"] = c.privacy.client_count;
  doc["groups"] = {{"budgets", c.group_budgets},
                   {"fractions", c.group_fractions},
                   {"saving_rates", c.group_saving_rates},
                   {"transition_rounds", c.group_transition_rounds}};
  doc["model"] = {{"kind", c.model}, {"hidden", c.hidden}};
  const DatasetConfig& d = c.dataset;
  doc["dataset"] = {{"source", d.source},
                    {"dimension", d.dimension},
                    {"classes", d.classes},
                    {"separation", d.separation},
                    {"noise", d.noise},
                    {"samples_per_client", d.samples_per_client},
                    {"path", d.path},
                    {"label_column", d.label_column},
                    {"categorical_columns", d.categorical_columns},
                    {"ignored_columns", d.ignored_columns},
                    {"missing", d.missing},
                    {"test_fraction", d.test_fraction},
                    {"partition", d.partition},
                    {"beta", d.beta}};
  doc["local_epochs"] = c.local_epochs;
  doc["batch_size"] = c.batch_size;
  doc["learning_rate"] = c.learning_rate;
  doc["lr_schedule"] = c.lr_schedule;
  doc["sampling"] = {{"permute_rates", c.permute_rates},
                     {"repermute_each_round", c.repermute_each_round},
                     {"rho", c.rho}};
  doc["adaptive"] = {{"target_quantile", c.adaptive.target_quantile},
                     {"clip_lr", c.adaptive.clip_lr},
                     {"quantile_noise_std", c.adaptive.quantile_noise_std},
                     {"server_lr", c.adaptive.server_lr},
                     {"server_momentum", c.adaptive.server_momentum}};
  doc["seed"] = c.seed;
  doc["output_dir"] = c.output_dir;
  doc["threads"] = c.threads;
  doc["sweep"] = {{"schemes", c.sweep.schemes},
                  {"seeds", c.sweep.seeds},
                  {"budgets", c.sweep.group_budgets},
                  {"saving_rates", c.sweep.group_saving_rates},
                  {"transition_rounds", c.sweep.group_transition_rounds},
                  {"parallel", c.sweep.parallel}};
  return doc;
}

std::vector<int> GroupMembership(const RunConfig& config) {
  return AssignGroups(config.privacy.client_count, config.group_fractions,
                      config.seed);
}

SchemeConfig ToSchemeConfig(const RunConfig& config) {
  const std::vector<int> membership = GroupMembership(config);
  SchemeConfig s;
  s.kind = ParseSchemeKind(config.scheme);
  s.spec = config.privacy;
  s.budgets = Expand(config.group_budgets, membership);
  s.saving_rates = Expand(config.group_saving_rates, membership);
  s.transition_rounds = Expand(config.group_transition_rounds, membership);
  s.time_adaptive.permute_rates = config.permute_rates;
  s.time_adaptive.repermute_each_round = config.repermute_each_round;
  s.time_adaptive.rho = config.rho;
  s.adaptive = config.adaptive;
  s.adaptive.clip = config.privacy.clip_mean;
  s.engine.local.epochs = config.local_epochs;
  s.engine.local.batch_size = config.batch_size;
  s.engine.local.learning_rate = config.learning_rate;
  s.engine.lr_schedule = config.lr_schedule == "cosine" ? LrSchedule::kCosine
                                                        : LrSchedule::kConstant;
  s.engine.threads = config.threads;
  s.seed = config.seed;
  return s;
}

FederatedDataset BuildDataset(const RunConfig& config) {
  const DatasetConfig& d = config.dataset;
  PartitionDescriptor partition;
  partition.kind = d.partition == "iid" ? PartitionKind::kIid
                                        : PartitionKind::kDirichlet;
  partition.beta = d.beta;
  const auto clients = static_cast<size_t>(config.privacy.client_count);
  if (d.source == "synthetic") {
    SyntheticTaskSpec spec;
    spec.dimension = d.dimension;
    spec.classes = d.classes;
    spec.separation = d.separation;
    spec.noise = d.noise;
    spec.samples_per_client = d.samples_per_client;
    spec.clients = clients;
    spec.seed = config.seed;
    spec.test_fraction = d.test_fraction;
    return MakeSynthetic(spec, partition);
  }
  CsvSchema schema;
  schema.label_column = d.label_column;
  schema.categorical_columns = d.categorical_columns;
  schema.ignored_columns = d.ignored_columns;
  schema.missing =
      d.missing == "impute" ? MissingPolicy::kImputeMean : MissingPolicy::kDrop;
  schema.standardize = false;
  const CsvData csv = LoadCsv(d.path, schema);
  return Federate(csv.data, clients, partition, d.test_fraction, config.seed,
                  /*standardize=*/true);
}

ModelShape ToModelShape(const RunConfig& config, const FederatedDataset& data) {
  ModelShape shape;
  shape.kind = ParseModelKind(config.model);
  shape.hidden = config.hidden;
  shape.input_dim = data.test.feature_dim;
  size_t classes = std::max<size_t>(2, data.test.ClassCount());
  for (const Dataset& shard : data.shards) {
    classes = std::max(classes, shard.ClassCount());
  }
  shape.classes = classes;
  return shape;
}

}  // namespace dpfl
