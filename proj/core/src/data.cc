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

#include "dpfl/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "dpfl/errors.h"
#include "dpfl/rng.h"

namespace dpfl {
namespace {

std::vector<std::vector<size_t>> SplitEvenly(std::vector<size_t> rows,
                                             size_t clients) {
  std::vector<std::vector<size_t>> shards(clients);
  const size_t base = rows.size() / clients;
  const size_t extra = rows.size() % clients;
  size_t next = 0;
  for (size_t c = 0; c < clients; ++c) {
    const size_t take = base + (c < extra ? 1 : 0);
    shards[c].assign(rows.begin() + next, rows.begin() + next + take);
    next += take;
  }
  return shards;
}

FederatedDataset Assemble(const Dataset& data,
                          std::vector<std::vector<size_t>> shard_rows,
                          const PartitionDescriptor& partition) {
  FederatedDataset out;
  out.partition = partition;
  out.source_size = data.size();
  out.test.feature_dim = data.feature_dim;
  for (auto& rows : shard_rows) {
    std::sort(rows.begin(), rows.end());
    out.shards.push_back(data.Subset(rows));
  }
  out.shard_rows = std::move(shard_rows);
  return out;
}

void CheckClientCount(const Dataset& data, size_t clients) {
  if (data.empty()) throw InvalidInputError("cannot partition empty data");
  if (clients < 1) throw InvalidInputError("need at least one client");
  if (clients > data.size()) {
    throw InvalidInputError("more clients (" + std::to_string(clients) +
                            ") than samples (" + std::to_string(data.size()) +
                            ")");
  }
}

bool IsMissing(const std::string& field) {
  return field.empty() || field == "?" || field == "NA" || field == "nan";
}

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> SplitCsvLine(const std::string& line, size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(Trim(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  if (quoted) {
    throw InvalidInputError("line " + std::to_string(line_no) +
                            ": unterminated quote");
  }
  fields.push_back(Trim(field));
  return fields;
}

bool ParseNumber(const std::string& text, double& value) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

}  // namespace

void Dataset::Append(std::span<const double> x, double y) {
  if (x.size() != feature_dim) {
    throw InvalidInputError("row has " + std::to_string(x.size()) +
                            " features, expected " +
                            std::to_string(feature_dim));
  }
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(y);
}

Dataset Dataset::Subset(std::span<const size_t> rows) const {
  Dataset out;
  out.feature_dim = feature_dim;
  out.features.reserve(rows.size() * feature_dim);
  out.labels.reserve(rows.size());
  for (size_t r : rows) out.Append(row(r), labels[r]);
  return out;
}

size_t Dataset::ClassCount() const {
  double top = -1.0;
  for (double y : labels) top = std::max(top, y);
  return static_cast<size_t>(top) + 1;
}

FederatedDataset PartitionIid(const Dataset& data, size_t clients,
                              uint64_t seed) {
  CheckClientCount(data, clients);
  std::vector<size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  Rng rng = RngStreams(seed).Stream(RngStreams::Purpose::kPartition);
  rng.Shuffle(rows);
  return Assemble(data, SplitEvenly(std::move(rows), clients),
                  PartitionDescriptor{PartitionKind::kIid, 0.0});
}

FederatedDataset PartitionDirichlet(const Dataset& data, size_t clients,
                                    double beta, uint64_t seed) {
  CheckClientCount(data, clients);
  if (!(beta > 0.0)) throw DomainError("Dirichlet beta must be positive");

  std::map<double, std::vector<size_t>> by_class;
  for (size_t r = 0; r < data.size(); ++r) {
    by_class[data.labels[r]].push_back(r);
  }
  Rng rng = RngStreams(seed).Stream(RngStreams::Purpose::kPartition);
  std::vector<std::vector<size_t>> shards(clients);
  std::vector<double> log_weights(clients);
  for (auto& [label, rows] : by_class) {
    rng.Shuffle(rows);
    for (double& w : log_weights) w = rng.LogGamma(beta);
    // Normalize in log space; tiny shapes underflow otherwise.
    const double peak = *std::max_element(log_weights.begin(), log_weights.end());
    std::vector<double> weights(clients);
    double total = 0.0;
    for (size_t c = 0; c < clients; ++c) {
      weights[c] = std::exp(log_weights[c] - peak);
      total += weights[c];
    }
    double cumulative = 0.0;
    size_t begin = 0;
    for (size_t c = 0; c < clients; ++c) {
      cumulative += weights[c] / total;
      const size_t end =
          c + 1 == clients
              ? rows.size()
              : std::min(rows.size(), static_cast<size_t>(std::floor(
                                          cumulative * rows.size())));
      for (size_t k = begin; k < std::max(begin, end); ++k) {
        shards[c].push_back(rows[k]);
      }
      begin = std::max(begin, end);
    }
  }

  // Repair: move one sample at a time from the largest shard.
  for (size_t c = 0; c < clients; ++c) {
    if (!shards[c].empty()) continue;
    auto largest = std::max_element(
        shards.begin(), shards.end(),
        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    shards[c].push_back(largest->back());
    largest->pop_back();
  }
  return Assemble(data, std::move(shards),
                  PartitionDescriptor{PartitionKind::kDirichlet, beta});
}

FederatedDataset Federate(const Dataset& source, size_t clients,
                          const PartitionDescriptor& partition,
                          double test_fraction, uint64_t seed,
                          bool standardize) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw InvalidInputError("test_fraction must lie in [0, 1)");
  }
  std::vector<size_t> rows(source.size());
  std::iota(rows.begin(), rows.end(), 0);
  Rng rng = RngStreams(seed).Stream(RngStreams::Purpose::kPartition, 1);
  rng.Shuffle(rows);
  const auto test_count =
      static_cast<size_t>(std::llround(test_fraction * source.size()));
  std::vector<size_t> test_rows(rows.begin(), rows.begin() + test_count);
  std::vector<size_t> train_rows(rows.begin() + test_count, rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  std::sort(train_rows.begin(), train_rows.end());

  const Dataset train = source.Subset(train_rows);
  FederatedDataset out =
      partition.kind == PartitionKind::kIid
          ? PartitionIid(train, clients, seed)
          : PartitionDirichlet(train, clients, partition.beta, seed);
  for (auto& shard : out.shard_rows) {
    for (size_t& r : shard) r = train_rows[r];
  }
  out.test = source.Subset(test_rows);
  out.test_rows = std::move(test_rows);
  out.source_size = source.size();

  if (standardize) {
    const Standardization s = FitStandardization(train);
    for (Dataset& shard : out.shards) ApplyStandardization(s, shard);
    ApplyStandardization(s, out.test);
  }
  return out;
}

Dataset MakeSyntheticSource(const SyntheticTaskSpec& spec) {
  if (spec.dimension == 0) throw InvalidInputError("dimension must be > 0");
  if (spec.classes < 2) throw InvalidInputError("classes must be >= 2");
  if (spec.separation < 0.0 || spec.noise < 0.0) {
    throw InvalidInputError("separation and noise must be non-negative");
  }
  const RngStreams streams(spec.seed);
  Rng center_rng = streams.Stream(RngStreams::Purpose::kSynthetic, 0);
  std::vector<std::vector<double>> centers(spec.classes);
  for (auto& center : centers) {
    center.resize(spec.dimension);
    double norm = 0.0;
    for (double& v : center) {
      v = center_rng.Gaussian();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : center) v *= 0.5 * spec.separation / norm;
  }

  const size_t train = spec.samples_per_client * spec.clients;
  const auto total = static_cast<size_t>(
      std::ceil(train / (1.0 - spec.test_fraction) - 1e-9));
  Dataset data;
  data.feature_dim = spec.dimension;
  Rng sample_rng = streams.Stream(RngStreams::Purpose::kSynthetic, 1);
  std::vector<double> x(spec.dimension);
  for (size_t i = 0; i < total; ++i) {
    const size_t label = i % spec.classes;
    for (size_t j = 0; j < spec.dimension; ++j) {
      x[j] = centers[label][j] + spec.noise * sample_rng.Gaussian();
    }
    data.Append(x, static_cast<double>(label));
  }
  return data;
}

FederatedDataset MakeSynthetic(const SyntheticTaskSpec& spec,
                               const PartitionDescriptor& partition) {
  return Federate(MakeSyntheticSource(spec), spec.clients, partition,
                  spec.test_fraction, spec.seed);
}

Standardization FitStandardization(const Dataset& data) {
  const size_t d = data.feature_dim;
  Standardization s;
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 1.0);
  if (data.empty()) return s;
  const double n = static_cast<double>(data.size());
  for (size_t r = 0; r < data.size(); ++r) {
    const auto x = data.row(r);
    for (size_t j = 0; j < d; ++j) s.mean[j] += x[j];
  }
  for (double& m : s.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (size_t r = 0; r < data.size(); ++r) {
    const auto x = data.row(r);
    for (size_t j = 0; j < d; ++j) {
      const double diff = x[j] - s.mean[j];
      var[j] += diff * diff;
    }
  }
  for (size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / n);
    if (sd > 1e-12 * std::max(1.0, std::abs(s.mean[j]))) {
      s.stddev[j] = sd;
    } else {
      s.stddev[j] = 1.0;
      s.constant_columns.push_back(j);
    }
  }
  return s;
}

void ApplyStandardization(const Standardization& s, Dataset& data) {
  const size_t d = data.feature_dim;
  for (size_t r = 0; r < data.size(); ++r) {
    for (size_t j = 0; j < d; ++j) {
      double& v = data.features[r * d + j];
      v = (v - s.mean[j]) / s.stddev[j];
    }
  }
}

CsvData ParseCsv(const std::string& text, const CsvSchema& schema) {
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!Trim(line).empty()) {
      header = SplitCsvLine(line, line_no);
      break;
    }
  }
  if (header.empty()) throw InvalidInputError("CSV has no header row");

  const size_t columns = header.size();
  const std::set<std::string> categorical(schema.categorical_columns.begin(),
                                          schema.categorical_columns.end());
  const std::set<std::string> ignored(schema.ignored_columns.begin(),
                                      schema.ignored_columns.end());
  size_t label_col = columns;
  for (size_t c = 0; c < columns; ++c) {
    if (header[c] == schema.label_column) label_col = c;
  }
  if (label_col == columns) {
    throw InvalidInputError("label column '" + schema.label_column +
                            "' not in header");
  }
  for (const auto& name : schema.categorical_columns) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw InvalidInputError("categorical column '" + name +
                              "' not in header");
    }
  }

  // First pass: raw fields.
  std::vector<std::vector<std::string>> rows;
  std::vector<size_t> row_lines;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto fields = SplitCsvLine(line, line_no);
    if (fields.size() != columns) {
      throw InvalidInputError("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(columns) + " fields, found " +
                              std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
    row_lines.push_back(line_no);
  }

  CsvData out;
  std::vector<bool> keep(rows.size(), true);
  if (schema.missing == MissingPolicy::kDrop) {
    for (size_t r = 0; r < rows.size(); ++r) {
      for (size_t c = 0; c < columns; ++c) {
        if (ignored.count(header[c]) == 0 && IsMissing(rows[r][c])) {
          keep[r] = false;
        }
      }
      if (!keep[r]) ++out.dropped_rows;
    }
  } else {
    for (size_t r = 0; r < rows.size(); ++r) {
      if (IsMissing(rows[r][label_col])) {
        keep[r] = false;
        ++out.dropped_rows;
      }
    }
  }

  // Column plans: numeric columns parse and impute the mean; categorical
  // columns collect their sorted level set and impute the mode.
  struct ColumnPlan {
    bool categorical = false;
    std::vector<std::string> levels;
    double fill = 0.0;
    std::string fill_level;
  };
  std::vector<ColumnPlan> plans(columns);
  bool label_categorical = categorical.count(header[label_col]) > 0;
  if (!label_categorical) {
    double v;
    for (size_t r = 0; r < rows.size(); ++r) {
      if (keep[r] && !ParseNumber(rows[r][label_col], v)) {
        label_categorical = true;
        break;
      }
    }
  }
  for (size_t c = 0; c < columns; ++c) {
    if (ignored.count(header[c])) continue;
    ColumnPlan& plan = plans[c];
    plan.categorical =
        c == label_col ? label_categorical : categorical.count(header[c]) > 0;
    if (plan.categorical) {
      std::map<std::string, size_t> counts;
      for (size_t r = 0; r < rows.size(); ++r) {
        if (keep[r] && !IsMissing(rows[r][c])) ++counts[rows[r][c]];
      }
      size_t best = 0;
      for (const auto& [level, count] : counts) {
        plan.levels.push_back(level);
        if (count > best) {
          best = count;
          plan.fill_level = level;
        }
      }
    } else {
      double sum = 0.0;
      size_t count = 0;
      for (size_t r = 0; r < rows.size(); ++r) {
        if (!keep[r] || IsMissing(rows[r][c])) continue;
        double v;
        if (!ParseNumber(rows[r][c], v)) {
          throw InvalidInputError("line " + std::to_string(row_lines[r]) +
                                  ": column '" + header[c] +
                                  "' is not numeric: '" + rows[r][c] + "'");
        }
        sum += v;
        ++count;
      }
      plan.fill = count > 0 ? sum / count : 0.0;
    }
  }

  for (size_t c = 0; c < columns; ++c) {
    if (c == label_col || ignored.count(header[c])) continue;
    if (plans[c].categorical) {
      for (const auto& level : plans[c].levels) {
        out.feature_names.push_back(header[c] + "=" + level);
      }
    } else {
      out.feature_names.push_back(header[c]);
    }
  }
  if (label_categorical) out.class_names = plans[label_col].levels;

  out.data.feature_dim = out.feature_names.size();
  std::vector<double> x;
  for (size_t r = 0; r < rows.size(); ++r) {
    if (!keep[r]) continue;
    x.clear();
    double label = 0.0;
    for (size_t c = 0; c < columns; ++c) {
      if (ignored.count(header[c])) continue;
      const ColumnPlan& plan = plans[c];
      const std::string& field = rows[r][c];
      if (plan.categorical) {
        const std::string& level = IsMissing(field) ? plan.fill_level : field;
        const auto it =
            std::lower_bound(plan.levels.begin(), plan.levels.end(), level);
        const auto index = static_cast<size_t>(it - plan.levels.begin());
        if (c == label_col) {
          label = static_cast<double>(index);
        } else {
          for (size_t k = 0; k < plan.levels.size(); ++k) {
            x.push_back(k == index ? 1.0 : 0.0);
          }
        }
      } else {
        double v = plan.fill;
        if (!IsMissing(field)) ParseNumber(field, v);
        if (c == label_col) {
          label = v;
        } else {
          x.push_back(v);
        }
      }
    }
    out.data.Append(x, label);
  }

  if (schema.standardize) {
    const Standardization s = FitStandardization(out.data);
    ApplyStandardization(s, out.data);
    out.constant_columns = s.constant_columns;
  }
  return out;
}

CsvData LoadCsv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open CSV file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseCsv(buffer.str(), schema);
}

}  // namespace dpfl
