// Copyright 2026 The agridp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "agridp/data.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "agridp/rng.h"

namespace agridp {

std::atomic<std::uint64_t> RawAccessAudit::reads_{0};
std::atomic<std::uint64_t> RawAccessAudit::violations_{0};
thread_local int RawAccessAudit::ban_depth_ = 0;

void RawAccessAudit::RecordRead() {
  reads_.fetch_add(1, std::memory_order_relaxed);
  if (ban_depth_ > 0) violations_.fetch_add(1, std::memory_order_relaxed);
}
std::uint64_t RawAccessAudit::reads() { return reads_.load(); }
std::uint64_t RawAccessAudit::violations() { return violations_.load(); }
bool RawAccessAudit::banned() { return ban_depth_ > 0; }

absl::StatusOr<FeatureSchema> FeatureSchema::Create(
    std::vector<std::string> feature_names,
    std::optional<std::string> label_name) {
  if (feature_names.empty()) {
    return absl::InvalidArgumentError("schema needs at least one feature");
  }
  std::set<std::string> seen;
  for (const auto& name : feature_names) {
    if (name.empty()) return absl::InvalidArgumentError("empty feature name");
    if (!seen.insert(name).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate feature name '", name, "'"));
    }
  }
  if (label_name.has_value() && seen.contains(*label_name)) {
    return absl::InvalidArgumentError(
        absl::StrCat("label '", *label_name, "' is also a feature"));
  }
  FeatureSchema schema;
  schema.feature_names_ = std::move(feature_names);
  schema.label_name_ = std::move(label_name);
  return schema;
}

absl::StatusOr<DataMatrix> DataMatrix::Create(
    FeatureSchema schema, Matrix values,
    std::optional<std::vector<std::string>> labels, DataOrigin origin) {
  if (values.rows() > 0 && values.cols() != schema.feature_count()) {
    return absl::InvalidArgumentError(
        absl::StrCat("matrix has ", values.cols(), " columns, schema has ",
                     schema.feature_count()));
  }
  if (!values.AllFinite()) {
    return absl::InvalidArgumentError("non-finite value in data matrix");
  }
  if (labels.has_value() && labels->size() != values.rows()) {
    return absl::InvalidArgumentError(
        absl::StrCat(labels->size(), " labels for ", values.rows(), " rows"));
  }
  if (values.rows() == 0) values = Matrix(0, schema.feature_count());
  DataMatrix out;
  out.schema_ = std::move(schema);
  out.values_ = std::move(values);
  out.labels_ = std::move(labels);
  out.origin_ = origin;
  return out;
}

DataMatrix DataMatrix::SelectRows(std::span<const std::size_t> indices) const {
  DataMatrix out;
  out.schema_ = schema_;
  out.values_ = values_.SelectRows(indices);
  out.origin_ = origin_;
  if (labels_.has_value()) {
    std::vector<std::string> picked;
    picked.reserve(indices.size());
    for (std::size_t i : indices) picked.push_back((*labels_)[i]);
    out.labels_ = std::move(picked);
  }
  return out;
}

std::string FormatDouble(double v) {
  std::array<char, 32> buf;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

namespace {

absl::StatusOr<std::vector<std::string>> ReadLines(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

absl::StatusOr<DataMatrix> ParseRows(const std::string& path,
                                     const std::vector<std::string>& lines,
                                     const std::vector<std::string>& header,
                                     const FeatureSchema& schema) {
  std::map<std::string, std::size_t> column_of;
  for (std::size_t c = 0; c < header.size(); ++c) column_of[header[c]] = c;
  std::vector<std::size_t> feature_cols;
  for (const auto& name : schema.feature_names()) {
    feature_cols.push_back(column_of.at(name));
  }
  std::optional<std::size_t> label_col;
  if (schema.label_name()) label_col = column_of.at(*schema.label_name());

  if (lines.size() < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("empty dataset: ", path, " has no data rows"));
  }
  Matrix values(lines.size() - 1, schema.feature_count());
  std::optional<std::vector<std::string>> labels;
  if (label_col) labels.emplace();
  for (std::size_t r = 1; r < lines.size(); ++r) {
    std::vector<std::string> cells = absl::StrSplit(lines[r], ',');
    if (cells.size() != header.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ": row ", r, " has ", cells.size(),
                       " cells, header has ", header.size()));
    }
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const std::string& cell = cells[feature_cols[j]];
      double v;
      if (!absl::SimpleAtod(absl::StripAsciiWhitespace(cell), &v) ||
          !std::isfinite(v)) {
        return absl::InvalidArgumentError(absl::StrCat(
            path, ": unparsable value '", cell, "' at row ", r, ", column '",
            schema.feature_names()[j], "'"));
      }
      values(r - 1, j) = v;
    }
    if (label_col) {
      labels->emplace_back(absl::StripAsciiWhitespace(cells[*label_col]));
    }
  }
  return DataMatrix::Create(schema, std::move(values), std::move(labels));
}

}  // namespace

absl::StatusOr<DataMatrix> LoadCsv(const std::string& path,
                                   const FeatureSchema& schema) {
  auto lines = ReadLines(path);
  if (!lines.ok()) return lines.status();
  if (lines->empty()) {
    return absl::InvalidArgumentError(absl::StrCat("empty file: ", path));
  }
  std::vector<std::string> header = absl::StrSplit(lines->front(), ',');
  for (auto& h : header) h = std::string(absl::StripAsciiWhitespace(h));

  std::set<std::string> expected(schema.feature_names().begin(),
                                 schema.feature_names().end());
  if (schema.label_name()) expected.insert(*schema.label_name());
  std::set<std::string> present(header.begin(), header.end());
  std::vector<std::string> missing, extra;
  for (const auto& e : expected) {
    if (!present.contains(e)) missing.push_back(e);
  }
  for (const auto& p : present) {
    if (!expected.contains(p)) extra.push_back(p);
  }
  if (!missing.empty() || !extra.empty() || present.size() != header.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        path, ": header mismatch; missing [", absl::StrJoin(missing, ","),
        "] extra [", absl::StrJoin(extra, ","), "]"));
  }
  return ParseRows(path, *lines, header, schema);
}

absl::StatusOr<DataMatrix> LoadCsvInferSchema(
    const std::string& path, std::optional<std::string> label_name) {
  auto lines = ReadLines(path);
  if (!lines.ok()) return lines.status();
  if (lines->empty()) {
    return absl::InvalidArgumentError(absl::StrCat("empty file: ", path));
  }
  std::vector<std::string> header = absl::StrSplit(lines->front(), ',');
  std::vector<std::string> features;
  bool label_found = false;
  for (auto& h : header) {
    h = std::string(absl::StripAsciiWhitespace(h));
    if (label_name && h == *label_name) {
      label_found = true;
    } else {
      features.push_back(h);
    }
  }
  if (label_name && !label_found) {
    return absl::InvalidArgumentError(absl::StrCat(
        path, ": header mismatch; missing [", *label_name, "] extra []"));
  }
  auto schema = FeatureSchema::Create(std::move(features),
                                      label_found ? label_name : std::nullopt);
  if (!schema.ok()) return schema.status();
  return ParseRows(path, *lines, header, *schema);
}

absl::Status WriteCsv(const std::string& path, const DataMatrix& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return absl::InternalError(absl::StrCat("cannot write ", path));
  std::vector<std::string> header = data.schema().feature_names();
  if (data.has_labels()) header.push_back(*data.schema().label_name());
  out << absl::StrJoin(header, ",") << "\n";
  const Matrix& v = data.values();
  for (std::size_t r = 0; r < v.rows(); ++r) {
    for (std::size_t c = 0; c < v.cols(); ++c) {
      if (c > 0) out << ',';
      out << FormatDouble(v(r, c));
    }
    if (data.has_labels()) out << ',' << data.labels()[r];
    out << '\n';
  }
  if (!out) return absl::InternalError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

absl::StatusOr<StandardizerParams> FitStandardizer(const Matrix& values) {
  const std::size_t n = values.rows();
  if (n < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("standardizer needs at least 2 rows, got ", n));
  }
  StandardizerParams p;
  p.means = values.ColumnMeans();
  p.scales.assign(values.cols(), 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < values.cols(); ++c) {
      const double d = values(r, c) - p.means[c];
      p.scales[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < values.cols(); ++c) {
    const double sd = std::sqrt(p.scales[c] / static_cast<double>(n));
    // Rounding can leave a constant column with a tiny positive spread.
    const bool constant = sd <= 1e-12 * std::max(1.0, std::abs(p.means[c]));
    p.scales[c] = constant ? 1.0 : sd;
  }
  return p;
}

absl::StatusOr<StandardizerParams> FitStandardizer(const DataMatrix& data) {
  return FitStandardizer(data.values());
}

absl::StatusOr<Matrix> ApplyStandardizer(const StandardizerParams& params,
                                         const Matrix& values) {
  if (values.cols() != params.means.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("standardizer expects ", params.means.size(),
                     " features, got ", values.cols()));
  }
  Matrix out(values.rows(), values.cols());
  for (std::size_t r = 0; r < values.rows(); ++r) {
    for (std::size_t c = 0; c < values.cols(); ++c) {
      out(r, c) = (values(r, c) - params.means[c]) / params.scales[c];
    }
  }
  return out;
}

absl::StatusOr<DataMatrix> ApplyStandardizer(const StandardizerParams& params,
                                             const DataMatrix& data) {
  auto z = ApplyStandardizer(params, data.values());
  if (!z.ok()) return z.status();
  return DataMatrix::Create(data.schema(), *std::move(z), data.maybe_labels(),
                            data.origin());
}

absl::StatusOr<Matrix> InvertStandardizer(const StandardizerParams& params,
                                          const Matrix& standardized) {
  if (standardized.cols() != params.means.size()) {
    return absl::InvalidArgumentError("dimension mismatch");
  }
  Matrix out(standardized.rows(), standardized.cols());
  for (std::size_t r = 0; r < standardized.rows(); ++r) {
    for (std::size_t c = 0; c < standardized.cols(); ++c) {
      out(r, c) = standardized(r, c) * params.scales[c] + params.means[c];
    }
  }
  return out;
}

namespace {

// Splits `total` into integer parts proportional to `weights` using the
// largest-remainder rule; ties go to the lower index.
std::vector<std::size_t> Apportion(std::size_t total,
                                   std::span<const double> weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * weights[i] / sum;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) {
    ++counts[remainders[i % remainders.size()].second];
  }
  return counts;
}

// Positive random weights normalized by the caller: exponential draws, i.e.
// a flat Dirichlet.
std::vector<double> UnevenWeights(int k, Rng& rng) {
  std::vector<double> w(k);
  for (double& x : w) x = -std::log(rng.UniformOpen01());
  return w;
}

}  // namespace

absl::StatusOr<Partition> PartitionMarkets(const DataMatrix& data,
                                           const PartitionSpec& spec) {
  const std::size_t n = data.rows();
  if (spec.n_markets < 1) {
    return absl::InvalidArgumentError("n_markets must be at least 1");
  }
  if (!(spec.global_fraction > 0.0 && spec.global_fraction < 1.0)) {
    return absl::InvalidArgumentError("global_fraction must be in (0, 1)");
  }
  if (n < static_cast<std::size_t>(spec.n_markets) + 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "too few rows: ", n, " rows for ", spec.n_markets, " markets"));
  }
  if (spec.stratify_by_label && !data.has_labels()) {
    return absl::InvalidArgumentError(
        "stratification requested but data has no labels");
  }
  const std::size_t n_global = static_cast<std::size_t>(
      std::floor(spec.global_fraction * static_cast<double>(n)));
  Rng rng(spec.seed);

  // Strata: one per label (sorted), or a single stratum.
  std::vector<std::vector<std::size_t>> strata;
  if (spec.stratify_by_label) {
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < n; ++i) by_label[data.labels()[i]].push_back(i);
    for (auto& [label, rows] : by_label) strata.push_back(std::move(rows));
  } else {
    strata.emplace_back(n);
    std::iota(strata[0].begin(), strata[0].end(), std::size_t{0});
  }
  std::vector<double> stratum_sizes;
  for (const auto& s : strata) stratum_sizes.push_back(s.size());
  const auto global_quota = Apportion(n_global, stratum_sizes);

  Partition out;
  out.market_rows.resize(spec.n_markets);
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto& rows = strata[s];
    rng.Shuffle(std::span<std::size_t>(rows));
    const std::size_t q = std::min(global_quota[s], rows.size());
    out.global_rows.insert(out.global_rows.end(), rows.begin(), rows.begin() + q);
    const auto weights = UnevenWeights(spec.n_markets, rng);
    const auto counts = Apportion(rows.size() - q, weights);
    std::size_t pos = q;
    for (int m = 0; m < spec.n_markets; ++m) {
      auto& dst = out.market_rows[m];
      dst.insert(dst.end(), rows.begin() + pos, rows.begin() + pos + counts[m]);
      pos += counts[m];
    }
  }
  // Every market gets at least one row, taken from the largest shard.
  for (auto& shard : out.market_rows) {
    if (!shard.empty()) continue;
    auto largest = std::max_element(
        out.market_rows.begin(), out.market_rows.end(),
        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    if (largest->size() < 2) {
      if (out.global_rows.empty()) {
        return absl::InvalidArgumentError("too few rows to fill every market");
      }
      shard.push_back(out.global_rows.back());
      out.global_rows.pop_back();
      continue;
    }
    shard.push_back(largest->back());
    largest->pop_back();
  }

  std::sort(out.global_rows.begin(), out.global_rows.end());
  out.global = data.SelectRows(out.global_rows);
  for (auto& shard : out.market_rows) {
    std::sort(shard.begin(), shard.end());
    out.markets.push_back(data.SelectRows(shard));
  }
  return out;
}

FeatureSchema MarketSchema() {
  return *FeatureSchema::Create(
      {"miles_from_market", "fruits_vegetables", "meat_seafood", "dairy",
       "eggs", "plants_flowers", "nuts_legumes", "value_added",
       "prepared_food", "crafts_art_services", "sales", "visitors"});
}

absl::StatusOr<DataMatrix> GenerateSyntheticMarket(std::size_t n,
                                                   std::uint64_t seed) {
  if (n == 0) return absl::InvalidArgumentError("n must be positive");
  static constexpr std::array<double, 9> kVendorRate = {
      0.55, 0.20, 0.15, 0.20, 0.25, 0.10, 0.35, 0.30, 0.20};
  Rng rng(seed);
  Matrix values(n, 12);
  for (std::size_t r = 0; r < n; ++r) {
    values(r, 0) = std::round(-25.0 * std::log(rng.UniformOpen01()) * 100.0) / 100.0;
    for (std::size_t j = 0; j < kVendorRate.size(); ++j) {
      values(r, 1 + j) = rng.Uniform01() < kVendorRate[j] ? 1.0 : 0.0;
    }
    values(r, 10) = std::round(std::exp(5.5 + 0.9 * rng.Normal()));
    values(r, 11) = std::round(std::exp(4.5 + 1.0 * rng.Normal()));
  }
  return DataMatrix::Create(MarketSchema(), std::move(values));
}

FeatureSchema CropSchema() {
  return *FeatureSchema::Create(
      {"N", "P", "K", "temperature", "humidity", "ph", "rainfall"}, "label");
}

namespace {

struct Range {
  double lo, hi;
};

struct CropProfile {
  const char* name;
  Range n, p, k, temperature, humidity, ph, rainfall;
};

// Per-crop value ranges of the public crop recommendation table.
constexpr std::array<CropProfile, 22> kCrops = {{
    {"rice", {60, 99}, {35, 60}, {35, 45}, {20.0, 26.9}, {80.1, 85.0}, {5.0, 7.9}, {182.6, 298.6}},
    {"maize", {60, 100}, {35, 60}, {15, 25}, {18.0, 26.5}, {55.3, 75.0}, {5.5, 7.0}, {60.7, 109.8}},
    {"chickpea", {20, 60}, {55, 80}, {75, 85}, {17.0, 21.0}, {14.3, 20.0}, {6.0, 8.9}, {65.1, 95.0}},
    {"kidneybeans", {0, 40}, {55, 80}, {15, 25}, {15.3, 25.0}, {18.1, 25.0}, {5.5, 6.0}, {60.3, 150.0}},
    {"pigeonpeas", {0, 40}, {55, 80}, {15, 25}, {18.3, 37.0}, {30.4, 69.7}, {4.5, 7.4}, {90.1, 198.8}},
    {"mothbeans", {0, 40}, {35, 60}, {15, 25}, {24.0, 32.0}, {40.0, 65.0}, {3.5, 9.9}, {30.9, 74.4}},
    {"mungbean", {0, 40}, {35, 60}, {15, 25}, {27.0, 30.0}, {80.0, 90.0}, {6.2, 7.2}, {36.1, 59.9}},
    {"blackgram", {20, 60}, {55, 80}, {15, 25}, {25.1, 35.0}, {60.1, 70.0}, {6.5, 7.8}, {60.4, 75.0}},
    {"lentil", {0, 40}, {55, 80}, {15, 25}, {18.1, 30.0}, {60.1, 70.0}, {5.9, 7.8}, {35.0, 54.9}},
    {"pomegranate", {0, 40}, {5, 30}, {35, 45}, {18.1, 25.0}, {85.1, 95.0}, {5.6, 7.2}, {102.5, 112.5}},
    {"banana", {80, 120}, {70, 95}, {45, 55}, {25.0, 30.0}, {75.0, 85.0}, {5.5, 6.5}, {90.1, 120.0}},
    {"mango", {0, 40}, {15, 40}, {25, 35}, {27.0, 35.99}, {45.0, 55.0}, {4.5, 7.0}, {89.3, 101.0}},
    {"grapes", {0, 40}, {120, 145}, {195, 205}, {8.8, 41.9}, {80.0, 84.0}, {5.5, 6.5}, {65.0, 75.0}},
    {"watermelon", {80, 120}, {5, 30}, {45, 55}, {24.0, 27.0}, {80.0, 90.0}, {6.0, 7.0}, {40.1, 59.8}},
    {"muskmelon", {80, 120}, {5, 30}, {45, 55}, {27.0, 30.0}, {90.0, 95.0}, {6.0, 6.8}, {20.2, 30.0}},
    {"apple", {0, 40}, {120, 145}, {195, 205}, {21.0, 24.0}, {90.0, 95.0}, {5.5, 6.5}, {100.1, 125.0}},
    {"orange", {0, 40}, {5, 30}, {5, 15}, {10.0, 35.0}, {90.0, 95.0}, {6.0, 8.0}, {100.2, 120.0}},
    {"papaya", {31, 70}, {46, 70}, {45, 55}, {23.0, 43.7}, {90.0, 95.0}, {6.5, 7.0}, {40.4, 248.9}},
    {"coconut", {0, 40}, {5, 30}, {25, 35}, {25.0, 30.0}, {90.0, 100.0}, {5.5, 6.5}, {131.1, 226.0}},
    {"cotton", {100, 140}, {35, 60}, {15, 25}, {22.0, 26.0}, {75.0, 85.0}, {5.8, 8.0}, {60.7, 100.0}},
    {"jute", {60, 100}, {35, 60}, {35, 45}, {23.1, 27.0}, {70.9, 90.0}, {6.0, 7.5}, {150.2, 199.8}},
    {"coffee", {80, 120}, {15, 40}, {25, 35}, {23.1, 28.0}, {50.0, 70.0}, {6.0, 7.5}, {115.2, 199.5}},
}};

double RoundTo(double v, double unit) { return std::round(v / unit) * unit; }

}  // namespace

absl::StatusOr<DataMatrix> GenerateCropReplica(std::size_t rows_per_crop,
                                               std::uint64_t seed) {
  if (rows_per_crop == 0) {
    return absl::InvalidArgumentError("rows_per_crop must be positive");
  }
  Rng rng(seed);
  Matrix values(rows_per_crop * kCrops.size(), 7);
  std::vector<std::string> labels;
  labels.reserve(values.rows());
  std::size_t r = 0;
  for (const auto& crop : kCrops) {
    for (std::size_t i = 0; i < rows_per_crop; ++i, ++r) {
      auto integer = [&](Range range) {
        return range.lo + static_cast<double>(rng.UniformInt(
                              static_cast<std::uint64_t>(range.hi - range.lo) + 1));
      };
      auto real = [&](Range range, double unit) {
        return RoundTo(rng.Uniform(range.lo, range.hi), unit);
      };
      values(r, 0) = integer(crop.n);
      values(r, 1) = integer(crop.p);
      values(r, 2) = integer(crop.k);
      values(r, 3) = real(crop.temperature, 1e-6);
      values(r, 4) = real(crop.humidity, 1e-6);
      values(r, 5) = real(crop.ph, 1e-6);
      values(r, 6) = real(crop.rainfall, 1e-6);
      labels.emplace_back(crop.name);
    }
  }
  return DataMatrix::Create(CropSchema(), std::move(values), std::move(labels));
}

}  // namespace agridp
