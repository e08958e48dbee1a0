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

// Tabular data handling: schemas, CSV ingestion, standardization, market
// partitioning and the synthetic data generators.

#ifndef AGRIDP_DATA_H_
#define AGRIDP_DATA_H_

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "agridp/matrix.h"

namespace agridp {

class FeatureSchema {
 public:
  FeatureSchema() = default;

  // Fails if names are empty or duplicated, or if the label collides with a
  // feature name.
  static absl::StatusOr<FeatureSchema> Create(
      std::vector<std::string> feature_names,
      std::optional<std::string> label_name = std::nullopt);

  const std::vector<std::string>& feature_names() const {
    return feature_names_;
  }
  const std::optional<std::string>& label_name() const { return label_name_; }
  std::size_t feature_count() const { return feature_names_.size(); }

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<std::string> feature_names_;
  std::optional<std::string> label_name_;
};

// Where a matrix came from. Reads of participant-private values are
// reported to RawAccessAudit.
enum class DataOrigin { kPublic, kParticipantPrivate };

// Counts reads of participant-private data and flags the ones that happen
// inside a ScopedRawAccessBan.
class RawAccessAudit {
 public:
  static void RecordRead();
  static std::uint64_t reads();
  static std::uint64_t violations();
  static bool banned();

 private:
  friend class ScopedRawAccessBan;
  static std::atomic<std::uint64_t> reads_;
  static std::atomic<std::uint64_t> violations_;
  static thread_local int ban_depth_;
};

// While alive, any read of participant-private values on this thread counts
// as a violation.
class ScopedRawAccessBan {
 public:
  ScopedRawAccessBan() { ++RawAccessAudit::ban_depth_; }
  ~ScopedRawAccessBan() { --RawAccessAudit::ban_depth_; }
  ScopedRawAccessBan(const ScopedRawAccessBan&) = delete;
  ScopedRawAccessBan& operator=(const ScopedRawAccessBan&) = delete;
};

class DataMatrix {
 public:
  DataMatrix() = default;

  // Validates shape, finiteness and label count.
  static absl::StatusOr<DataMatrix> Create(
      FeatureSchema schema, Matrix values,
      std::optional<std::vector<std::string>> labels = std::nullopt,
      DataOrigin origin = DataOrigin::kPublic);

  const FeatureSchema& schema() const { return schema_; }
  std::size_t rows() const { return values_.rows(); }
  std::size_t feature_count() const { return schema_.feature_count(); }
  bool has_labels() const { return labels_.has_value(); }
  const std::vector<std::string>& labels() const { return *labels_; }
  const std::optional<std::vector<std::string>>& maybe_labels() const {
    return labels_;
  }
  DataOrigin origin() const { return origin_; }

  // Raw values. Audited when the origin is participant-private.
  const Matrix& values() const {
    if (origin_ == DataOrigin::kParticipantPrivate) RawAccessAudit::RecordRead();
    return values_;
  }

  DataMatrix WithOrigin(DataOrigin origin) const {
    DataMatrix out = *this;
    out.origin_ = origin;
    return out;
  }

  // Rows listed in `indices`, labels carried along.
  DataMatrix SelectRows(std::span<const std::size_t> indices) const;

 private:
  FeatureSchema schema_;
  Matrix values_;
  std::optional<std::vector<std::string>> labels_;
  DataOrigin origin_ = DataOrigin::kPublic;
};

struct StandardizerParams {
  std::vector<double> means;
  std::vector<double> scales;
};

struct PartitionSpec {
  int n_markets = 5;
  double global_fraction = 1.0 / 3.0;
  std::uint64_t seed = 0;
  bool stratify_by_label = true;
};

struct Partition {
  DataMatrix global;
  std::vector<DataMatrix> markets;
  // Source row indices of each shard, ascending.
  std::vector<std::size_t> global_rows;
  std::vector<std::vector<std::size_t>> market_rows;
};

// Comma-separated, header first, '.' decimals, no quoting. Header columns
// may appear in any order but must match the schema exactly.
absl::StatusOr<DataMatrix> LoadCsv(const std::string& path,
                                   const FeatureSchema& schema);

// Header-driven load: every column except `label_name` is a feature, in
// file order.
absl::StatusOr<DataMatrix> LoadCsvInferSchema(
    const std::string& path, std::optional<std::string> label_name);

absl::Status WriteCsv(const std::string& path, const DataMatrix& data);

// Shortest decimal text that parses back to the same double.
std::string FormatDouble(double v);

// Population (1/n) standard deviation; zero-variance columns get scale 1.
absl::StatusOr<StandardizerParams> FitStandardizer(const DataMatrix& data);
absl::StatusOr<StandardizerParams> FitStandardizer(const Matrix& values);

absl::StatusOr<DataMatrix> ApplyStandardizer(const StandardizerParams& params,
                                             const DataMatrix& data);
absl::StatusOr<Matrix> ApplyStandardizer(const StandardizerParams& params,
                                         const Matrix& values);
absl::StatusOr<Matrix> InvertStandardizer(const StandardizerParams& params,
                                          const Matrix& standardized);

// Splits rows into a global part of floor(global_fraction * n) rows and
// n_markets unevenly sized market shards. Deterministic given the seed.
absl::StatusOr<Partition> PartitionMarkets(const DataMatrix& data,
                                           const PartitionSpec& spec);

// Synthetic farmer's market rows: miles from market, nine 0/1 vendor-type
// flags, sales and visitor counts. No label column.
FeatureSchema MarketSchema();
absl::StatusOr<DataMatrix> GenerateSyntheticMarket(std::size_t n,
                                                   std::uint64_t seed);

// Seeded replica of the public crop recommendation table: 22 crops,
// `rows_per_crop` rows each, columns N,P,K,temperature,humidity,ph,rainfall
// and a crop label. Per-crop value ranges follow the public table's
// per-class ranges.
FeatureSchema CropSchema();
absl::StatusOr<DataMatrix> GenerateCropReplica(std::size_t rows_per_crop,
                                               std::uint64_t seed);

}  // namespace agridp

#endif  // AGRIDP_DATA_H_
