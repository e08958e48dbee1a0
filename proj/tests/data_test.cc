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

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "oracles.h"

namespace agridp {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;

std::string WriteTemp(const std::string& name, const std::string& contents) {
  const std::string path = ::testing::TempDir() + "/" + name;
  std::ofstream(path) << contents;
  return path;
}

TEST(LoadCsvTest, ParsesCropRowWithLabel) {
  const auto path = WriteTemp(
      "crop_row.csv",
      "N,P,K,temperature,humidity,ph,rainfall,label\n"
      "90,42,43,20.879,82.002,6.502,202.935,rice\n");
  auto data = LoadCsv(path, CropSchema());
  ASSERT_TRUE(data.ok()) << data.status();
  ASSERT_EQ(data->rows(), 1);
  auto row = data->values().Row(0);
  EXPECT_THAT(std::vector<double>(row.begin(), row.end()),
              ElementsAre(90, 42, 43, 20.879, 82.002, 6.502, 202.935));
  EXPECT_THAT(data->labels(), ElementsAre("rice"));
}

TEST(LoadCsvTest, HeaderOnlyIsEmptyDataset) {
  const auto path =
      WriteTemp("header_only.csv", "N,P,K,temperature,humidity,ph,rainfall,label\n");
  auto data = LoadCsv(path, CropSchema());
  ASSERT_FALSE(data.ok());
  EXPECT_THAT(data.status().message(), HasSubstr("empty dataset"));
}

TEST(LoadCsvTest, ThreeRowsMatchManualParseAndReorderedHeader) {
  // Columns deliberately out of schema order.
  const auto path = WriteTemp("three.csv",
                              "b,label,a\n"
                              "1.5,x,2\n"
                              "-3,y,4e2\n"
                              "0,x,0.25\n");
  auto schema = FeatureSchema::Create({"a", "b"}, "label");
  ASSERT_TRUE(schema.ok());
  auto data = LoadCsv(path, *schema);
  ASSERT_TRUE(data.ok()) << data.status();
  ASSERT_EQ(data->rows(), 3);
  const Matrix expected = Matrix::FromRows({{2, 1.5}, {400, -3}, {0.25, 0}});
  EXPECT_EQ(data->values(), expected);
  EXPECT_THAT(data->labels(), ElementsAre("x", "y", "x"));
}

TEST(LoadCsvTest, ReportsHeaderMismatch) {
  const auto path = WriteTemp("mismatch.csv", "a,c,label\n1,2,x\n");
  auto schema = FeatureSchema::Create({"a", "b"}, "label");
  auto data = LoadCsv(path, *schema);
  ASSERT_FALSE(data.ok());
  EXPECT_THAT(data.status().message(), HasSubstr("missing [b]"));
  EXPECT_THAT(data.status().message(), HasSubstr("extra [c]"));
}

TEST(LoadCsvTest, ReportsUnparsableCellPosition) {
  const auto path = WriteTemp("bad_cell.csv", "a,b\n1,2\n3,oops\n");
  auto schema = FeatureSchema::Create({"a", "b"});
  auto data = LoadCsv(path, *schema);
  ASSERT_FALSE(data.ok());
  EXPECT_THAT(data.status().message(), HasSubstr("row 2"));
  EXPECT_THAT(data.status().message(), HasSubstr("column 'b'"));
}

TEST(LoadCsvTest, RejectsNonFiniteAndMissingFile) {
  auto schema = FeatureSchema::Create({"a"});
  EXPECT_FALSE(LoadCsv(WriteTemp("nan.csv", "a\nnan\n"), *schema).ok());
  EXPECT_FALSE(LoadCsv(WriteTemp("inf.csv", "a\ninf\n"), *schema).ok());
  auto missing = LoadCsv("/nonexistent/file.csv", *schema);
  EXPECT_EQ(missing.status().code(), absl::StatusCode::kNotFound);
  EXPECT_FALSE(LoadCsv(WriteTemp("empty.csv", ""), *schema).ok());
}

TEST(FeatureSchemaTest, RejectsDuplicatesAndLabelCollision) {
  EXPECT_FALSE(FeatureSchema::Create({"a", "a"}).ok());
  EXPECT_FALSE(FeatureSchema::Create({"a", "b"}, "a").ok());
  EXPECT_FALSE(FeatureSchema::Create({}).ok());
}

TEST(DataMatrixTest, RejectsBadShapes) {
  auto schema = *FeatureSchema::Create({"a", "b"});
  EXPECT_FALSE(DataMatrix::Create(schema, Matrix::FromRows({{1, 2, 3}})).ok());
  EXPECT_FALSE(DataMatrix::Create(schema, Matrix::FromRows({{1, NAN}})).ok());
  EXPECT_FALSE(DataMatrix::Create(schema, Matrix::FromRows({{1, 2}}),
                                  std::vector<std::string>{"x", "y"})
                   .ok());
}

DataMatrix Column(std::vector<double> values) {
  Matrix m(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(i, 0) = values[i];
  return *DataMatrix::Create(*FeatureSchema::Create({"x"}), std::move(m));
}

TEST(StandardizerTest, TwoPointColumn) {
  auto p = FitStandardizer(Column({2, 4}));
  ASSERT_TRUE(p.ok());
  EXPECT_DOUBLE_EQ(p->means[0], 3.0);
  EXPECT_DOUBLE_EQ(p->scales[0], 1.0);
}

TEST(StandardizerTest, ConstantColumnGetsUnitScale) {
  auto p = FitStandardizer(Column({5, 5, 5}));
  ASSERT_TRUE(p.ok());
  EXPECT_DOUBLE_EQ(p->means[0], 5.0);
  EXPECT_DOUBLE_EQ(p->scales[0], 1.0);
}

TEST(StandardizerTest, NeedsTwoRows) {
  EXPECT_FALSE(FitStandardizer(Column({1})).ok());
}

TEST(StandardizerTest, CropColumnsMatchTwoPassOracle) {
  auto crop = GenerateCropReplica(100, 7);
  ASSERT_TRUE(crop.ok());
  oracle::Rows rows;
  for (std::size_t r = 0; r < crop->rows(); ++r) {
    auto row = crop->values().Row(r);
    rows.emplace_back(row.begin(), row.end());
  }
  const auto mom = oracle::ColumnMoments(rows);
  auto p = FitStandardizer(*crop);
  ASSERT_TRUE(p.ok());
  for (std::size_t j = 0; j < 7; ++j) {
    EXPECT_NEAR(p->means[j], mom.mean[j], 1e-9 * std::abs(mom.mean[j]));
    const double sd = std::sqrt(mom.population_variance[j]);
    EXPECT_NEAR(p->scales[j], sd, 1e-9 * sd);
  }
}

TEST(StandardizerTest, ApplyKnownValues) {
  StandardizerParams p{{3.0}, {1.0}};
  auto out = ApplyStandardizer(p, Matrix::FromRows({{2}, {4}}));
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(*out, Matrix::FromRows({{-1}, {1}}));
  EXPECT_FALSE(ApplyStandardizer(p, Matrix::FromRows({{1, 2}})).ok());
}

TEST(StandardizerTest, StandardizedFitDataHasZeroMeanUnitVariance) {
  auto crop = *GenerateCropReplica(20, 3);
  auto p = *FitStandardizer(crop);
  auto z = *ApplyStandardizer(p, crop.values());
  const double n = static_cast<double>(z.rows());
  for (std::size_t j = 0; j < z.cols(); ++j) {
    double mean = 0, var = 0;
    for (std::size_t r = 0; r < z.rows(); ++r) mean += z(r, j);
    mean /= n;
    for (std::size_t r = 0; r < z.rows(); ++r) var += (z(r, j) - mean) * (z(r, j) - mean);
    var /= n;
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(var, 1.0, 1e-9);
  }
  // Refitting on standardized data is a no-op.
  auto again = *FitStandardizer(z);
  for (std::size_t j = 0; j < z.cols(); ++j) {
    EXPECT_NEAR(again.means[j], 0.0, 1e-6);
    EXPECT_NEAR(again.scales[j], 1.0, 1e-6);
  }
}

TEST(StandardizerTest, InverseRecoversInput) {
  auto crop = *GenerateCropReplica(10, 11);
  auto p = *FitStandardizer(crop);
  auto back = *InvertStandardizer(p, *ApplyStandardizer(p, crop.values()));
  for (std::size_t i = 0; i < back.data().size(); ++i) {
    EXPECT_NEAR(back.data()[i], crop.values().data()[i],
                1e-9 * std::max(1.0, std::abs(crop.values().data()[i])));
  }
}

DataMatrix Labeled(std::size_t n) {
  Matrix m(n, 1);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) {
    m(i, 0) = static_cast<double>(i);
    labels.push_back(i % 2 ? "odd" : "even");
  }
  return *DataMatrix::Create(*FeatureSchema::Create({"x"}, "label"),
                             std::move(m), std::move(labels));
}

TEST(PartitionTest, ConservesRowsOnSmallInput) {
  PartitionSpec spec{.n_markets = 2, .global_fraction = 0.2, .seed = 42,
                     .stratify_by_label = false};
  auto part = PartitionMarkets(Labeled(10), spec);
  ASSERT_TRUE(part.ok()) << part.status();
  EXPECT_EQ(part->global.rows(), 2);
  ASSERT_EQ(part->markets.size(), 2);
  EXPECT_EQ(part->markets[0].rows() + part->markets[1].rows(), 8);
  std::multiset<double> seen;
  for (std::size_t r = 0; r < part->global.rows(); ++r) seen.insert(part->global.values()(r, 0));
  for (const auto& m : part->markets) {
    EXPECT_GE(m.rows(), 1);
    for (std::size_t r = 0; r < m.rows(); ++r) seen.insert(m.values()(r, 0));
  }
  EXPECT_EQ(seen, (std::multiset<double>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
}

TEST(PartitionTest, DeterministicGivenSeed) {
  PartitionSpec spec{.n_markets = 2, .global_fraction = 0.2, .seed = 42,
                     .stratify_by_label = true};
  auto a = *PartitionMarkets(Labeled(10), spec);
  auto b = *PartitionMarkets(Labeled(10), spec);
  EXPECT_EQ(a.global_rows, b.global_rows);
  EXPECT_EQ(a.market_rows, b.market_rows);
}

TEST(PartitionTest, CropMarketsArePairwiseDisjointCover) {
  auto crop = *GenerateCropReplica(100, 1);
  PartitionSpec spec{.n_markets = 5, .global_fraction = 1.0 / 3.0, .seed = 9,
                     .stratify_by_label = true};
  auto part = *PartitionMarkets(crop, spec);
  EXPECT_EQ(part.global_rows.size(), 733);
  std::vector<std::set<std::size_t>> shards;
  shards.emplace_back(part.global_rows.begin(), part.global_rows.end());
  for (const auto& m : part.market_rows) shards.emplace_back(m.begin(), m.end());
  std::size_t total = 0;
  for (std::size_t a = 0; a < shards.size(); ++a) {
    total += shards[a].size();
    for (std::size_t b = a + 1; b < shards.size(); ++b) {
      for (std::size_t idx : shards[a]) {
        EXPECT_FALSE(shards[b].contains(idx)) << "row " << idx << " in shards " << a << "," << b;
      }
    }
  }
  EXPECT_EQ(total, 2200);
  // Uneven: market sizes are not all equal.
  std::set<std::size_t> sizes;
  for (const auto& m : part.market_rows) sizes.insert(m.size());
  EXPECT_GT(sizes.size(), 1);
}

TEST(PartitionTest, Errors) {
  PartitionSpec spec{.n_markets = 10, .global_fraction = 0.5, .seed = 1,
                     .stratify_by_label = false};
  EXPECT_FALSE(PartitionMarkets(Labeled(10), spec).ok());
  auto unlabeled = Column({1, 2, 3, 4});
  PartitionSpec strat{.n_markets = 2, .global_fraction = 0.5, .seed = 1,
                      .stratify_by_label = true};
  EXPECT_FALSE(PartitionMarkets(unlabeled, strat).ok());
  strat.global_fraction = 1.0;
  strat.stratify_by_label = false;
  EXPECT_FALSE(PartitionMarkets(unlabeled, strat).ok());
}

void ExpectMarketInvariants(const DataMatrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    EXPECT_GE(m.values()(r, 0), 0.0);
    for (std::size_t j = 1; j <= 9; ++j) {
      const double f = m.values()(r, j);
      EXPECT_TRUE(f == 0.0 || f == 1.0) << "row " << r << " col " << j;
    }
    EXPECT_GE(m.values()(r, 10), 0.0);
    EXPECT_GE(m.values()(r, 11), 0.0);
  }
}

TEST(SyntheticMarketTest, SingleRow) {
  auto m = GenerateSyntheticMarket(1, 5);
  ASSERT_TRUE(m.ok());
  EXPECT_EQ(m->rows(), 1);
  EXPECT_EQ(m->feature_count(), 12);
  ExpectMarketInvariants(*m);
}

TEST(SyntheticMarketTest, VendorFlagsAreBinaryAcrossThousandRows) {
  auto m = *GenerateSyntheticMarket(1000, 5);
  ExpectMarketInvariants(m);
}

TEST(SyntheticMarketTest, SeedSensitiveAndDeterministic) {
  auto a = *GenerateSyntheticMarket(20, 1);
  auto b = *GenerateSyntheticMarket(20, 2);
  auto a2 = *GenerateSyntheticMarket(20, 1);
  EXPECT_NE(a.values(), b.values());
  EXPECT_EQ(a.values(), a2.values());
  EXPECT_FALSE(GenerateSyntheticMarket(0, 1).ok());
}

TEST(CropReplicaTest, ShapeAndClassBalance) {
  auto crop = *GenerateCropReplica(100, 0);
  EXPECT_EQ(crop.rows(), 2200);
  EXPECT_EQ(crop.feature_count(), 7);
  std::map<std::string, int> counts;
  for (const auto& l : crop.labels()) ++counts[l];
  EXPECT_EQ(counts.size(), 22);
  for (const auto& [label, c] : counts) EXPECT_EQ(c, 100) << label;
}

TEST(CsvRoundTripTest, WriteThenLoadIsExact) {
  auto crop = *GenerateCropReplica(3, 4);
  const std::string path = ::testing::TempDir() + "/roundtrip.csv";
  ASSERT_TRUE(WriteCsv(path, crop).ok());
  auto back = LoadCsv(path, CropSchema());
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(back->values(), crop.values());
  EXPECT_EQ(back->labels(), crop.labels());
}

TEST(RawAccessAuditTest, FlagsPrivateReadsInsideBanOnly) {
  auto priv = Column({1, 2}).WithOrigin(DataOrigin::kParticipantPrivate);
  auto pub = Column({1, 2});
  const auto before = RawAccessAudit::violations();
  (void)priv.values();
  EXPECT_EQ(RawAccessAudit::violations(), before);
  {
    ScopedRawAccessBan ban;
    (void)pub.values();
    EXPECT_EQ(RawAccessAudit::violations(), before);
    (void)priv.values();
    EXPECT_EQ(RawAccessAudit::violations(), before + 1);
  }
}

}  // namespace
}  // namespace agridp
