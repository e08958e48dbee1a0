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

#include "agridp/pca.h"

#include <cmath>
#include <numeric>

#include "gtest/gtest.h"
#include "agridp/rng.h"
#include "oracles.h"

namespace agridp {
namespace {

DataMatrix FromRows(const oracle::Rows& rows) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < rows[0].size(); ++j) names.push_back("f" + std::to_string(j));
  return *DataMatrix::Create(*FeatureSchema::Create(names), Matrix::FromRows(rows));
}

oracle::Rows ToRows(const Matrix& m) {
  oracle::Rows out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.Row(r);
    out.emplace_back(row.begin(), row.end());
  }
  return out;
}

// Correlated Gaussian rows: x = A z with a random mixing matrix.
oracle::Rows RandomRows(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  oracle::Rows mix(d, std::vector<double>(d));
  for (auto& row : mix) {
    for (double& v : row) v = rng.Normal();
  }
  oracle::Rows rows(n, std::vector<double>(d, 0.0));
  for (auto& row : rows) {
    std::vector<double> z(d);
    for (double& v : z) v = rng.Normal();
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) row[i] += mix[i][j] * z[j];
      row[i] = row[i] * (1.0 + i) + 10.0 * i;
    }
  }
  return rows;
}

void ExpectOrthonormal(const PcaModel& m) {
  for (std::size_t a = 0; a < m.k(); ++a) {
    for (std::size_t b = 0; b < m.k(); ++b) {
      double dot = 0.0;
      for (std::size_t j = 0; j < m.d(); ++j) dot += m.components(a, j) * m.components(b, j);
      EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-8);
    }
  }
  for (std::size_t i = 0; i + 1 < m.eigenvalues.size(); ++i) {
    EXPECT_GE(m.eigenvalues[i], m.eigenvalues[i + 1]);
  }
  for (double ev : m.eigenvalues) EXPECT_GE(ev, -1e-10);
}

// Max |impl - oracle| over all projected rows, aligning each component's
// sign to the oracle first.
double MaxProjectionGap(const PcaModel& model, const oracle::Rows& rows) {
  const auto ref = oracle::FitOraclePca(rows);
  auto proj = PcaTransform(model, Matrix::FromRows(rows));
  EXPECT_TRUE(proj.ok());
  double worst = 0.0;
  for (std::size_t c = 0; c < model.k(); ++c) {
    double dot = 0.0;
    for (std::size_t j = 0; j < model.d(); ++j) dot += model.components(c, j) * ref.eig.vectors[c][j];
    const double sign = dot < 0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double expected = oracle::OracleProject(ref, rows[r], model.k())[c];
      worst = std::max(worst, std::abs(sign * proj->rows(r, c) - expected));
    }
  }
  return worst;
}

TEST(PcaFitTest, RankOneLineGivesDiagonalComponent) {
  auto model = PcaFit(FromRows({{1, 1}, {2, 2}, {3, 3}, {7, 7}}), 1);
  ASSERT_TRUE(model.ok()) << model.status();
  EXPECT_NEAR(std::abs(model->components(0, 0)), 1 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(std::abs(model->components(0, 1)), 1 / std::sqrt(2.0), 1e-12);
  const auto ratio = ExplainedVarianceRatio(*model);
  ASSERT_EQ(ratio.size(), 1);
  EXPECT_NEAR(ratio[0], 1.0, 1e-12);
}

TEST(PcaFitTest, SignConventionMakesLargestEntryPositive) {
  auto model = *PcaFit(FromRows(RandomRows(80, 5, 3)), 5);
  for (std::size_t c = 0; c < model.k(); ++c) {
    std::size_t argmax = 0;
    for (std::size_t j = 1; j < model.d(); ++j) {
      if (std::abs(model.components(c, j)) > std::abs(model.components(c, argmax))) argmax = j;
    }
    EXPECT_GT(model.components(c, argmax), 0.0);
  }
}

TEST(PcaFitTest, Errors) {
  auto data = FromRows({{1, 2}, {3, 5}});
  EXPECT_FALSE(PcaFit(data, 0).ok());
  EXPECT_FALSE(PcaFit(data, 3).ok());
  EXPECT_FALSE(PcaFit(FromRows({{1, 2}}), 1).ok());
}

TEST(PcaFitTest, RandomMatricesAreOrthonormalAndMatchJacobiOracle) {
  Rng dims(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 2 + dims.UniformInt(9);             // 2..10
    const std::size_t n = d + 2 + dims.UniformInt(200 - d - 1);  // <= 200
    const auto rows = RandomRows(n, d, 100 + trial);
    const int k = 1 + static_cast<int>(dims.UniformInt(d));
    auto model = PcaFit(FromRows(rows), k);
    ASSERT_TRUE(model.ok()) << model.status();
    ExpectOrthonormal(*model);
    EXPECT_LE(MaxProjectionGap(*model, rows), 1e-8) << "trial " << trial;
  }
}

TEST(PcaFitTest, CropProjectionsMatchJacobiOracle) {
  auto crop = *GenerateCropReplica(100, 0);
  auto model = *PcaFit(crop, 2);
  ExpectOrthonormal(model);
  EXPECT_LE(MaxProjectionGap(model, ToRows(crop.values())), 1e-8);
}

TEST(PcaTransformTest, MeanRowProjectsToOrigin) {
  auto crop = *GenerateCropReplica(30, 2);
  auto model = *PcaFit(crop, 3);
  Matrix mean_row(1, 7);
  for (std::size_t j = 0; j < 7; ++j) mean_row(0, j) = model.standardizer.means[j];
  auto out = *PcaTransform(model, mean_row);
  for (double v : out.rows.data()) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(PcaTransformTest, FullRankPreservesTotalVariance) {
  auto crop = *GenerateCropReplica(30, 2);
  auto model = *PcaFit(crop, 7);
  auto proj = *PcaTransform(model, crop);
  double projected_var = 0.0;
  const double n = static_cast<double>(proj.rows.rows());
  const auto means = proj.rows.ColumnMeans();
  for (std::size_t r = 0; r < proj.rows.rows(); ++r) {
    for (std::size_t c = 0; c < 7; ++c) {
      projected_var += (proj.rows(r, c) - means[c]) * (proj.rows(r, c) - means[c]);
    }
  }
  projected_var /= (n - 1);
  EXPECT_NEAR(projected_var, model.total_variance, 1e-6 * model.total_variance);
  const auto ratio = ExplainedVarianceRatio(model);
  EXPECT_NEAR(std::accumulate(ratio.begin(), ratio.end(), 0.0), 1.0, 1e-9);
}

TEST(PcaTransformTest, SingleTableRowMatchesOracle) {
  auto crop = *GenerateCropReplica(100, 0);
  auto model = *PcaFit(crop, 2);
  const auto ref = oracle::FitOraclePca(ToRows(crop.values()));
  const std::vector<double> row = {90, 42, 43, 20.879, 82.002, 6.502, 202.935};
  auto proj = *PcaTransform(model, Matrix::FromRows({row}));
  const auto expected = oracle::OracleProject(ref, row, 2);
  for (std::size_t c = 0; c < 2; ++c) {
    double dot = 0.0;
    for (std::size_t j = 0; j < 7; ++j) dot += model.components(c, j) * ref.eig.vectors[c][j];
    EXPECT_NEAR((dot < 0 ? -1 : 1) * proj.rows(0, c), expected[c], 1e-8);
  }
  EXPECT_EQ(proj.model_fingerprint, model.Fingerprint());
}

TEST(PcaTransformTest, DimensionMismatch) {
  auto model = *PcaFit(FromRows({{1, 2}, {3, 5}, {4, 4}}), 1);
  EXPECT_FALSE(PcaTransform(model, Matrix::FromRows({{1, 2, 3}})).ok());
}

TEST(PcaTransformTest, LinearWhenStandardizationIsIdentity) {
  auto model = *PcaFit(FromRows(RandomRows(50, 4, 8)), 3);
  model.standardizer = {{0, 0, 0, 0}, {1, 1, 1, 1}};
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x(4), y(4), mix(4);
    for (double& v : x) v = rng.Normal();
    for (double& v : y) v = rng.Normal();
    const double a = rng.Normal(), b = rng.Normal();
    for (std::size_t j = 0; j < 4; ++j) mix[j] = a * x[j] + b * y[j];
    auto px = *PcaTransform(model, Matrix::FromRows({x}));
    auto py = *PcaTransform(model, Matrix::FromRows({y}));
    auto pm = *PcaTransform(model, Matrix::FromRows({mix}));
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_NEAR(pm.rows(0, c), a * px.rows(0, c) + b * py.rows(0, c), 1e-9);
    }
  }
}

TEST(ExplainedVarianceTest, CropRatiosMatchOracle) {
  auto crop = *GenerateCropReplica(100, 0);
  auto model = *PcaFit(crop, 2);
  const auto ref = oracle::FitOraclePca(ToRows(crop.values()));
  const auto ratio = ExplainedVarianceRatio(model);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_NEAR(ratio[c], ref.eig.values[c] / ref.trace, 1e-9);
  }
  EXPECT_GE(ratio[0], ratio[1]);
  EXPECT_LE(ratio[0] + ratio[1], 1.0);
}

TEST(PcaModelJsonTest, RoundTripIsBitExact) {
  auto model = *PcaFit(FromRows(RandomRows(60, 6, 12)), 3);
  auto back = PcaModelFromJson(nlohmann::json::parse(PcaModelToJson(model).dump()));
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(back->components, model.components);
  EXPECT_EQ(back->standardizer.means, model.standardizer.means);
  EXPECT_EQ(back->eigenvalues, model.eigenvalues);
  EXPECT_EQ(back->sensitivities, model.sensitivities);
  EXPECT_EQ(back->Fingerprint(), model.Fingerprint());
}

TEST(PcaModelJsonTest, RejectsTamperingAndBadVersion) {
  auto model = *PcaFit(FromRows(RandomRows(60, 3, 12)), 2);
  auto j = PcaModelToJson(model);
  auto tampered = j;
  tampered["means"][0] = 123.0;
  EXPECT_EQ(PcaModelFromJson(tampered).status().code(), absl::StatusCode::kDataLoss);
  auto versioned = j;
  versioned["version"] = 99;
  EXPECT_FALSE(PcaModelFromJson(versioned).ok());
  auto shaped = j;
  shaped["k"] = 3;
  EXPECT_FALSE(PcaModelFromJson(shaped).ok());
}

TEST(TransformedCsvTest, RoundTripKeepsFingerprintAndValues) {
  auto crop = *GenerateCropReplica(5, 1);
  auto model = *PcaFit(crop, 2);
  auto proj = *PcaTransform(model, crop);
  const std::string path = ::testing::TempDir() + "/transformed.csv";
  ASSERT_TRUE(WriteTransformedCsv(path, proj).ok());
  auto back = ReadTransformedCsv(path);
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(back->rows, proj.rows);
  EXPECT_EQ(back->model_fingerprint, model.Fingerprint());
}

}  // namespace
}  // namespace agridp
