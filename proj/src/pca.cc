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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <Eigen/Dense>

#include "absl/strings/str_cat.h"
#include "agridp/annotated_csv.h"
#include "agridp/hash.h"
#include "agridp/ldp.h"

namespace agridp {

std::uint64_t PcaModel::Fingerprint() const {
  Fnv1aHasher h;
  h.AddU64(d());
  h.AddU64(k());
  h.AddDoubles(standardizer.means);
  h.AddDoubles(standardizer.scales);
  h.AddDoubles(components.data());
  return h.digest();
}

absl::StatusOr<PcaModel> PcaFit(const DataMatrix& data, int k) {
  const std::size_t d = data.feature_count();
  if (k < 1 || static_cast<std::size_t>(k) > d) {
    return absl::InvalidArgumentError(
        absl::StrCat("k must be in [1, ", d, "], got ", k));
  }
  if (data.rows() < 2) {
    return absl::InvalidArgumentError("PCA needs at least 2 rows");
  }
  PcaModel model;
  auto standardizer = FitStandardizer(data.values());
  if (!standardizer.ok()) return standardizer.status();
  model.standardizer = *std::move(standardizer);
  auto z = ApplyStandardizer(model.standardizer, data.values());
  if (!z.ok()) return z.status();

  const std::size_t n = z->rows();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = z->Row(r);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) cov(i, j) += row[i] * row[j];
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov(i, j) /= static_cast<double>(n - 1);
      cov(j, i) = cov(i, j);
    }
  }
  model.total_variance = cov.trace();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    return absl::InternalError("symmetric eigensolver did not converge");
  }
  // Eigen returns ascending eigenvalues; walk from the top.
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return solver.eigenvalues()(a) > solver.eigenvalues()(b);
  });

  model.components = Matrix(k, d);
  for (int c = 0; c < k; ++c) {
    const auto vec = solver.eigenvectors().col(order[c]);
    std::size_t argmax = 0;
    for (std::size_t j = 1; j < d; ++j) {
      if (std::abs(vec(j)) > std::abs(vec(argmax))) argmax = j;
    }
    const double sign = vec(argmax) < 0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) model.components(c, j) = sign * vec(j);
    model.eigenvalues.push_back(solver.eigenvalues()(order[c]));
  }

  auto projected = PcaTransform(model, data.values());
  if (!projected.ok()) return projected.status();
  model.sensitivities = SensitivityFromProjection(projected->rows).values;
  return model;
}

absl::StatusOr<TransformedMatrix> PcaTransform(const PcaModel& model,
                                               const Matrix& raw_values) {
  if (raw_values.cols() != model.d()) {
    return absl::InvalidArgumentError(
        absl::StrCat("model expects ", model.d(), " features, data has ",
                     raw_values.cols()));
  }
  auto z = ApplyStandardizer(model.standardizer, raw_values);
  if (!z.ok()) return z.status();
  TransformedMatrix out;
  out.model_fingerprint = model.Fingerprint();
  out.rows = Matrix(z->rows(), model.k());
  for (std::size_t r = 0; r < z->rows(); ++r) {
    auto row = z->Row(r);
    for (std::size_t c = 0; c < model.k(); ++c) {
      auto comp = model.components.Row(c);
      double acc = 0.0;
      for (std::size_t j = 0; j < model.d(); ++j) acc += row[j] * comp[j];
      out.rows(r, c) = acc;
    }
  }
  return out;
}

absl::StatusOr<TransformedMatrix> PcaTransform(const PcaModel& model,
                                               const DataMatrix& data) {
  return PcaTransform(model, data.values());
}

std::vector<double> ExplainedVarianceRatio(const PcaModel& model) {
  std::vector<double> ratios;
  for (double ev : model.eigenvalues) {
    ratios.push_back(model.total_variance > 0
                         ? std::clamp(ev / model.total_variance, 0.0, 1.0)
                         : 0.0);
  }
  return ratios;
}

nlohmann::json PcaModelToJson(const PcaModel& model) {
  nlohmann::json components = nlohmann::json::array();
  for (std::size_t c = 0; c < model.k(); ++c) {
    auto row = model.components.Row(c);
    components.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return nlohmann::json{
      {"version", kPcaModelVersion},
      {"k", model.k()},
      {"d", model.d()},
      {"means", model.standardizer.means},
      {"scales", model.standardizer.scales},
      {"components", components},
      {"eigenvalues", model.eigenvalues},
      {"sensitivities", model.sensitivities},
      {"total_variance", model.total_variance},
      {"fingerprint", FingerprintToHex(model.Fingerprint())},
  };
}

absl::StatusOr<PcaModel> PcaModelFromJson(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kPcaModelVersion) {
      return absl::InvalidArgumentError(
          absl::StrCat("unsupported model version ", j.at("version").dump()));
    }
    const auto k = j.at("k").get<std::size_t>();
    const auto d = j.at("d").get<std::size_t>();
    PcaModel model;
    model.standardizer.means = j.at("means").get<std::vector<double>>();
    model.standardizer.scales = j.at("scales").get<std::vector<double>>();
    model.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    model.sensitivities = j.at("sensitivities").get<std::vector<double>>();
    model.total_variance = j.at("total_variance").get<double>();
    const auto rows =
        j.at("components").get<std::vector<std::vector<double>>>();
    if (model.standardizer.means.size() != d ||
        model.standardizer.scales.size() != d || rows.size() != k ||
        model.eigenvalues.size() != k || model.sensitivities.size() != k) {
      return absl::InvalidArgumentError("model JSON has inconsistent shapes");
    }
    for (const auto& row : rows) {
      if (row.size() != d) {
        return absl::InvalidArgumentError("component row has wrong length");
      }
    }
    model.components = Matrix::FromRows(rows);
    auto stored = FingerprintFromHex(j.at("fingerprint").get<std::string>());
    if (!stored.ok()) return stored.status();
    if (*stored != model.Fingerprint()) {
      return absl::DataLossError("model fingerprint does not match contents");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("bad model JSON: ", e.what()));
  }
}

absl::Status SavePcaModel(const std::string& path, const PcaModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return absl::InternalError(absl::StrCat("cannot write ", path));
  out << PcaModelToJson(model).dump(2) << "\n";
  return out ? absl::OkStatus()
             : absl::InternalError(absl::StrCat("write failed: ", path));
}

absl::StatusOr<PcaModel> LoadPcaModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": invalid JSON"));
  }
  return PcaModelFromJson(j);
}

absl::Status WriteTransformedCsv(const std::string& path,
                                 const TransformedMatrix& m) {
  AnnotatedCsv csv;
  csv.header = {{"fingerprint", FingerprintToHex(m.model_fingerprint)},
                {"k", m.rows.cols()}};
  csv.values = m.rows;
  return WriteAnnotatedCsv(path, csv);
}

absl::StatusOr<TransformedMatrix> ReadTransformedCsv(const std::string& path) {
  auto csv = ReadAnnotatedCsv(path);
  if (!csv.ok()) return csv.status();
  if (!csv->header.contains("fingerprint") ||
      !csv->header["fingerprint"].is_string() ||
      csv->header.contains("epsilon")) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": not a transformed-matrix file"));
  }
  auto fp = FingerprintFromHex(csv->header["fingerprint"].get<std::string>());
  if (!fp.ok()) return fp.status();
  return TransformedMatrix{std::move(csv->values), *fp};
}

}  // namespace agridp
