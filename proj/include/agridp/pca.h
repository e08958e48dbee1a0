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

// The shared dimensionality-reduction model. The researcher fits it on the
// public dataset; every participant projects private rows with it.

#ifndef AGRIDP_PCA_H_
#define AGRIDP_PCA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "agridp/data.h"
#include "agridp/matrix.h"
#include "json.hpp"

namespace agridp {

inline constexpr int kPcaModelVersion = 1;

struct PcaModel {
  StandardizerParams standardizer;
  Matrix components;  // k x d, rows orthonormal
  std::vector<double> eigenvalues;    // non-increasing
  std::vector<double> sensitivities;  // one per component
  // Trace of the standardized training covariance, the denominator of the
  // explained-variance ratio.
  double total_variance = 0.0;

  std::size_t k() const { return components.rows(); }
  std::size_t d() const { return components.cols(); }

  // FNV-1a over the little-endian bytes of d, k, means, scales and
  // components.
  std::uint64_t Fingerprint() const;
};

struct TransformedMatrix {
  Matrix rows;  // n x k
  std::uint64_t model_fingerprint = 0;
};

// Standardizes `data`, takes the top-k eigenvectors of the 1/(n-1)
// covariance, flips each so its largest-magnitude entry is positive, and
// fills per-component sensitivities from the projected training rows.
absl::StatusOr<PcaModel> PcaFit(const DataMatrix& data, int k);

absl::StatusOr<TransformedMatrix> PcaTransform(const PcaModel& model,
                                               const DataMatrix& data);
absl::StatusOr<TransformedMatrix> PcaTransform(const PcaModel& model,
                                               const Matrix& raw_values);

std::vector<double> ExplainedVarianceRatio(const PcaModel& model);

nlohmann::json PcaModelToJson(const PcaModel& model);
// Rejects unknown versions, inconsistent shapes and fingerprint mismatch.
absl::StatusOr<PcaModel> PcaModelFromJson(const nlohmann::json& j);

absl::Status SavePcaModel(const std::string& path, const PcaModel& model);
absl::StatusOr<PcaModel> LoadPcaModel(const std::string& path);

// Projected matrices travel as CSV with a one-line JSON header comment:
//   # {"fingerprint":"...","k":2}
//   pc1,pc2
//   ...
absl::Status WriteTransformedCsv(const std::string& path,
                                 const TransformedMatrix& m);
absl::StatusOr<TransformedMatrix> ReadTransformedCsv(const std::string& path);

}  // namespace agridp

#endif  // AGRIDP_PCA_H_
