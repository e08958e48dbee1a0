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

// Local differential privacy for projected participant data: per-component
// sensitivity, budget allocation and the Laplace mechanism.

#ifndef AGRIDP_LDP_H_
#define AGRIDP_LDP_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "agridp/data.h"
#include "agridp/matrix.h"
#include "agridp/pca.h"
#include "agridp/rng.h"

namespace agridp {

inline constexpr double kSensitivityFloor = 1e-12;

struct SensitivityVector {
  std::vector<double> values;
};

struct PrivacyBudget {
  double epsilon = 0.0;
  std::vector<double> per_component;
};

struct NoisyMatrix {
  Matrix rows;  // n x k
  double epsilon = 0.0;
  std::uint64_t model_fingerprint = 0;
};

// Column-wise (max - min) of already projected rows, floored at
// kSensitivityFloor. Equals the largest pairwise |difference| per column.
SensitivityVector SensitivityFromProjection(const Matrix& projected);

// Projects the public reference data with `model` and measures each
// component's range. This is an empirical proxy: the worst case over all
// possible inputs is unbounded for a linear projection.
absl::StatusOr<SensitivityVector> ComputeSensitivity(
    const PcaModel& model, const DataMatrix& reference);

// Splits `total` proportionally to sensitivity, which makes every
// component's Laplace scale equal to sum(s) / total.
absl::StatusOr<PrivacyBudget> AllocateEpsilon(double total,
                                              const SensitivityVector& s);

// Inverse-CDF transform of u in (-0.5, 0.5) into a Laplace(0, scale) draw.
double LaplaceFromUniform(double scale, double u);

// One Laplace(0, scale) draw consuming one value from `rng`.
double LaplaceSample(double scale, Rng& rng);

// Adds independent Laplace(0, s[i] / budget[i]) noise to every cell of
// column i.
absl::StatusOr<NoisyMatrix> Privatize(const TransformedMatrix& transformed,
                                      const SensitivityVector& s,
                                      const PrivacyBudget& budget, Rng& rng);

// Same mechanism with rows split into fixed blocks, block b drawing from
// DeriveSeed(seed, b). Output does not depend on `jobs`.
absl::StatusOr<NoisyMatrix> PrivatizeParallel(
    const TransformedMatrix& transformed, const SensitivityVector& s,
    const PrivacyBudget& budget, std::uint64_t seed, int jobs,
    std::size_t block_rows = 256);

// CSV with header comment {"epsilon":..,"fingerprint":"..","k":..}.
absl::Status WriteNoisyCsv(const std::string& path, const NoisyMatrix& m);
absl::StatusOr<NoisyMatrix> ReadNoisyCsv(const std::string& path);

}  // namespace agridp

#endif  // AGRIDP_LDP_H_
