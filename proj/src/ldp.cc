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

#include "agridp/ldp.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "absl/strings/str_cat.h"
#include "agridp/annotated_csv.h"
#include "agridp/hash.h"

namespace agridp {

SensitivityVector SensitivityFromProjection(const Matrix& projected) {
  SensitivityVector s;
  s.values.assign(projected.cols(), kSensitivityFloor);
  if (projected.rows() == 0) return s;
  for (std::size_t c = 0; c < projected.cols(); ++c) {
    double lo = projected(0, c);
    double hi = lo;
    for (std::size_t r = 1; r < projected.rows(); ++r) {
      lo = std::min(lo, projected(r, c));
      hi = std::max(hi, projected(r, c));
    }
    s.values[c] = std::max(hi - lo, kSensitivityFloor);
  }
  return s;
}

absl::StatusOr<SensitivityVector> ComputeSensitivity(
    const PcaModel& model, const DataMatrix& reference) {
  if (reference.rows() == 0) {
    return absl::InvalidArgumentError("empty reference dataset");
  }
  auto projected = PcaTransform(model, reference);
  if (!projected.ok()) return projected.status();
  return SensitivityFromProjection(projected->rows);
}

absl::StatusOr<PrivacyBudget> AllocateEpsilon(double total,
                                              const SensitivityVector& s) {
  if (!(total > 0.0) || !std::isfinite(total)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive and finite, got ", total));
  }
  if (s.values.empty()) {
    return absl::InvalidArgumentError("empty sensitivity vector");
  }
  for (double v : s.values) {
    if (!(v > 0.0)) {
      return absl::InvalidArgumentError("sensitivities must be positive");
    }
  }
  const double sum = std::accumulate(s.values.begin(), s.values.end(), 0.0);
  PrivacyBudget budget;
  budget.epsilon = total;
  for (double v : s.values) budget.per_component.push_back(total * v / sum);
  return budget;
}

double LaplaceFromUniform(double scale, double u) {
  if (u == 0.0) return 0.0;
  const double sign = u < 0 ? -1.0 : 1.0;
  return -scale * sign * std::log(1.0 - 2.0 * std::abs(u));
}

double LaplaceSample(double scale, Rng& rng) {
  return LaplaceFromUniform(scale, rng.UniformOpen01() - 0.5);
}

namespace {

absl::StatusOr<std::vector<double>> NoiseScales(
    const TransformedMatrix& transformed, const SensitivityVector& s,
    const PrivacyBudget& budget) {
  const std::size_t k = transformed.rows.cols();
  if (s.values.size() != k || budget.per_component.size() != k) {
    return absl::InvalidArgumentError(absl::StrCat(
        "dimension mismatch: matrix has ", k, " components, sensitivity ",
        s.values.size(), ", budget ", budget.per_component.size()));
  }
  const double allocated = std::accumulate(budget.per_component.begin(),
                                           budget.per_component.end(), 0.0);
  if (std::abs(allocated - budget.epsilon) > 1e-9 * budget.epsilon) {
    return absl::InvalidArgumentError(
        "budget components do not sum to its epsilon");
  }
  std::vector<double> scales(k);
  for (std::size_t c = 0; c < k; ++c) {
    if (!(budget.per_component[c] > 0.0) || !(s.values[c] > 0.0)) {
      return absl::InvalidArgumentError("non-positive budget or sensitivity");
    }
    scales[c] = s.values[c] / budget.per_component[c];
  }
  return scales;
}

}  // namespace

absl::StatusOr<NoisyMatrix> Privatize(const TransformedMatrix& transformed,
                                      const SensitivityVector& s,
                                      const PrivacyBudget& budget, Rng& rng) {
  auto scales = NoiseScales(transformed, s, budget);
  if (!scales.ok()) return scales.status();
  NoisyMatrix out;
  out.rows = transformed.rows;
  out.epsilon = budget.epsilon;
  out.model_fingerprint = transformed.model_fingerprint;
  for (std::size_t r = 0; r < out.rows.rows(); ++r) {
    for (std::size_t c = 0; c < out.rows.cols(); ++c) {
      out.rows(r, c) += LaplaceSample((*scales)[c], rng);
    }
  }
  if (!out.rows.AllFinite()) {
    return absl::InternalError("noise produced a non-finite value");
  }
  return out;
}

absl::StatusOr<NoisyMatrix> PrivatizeParallel(
    const TransformedMatrix& transformed, const SensitivityVector& s,
    const PrivacyBudget& budget, std::uint64_t seed, int jobs,
    std::size_t block_rows) {
  auto scales = NoiseScales(transformed, s, budget);
  if (!scales.ok()) return scales.status();
  if (block_rows == 0) block_rows = 1;
  NoisyMatrix out;
  out.rows = transformed.rows;
  out.epsilon = budget.epsilon;
  out.model_fingerprint = transformed.model_fingerprint;
  const std::size_t n = out.rows.rows();
  const std::size_t blocks = (n + block_rows - 1) / block_rows;
  auto run_block = [&](std::size_t b) {
    Rng rng(DeriveSeed(seed, b));
    const std::size_t end = std::min(n, (b + 1) * block_rows);
    for (std::size_t r = b * block_rows; r < end; ++r) {
      for (std::size_t c = 0; c < out.rows.cols(); ++c) {
        out.rows(r, c) += LaplaceSample((*scales)[c], rng);
      }
    }
  };
  const std::size_t workers =
      std::clamp<std::size_t>(jobs < 1 ? 1 : jobs, 1, std::max<std::size_t>(blocks, 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t b = w; b < blocks; b += workers) run_block(b);
    });
  }
  for (auto& t : pool) t.join();
  if (!out.rows.AllFinite()) {
    return absl::InternalError("noise produced a non-finite value");
  }
  return out;
}

absl::Status WriteNoisyCsv(const std::string& path, const NoisyMatrix& m) {
  AnnotatedCsv csv;
  csv.header = {{"epsilon", m.epsilon},
                {"fingerprint", FingerprintToHex(m.model_fingerprint)},
                {"k", m.rows.cols()}};
  csv.values = m.rows;
  return WriteAnnotatedCsv(path, csv);
}

absl::StatusOr<NoisyMatrix> ReadNoisyCsv(const std::string& path) {
  auto csv = ReadAnnotatedCsv(path);
  if (!csv.ok()) return csv.status();
  const auto& h = csv->header;
  if (!h.contains("epsilon") || !h["epsilon"].is_number() ||
      !h.contains("fingerprint") || !h["fingerprint"].is_string()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": not a privatized share (no epsilon header)"));
  }
  auto fp = FingerprintFromHex(h["fingerprint"].get<std::string>());
  if (!fp.ok()) return fp.status();
  NoisyMatrix out;
  out.rows = std::move(csv->values);
  out.epsilon = h["epsilon"].get<double>();
  out.model_fingerprint = *fp;
  if (!(out.epsilon > 0.0)) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": epsilon must be positive"));
  }
  return out;
}

}  // namespace agridp
