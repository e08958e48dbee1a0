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

// Privacy (membership-inference power) and utility (classifier accuracy)
// measurements, and the drivers that sweep them over epsilon.

#ifndef AGRIDP_EVAL_H_
#define AGRIDP_EVAL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "agridp/data.h"
#include "agridp/ldp.h"
#include "agridp/models.h"
#include "agridp/pca.h"
#include "agridp/pipeline.h"
#include "agridp/sandbox.h"

namespace agridp {

struct PowerConfig {
  double fpr = 0.05;
  std::size_t n_control = 200;
  std::size_t n_case = 200;
  std::uint64_t seed = 0;
};

struct PowerReport {
  double epsilon = 0.0;
  double threshold = 0.0;
  double power = 0.0;
  std::size_t n_control = 0;
  std::size_t n_case = 0;
  // Control distances at or below the threshold; ceil(fpr * n_control)
  // unless distances tie.
  std::size_t controls_flagged = 0;
};

// Minimum Euclidean distance from each row of `queries` to any row of
// `reference`.
std::vector<double> MinDistances(const Matrix& queries, const Matrix& reference);

// Samples n_control control rows and n_case case rows without replacement,
// scores each by its minimum distance to the shared matrix, sets the
// threshold at the ceil(fpr * n_control)-th smallest control distance and
// reports the fraction of case distances at or below it.
absl::StatusOr<PowerReport> PowerAnalysis(const NoisyMatrix& shared,
                                          const TransformedMatrix& case_pool,
                                          const TransformedMatrix& control_pool,
                                          const PowerConfig& cfg);

struct UtilityConfig {
  ClassifierKind classifier = ClassifierKind::kLogReg;
  TrainConfig train = LogRegDefaults();
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;
  // Train on noisy rows instead of clean ones.
  bool train_on_noisy = false;
};

TrainConfig DefaultTrainConfig(ClassifierKind kind);

struct UtilityReport {
  double epsilon = 0.0;
  ClassifierKind classifier = ClassifierKind::kLogReg;
  double accuracy_noisy = 0.0;
  double accuracy_clean = 0.0;
};

// Labels each record by its clean row's cluster, trains on the clean (or
// noisy) training split and scores the test split both ways.
absl::StatusOr<UtilityReport> UtilityAccuracy(const TransformedMatrix& clean,
                                              const NoisyMatrix& noisy,
                                              const ClusterModel& cluster_model,
                                              const UtilityConfig& cfg);

struct Table4Config {
  PipelineConfig pipeline;
  int clusters = 2;
  double epsilon_logreg = 25.0;
  double epsilon_gnb = 35.0;
  double epsilon_svm = 35.0;
  TrainConfig logreg = LogRegDefaults();
  TrainConfig svm = SvmDefaults();
  double test_fraction = 0.2;
  std::uint64_t seed = 0;  // overrides pipeline.seed
};

struct Table4Row {
  ClassifierKind classifier = ClassifierKind::kLogReg;
  double epsilon = 0.0;
  double accuracy_centralized = 0.0;
  double accuracy_aggregated = 0.0;
};

struct Table4Result {
  std::vector<Table4Row> rows;  // logreg, gnb, svm
  double average_gap = 0.0;     // mean of centralized - aggregated
};

// Centralized arm: the classifier on the raw pooled dataset and its labels.
// Aggregated arm: UtilityAccuracy over the pooled market shares at the
// classifier's epsilon, with clusters fitted on the clean projected rows.
absl::StatusOr<Table4Result> Table4Experiment(const DataMatrix& data,
                                              const Table4Config& cfg);

enum class SweepExperiment { kPower, kUtility, kBoth };

absl::StatusOr<SweepExperiment> ParseSweepExperiment(const std::string& text);
std::string SweepExperimentName(SweepExperiment e);

struct SweepConfig {
  std::vector<double> epsilons;
  std::vector<std::uint64_t> seeds;
  SweepExperiment experiment = SweepExperiment::kBoth;
  PipelineConfig pipeline;
  PowerConfig power;
  int clusters = 2;
  ClassifierKind classifier = ClassifierKind::kLogReg;
  TrainConfig train = LogRegDefaults();
  int jobs = 1;
};

struct PowerRow {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double threshold = 0.0;
  double power = 0.0;
};

struct UtilityRow {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  ClassifierKind classifier = ClassifierKind::kLogReg;
  double accuracy_noisy = 0.0;
  double accuracy_clean = 0.0;
};

struct SweepResult {
  std::vector<PowerRow> power;      // sorted by (epsilon, seed)
  std::vector<UtilityRow> utility;  // sorted by (epsilon, seed)
};

// Per seed the partition, model and noise uniforms are fixed, so only the
// noise magnitude varies with epsilon. Power is measured per market (its
// share against its own clean rows, with public global rows as controls)
// and averaged over markets. Utility pools all markets.
absl::StatusOr<SweepResult> SweepEpsilon(const DataMatrix& data,
                                         const SweepConfig& cfg);

// Linear-interpolation quantile of unsorted values, q in [0, 1].
double Quantile(std::vector<double> values, double q);

struct MedianRow {
  double epsilon = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

std::vector<MedianRow> PowerMedians(const std::vector<PowerRow>& rows);
std::vector<MedianRow> UtilityMedians(const std::vector<UtilityRow>& rows);

absl::Status WritePowerCsv(const std::string& path, const std::vector<PowerRow>& rows);
absl::Status WriteUtilityCsv(const std::string& path,
                             const std::vector<UtilityRow>& rows);
absl::Status WriteTable4Csv(const std::string& path, const Table4Result& result);
// Whitespace-separated "epsilon median q25 q75" with a '#' header line.
absl::Status WriteMedianDat(const std::string& path,
                            const std::vector<MedianRow>& rows);

}  // namespace agridp

#endif  // AGRIDP_EVAL_H_
