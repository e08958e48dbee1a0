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

// Simulated federated averaging and the personalized-training workflow.

#ifndef AGRIDP_FEDERATED_H_
#define AGRIDP_FEDERATED_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "agridp/data.h"
#include "agridp/models.h"
#include "agridp/pca.h"
#include "agridp/pipeline.h"
#include "agridp/sandbox.h"

namespace agridp {

enum class Weighting { kUniform, kBySampleCount };

absl::StatusOr<Weighting> ParseWeighting(const std::string& text);
std::string WeightingName(Weighting w);

// kPerClient trains client `id` with DeriveSeed(train_cfg.seed, id); kShared
// gives every client train_cfg.seed.
enum class ClientSeeding { kPerClient, kShared };

struct FedConfig {
  int rounds = 20;
  int local_epochs = 5;
  std::vector<std::string> clients;
  TrainConfig train_cfg = MlpDefaults();  // epochs is replaced by local_epochs
  Weighting weighting = Weighting::kBySampleCount;
  ClientSeeding seeding = ClientSeeding::kPerClient;
  int jobs = 1;
};

struct RoundReport {
  int round = 0;
  std::vector<double> per_client_loss;  // sorted client order
  double global_eval_accuracy = 0.0;
};

struct FedResult {
  ModelParams params;
  std::vector<RoundReport> rounds;
};

// Weighted mean of `params` anchored on the first vector:
// p0 + sum_i w_i (p_i - p0). Weights must sum to 1. Coordinates on which all
// clients agree are reproduced exactly.
std::vector<double> AnchoredAverage(
    const std::vector<const std::vector<double>*>& params,
    const std::vector<double>& weights);

// Clients are processed and averaged in sorted id order; round r trains
// with epoch offset r * local_epochs. Clients may run on up to cfg.jobs
// threads without changing the result.
absl::StatusOr<FedResult> FedAvgRun(
    const ModelParams& init,
    const std::map<std::string, LabeledData>& client_data,
    const FedConfig& cfg, const LabeledData& eval_data);

struct PersonalizedConfig {
  int m = 3;
  SimilarityMode mode = SimilarityMode::kProfile;
  FedConfig fed;  // clients are filled in from the selection
  int hidden = kMlpDefaultHidden;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;
};

struct PersonalizedResult {
  std::vector<RankedParticipant> collaborators;
  FedResult fed;
  double accuracy = 0.0;           // on the initiator's held-out rows
  double majority_baseline = 0.0;  // most frequent held-out class share
};

// Picks m collaborators from the privatized store alone (raw reads are
// banned and audited during selection), then federates over their raw
// markets, standardized with the public model's standardizer, and evaluates
// on a stratified held-out split of the initiator's market.
absl::StatusOr<PersonalizedResult> PersonalizedTraining(
    const AggregatedStore& store, const PcaModel& model,
    const std::string& initiator,
    const std::map<std::string, DataMatrix>& raw_market_data,
    const PersonalizedConfig& cfg);

struct FlEpsilonRow {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::vector<std::string> collaborators;
};

// For every seed, builds the pipeline once and then, per epsilon, rebuilds
// the shares with a fixed noise seed, reselects and retrains. Rows are
// ordered by (epsilon, seed).
absl::StatusOr<std::vector<FlEpsilonRow>> AccuracyVsEpsilonFl(
    const DataMatrix& data, const std::vector<double>& epsilons,
    const std::vector<std::uint64_t>& seeds, const PipelineConfig& pipeline,
    const std::string& initiator, const PersonalizedConfig& cfg);

}  // namespace agridp

#endif  // AGRIDP_FEDERATED_H_
