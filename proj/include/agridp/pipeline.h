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

// End-to-end wiring shared by the experiment drivers: split a dataset into a
// public global set and private markets, fit the global model, project each
// market, then privatize and aggregate at a chosen epsilon.

#ifndef AGRIDP_PIPELINE_H_
#define AGRIDP_PIPELINE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "agridp/data.h"
#include "agridp/ldp.h"
#include "agridp/pca.h"
#include "agridp/sandbox.h"

namespace agridp {

struct PipelineConfig {
  int n_markets = 5;
  double global_fraction = 1.0 / 3.0;
  int k = 2;
  std::uint64_t seed = 0;
};

// Everything up to, but not including, noise.
struct PipelineBase {
  Partition partition;  // markets carry DataOrigin::kParticipantPrivate
  PcaModel model;
  std::vector<std::string> market_ids;  // "market_1", ...
  std::vector<TransformedMatrix> transformed;  // one per market
  TransformedMatrix global_transformed;
};

struct PrivatizedPipeline {
  std::vector<NoisyMatrix> noisy;  // aligned with market_ids
  AggregatedStore store{0};
};

std::string MarketId(int index);

absl::StatusOr<PipelineBase> BuildPipelineBase(const DataMatrix& data,
                                               const PipelineConfig& cfg);

// Market i draws noise from DeriveSeed(noise_seed, market id), so for a fixed
// seed the same uniforms are reused at every epsilon and only the noise
// magnitude changes.
absl::StatusOr<PrivatizedPipeline> PrivatizeMarkets(const PipelineBase& base,
                                                    double epsilon,
                                                    std::uint64_t noise_seed,
                                                    int jobs = 1);

}  // namespace agridp

#endif  // AGRIDP_PIPELINE_H_
