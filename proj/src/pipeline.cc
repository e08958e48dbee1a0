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

#include "agridp/pipeline.h"

#include "absl/strings/str_cat.h"
#include "agridp/rng.h"

namespace agridp {

std::string MarketId(int index) { return absl::StrCat("market_", index + 1); }

absl::StatusOr<PipelineBase> BuildPipelineBase(const DataMatrix& data,
                                               const PipelineConfig& cfg) {
  PartitionSpec spec;
  spec.n_markets = cfg.n_markets;
  spec.global_fraction = cfg.global_fraction;
  spec.seed = cfg.seed;
  spec.stratify_by_label = data.has_labels();
  auto partition = PartitionMarkets(data, spec);
  if (!partition.ok()) return partition.status();
  PipelineBase base;
  base.partition = *std::move(partition);
  for (auto& market : base.partition.markets) {
    market = market.WithOrigin(DataOrigin::kParticipantPrivate);
  }
  auto model = PcaFit(base.partition.global, cfg.k);
  if (!model.ok()) return model.status();
  base.model = *std::move(model);
  auto global = PcaTransform(base.model, base.partition.global);
  if (!global.ok()) return global.status();
  base.global_transformed = *std::move(global);
  for (std::size_t i = 0; i < base.partition.markets.size(); ++i) {
    base.market_ids.push_back(MarketId(static_cast<int>(i)));
    auto t = PcaTransform(base.model, base.partition.markets[i]);
    if (!t.ok()) return t.status();
    base.transformed.push_back(*std::move(t));
  }
  return base;
}

absl::StatusOr<PrivatizedPipeline> PrivatizeMarkets(const PipelineBase& base,
                                                    double epsilon,
                                                    std::uint64_t noise_seed,
                                                    int jobs) {
  const SensitivityVector s{base.model.sensitivities};
  auto budget = AllocateEpsilon(epsilon, s);
  if (!budget.ok()) return budget.status();
  PrivatizedPipeline out;
  out.store = AggregatedStore(base.model.Fingerprint());
  for (std::size_t i = 0; i < base.transformed.size(); ++i) {
    auto noisy = PrivatizeParallel(base.transformed[i], s, *budget,
                                   DeriveSeed(noise_seed, base.market_ids[i]),
                                   jobs);
    if (!noisy.ok()) return noisy.status();
    out.noisy.push_back(*noisy);
    if (auto st = out.store.SubmitShare({base.market_ids[i], *std::move(noisy)});
        !st.ok()) {
      return st;
    }
  }
  return out;
}

}  // namespace agridp
