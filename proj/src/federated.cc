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

#include "agridp/federated.h"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

#include "absl/strings/str_cat.h"
#include "agridp/rng.h"

namespace agridp {

absl::StatusOr<Weighting> ParseWeighting(const std::string& text) {
  if (text == "uniform") return Weighting::kUniform;
  if (text == "by-sample-count") return Weighting::kBySampleCount;
  return absl::InvalidArgumentError(absl::StrCat(
      "weighting must be 'uniform' or 'by-sample-count', got '", text, "'"));
}

std::string WeightingName(Weighting w) {
  return w == Weighting::kUniform ? "uniform" : "by-sample-count";
}

std::vector<double> AnchoredAverage(
    const std::vector<const std::vector<double>*>& params,
    const std::vector<double>& weights) {
  const std::vector<double>& anchor = *params.front();
  std::vector<double> out = anchor;
  for (std::size_t j = 0; j < out.size(); ++j) {
    double shift = 0.0;
    for (std::size_t i = 1; i < params.size(); ++i) {
      shift += weights[i] * ((*params[i])[j] - anchor[j]);
    }
    out[j] += shift;
  }
  return out;
}

namespace {

absl::Status ValidateFedConfig(const FedConfig& cfg) {
  if (cfg.clients.empty()) return absl::InvalidArgumentError("no clients");
  if (cfg.rounds < 1) return absl::InvalidArgumentError("rounds must be >= 1");
  if (cfg.local_epochs < 1) {
    return absl::InvalidArgumentError("local epochs must be >= 1");
  }
  if (cfg.jobs < 1) return absl::InvalidArgumentError("jobs must be >= 1");
  std::set<std::string> unique(cfg.clients.begin(), cfg.clients.end());
  if (unique.size() != cfg.clients.size()) {
    return absl::InvalidArgumentError("client list has duplicates");
  }
  return ValidateTrainConfig(cfg.train_cfg);
}

}  // namespace

absl::StatusOr<FedResult> FedAvgRun(
    const ModelParams& init,
    const std::map<std::string, LabeledData>& client_data,
    const FedConfig& cfg, const LabeledData& eval_data) {
  if (auto st = ValidateFedConfig(cfg); !st.ok()) return st;
  std::vector<std::string> ids = cfg.clients;
  std::sort(ids.begin(), ids.end());
  std::vector<const LabeledData*> data;
  for (const auto& id : ids) {
    auto it = client_data.find(id);
    if (it == client_data.end()) {
      return absl::NotFoundError(absl::StrCat("no data for client '", id, "'"));
    }
    if (it->second.x.cols() != init.inputs()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "client '", id, "' has ", it->second.x.cols(),
          " features, network expects ", init.inputs()));
    }
    data.push_back(&it->second);
  }
  std::vector<double> weights(ids.size());
  double total = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    weights[i] = cfg.weighting == Weighting::kUniform
                     ? 1.0
                     : static_cast<double>(data[i]->rows());
    total += weights[i];
  }
  for (double& w : weights) w /= total;

  FedResult result{init, {}};
  const int threads = std::min<int>(cfg.jobs, static_cast<int>(ids.size()));
  for (int round = 0; round < cfg.rounds; ++round) {
    std::vector<absl::StatusOr<LocalTrainResult>> local(
        ids.size(), absl::UnknownError("not run"));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < ids.size(); i = next++) {
        TrainConfig tc = cfg.train_cfg;
        tc.epochs = cfg.local_epochs;
        if (cfg.seeding == ClientSeeding::kPerClient) {
          tc.seed = DeriveSeed(cfg.train_cfg.seed, ids[i]);
        }
        local[i] = MlpTrainLocal(result.params, *data[i], tc,
                                 round * cfg.local_epochs);
      }
    };
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    RoundReport report;
    report.round = round + 1;
    std::vector<const std::vector<double>*> updated;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!local[i].ok()) return local[i].status();
      updated.push_back(&local[i]->params.weights);
      report.per_client_loss.push_back(local[i]->epoch_losses.back());
    }
    result.params.weights = AnchoredAverage(updated, weights);
    auto acc = MlpAccuracy(result.params, eval_data);
    if (!acc.ok()) return acc.status();
    report.global_eval_accuracy = *acc;
    result.rounds.push_back(std::move(report));
  }
  return result;
}

absl::StatusOr<PersonalizedResult> PersonalizedTraining(
    const AggregatedStore& store, const PcaModel& model,
    const std::string& initiator,
    const std::map<std::string, DataMatrix>& raw_market_data,
    const PersonalizedConfig& cfg) {
  PersonalizedResult out;
  {
    ScopedRawAccessBan ban;
    const std::uint64_t before = RawAccessAudit::violations();
    auto picked = SelectCollaborators(store, initiator, cfg.m, cfg.mode);
    if (!picked.ok()) return picked.status();
    if (RawAccessAudit::violations() != before) {
      return absl::InternalError("raw market data was read during selection");
    }
    out.collaborators = *std::move(picked);
  }

  // The class list spans every market so all networks share one output layer.
  std::set<std::string> label_set;
  for (const auto& [id, market] : raw_market_data) {
    if (!market.has_labels()) {
      return absl::InvalidArgumentError(absl::StrCat("market '", id, "' has no labels"));
    }
    label_set.insert(market.labels().begin(), market.labels().end());
  }
  const std::vector<std::string> classes(label_set.begin(), label_set.end());

  auto prepare = [&](const std::string& id) -> absl::StatusOr<LabeledData> {
    auto it = raw_market_data.find(id);
    if (it == raw_market_data.end()) {
      return absl::NotFoundError(absl::StrCat("no raw data for '", id, "'"));
    }
    auto scaled = ApplyStandardizer(model.standardizer, it->second);
    if (!scaled.ok()) return scaled.status();
    return EncodeLabels(*scaled, classes);
  };

  std::map<std::string, LabeledData> clients;
  FedConfig fed = cfg.fed;
  fed.clients.clear();
  for (const auto& c : out.collaborators) {
    auto data = prepare(c.participant_id);
    if (!data.ok()) return data.status();
    clients.emplace(c.participant_id, *std::move(data));
    fed.clients.push_back(c.participant_id);
  }
  auto own = prepare(initiator);
  if (!own.ok()) return own.status();
  auto split = StratifiedSplit(own->y, cfg.test_fraction, cfg.split_seed);
  if (!split.ok()) return split.status();
  const LabeledData held_out = own->SelectRows(split->test);
  if (held_out.rows() == 0) {
    return absl::FailedPreconditionError("initiator has no held-out rows");
  }

  std::vector<int> counts(classes.size(), 0);
  for (int label : held_out.y) ++counts[label];
  out.majority_baseline = static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
                          static_cast<double>(held_out.rows());

  auto init = MlpInit({model.d(), static_cast<std::size_t>(cfg.hidden), classes.size()},
                      DeriveSeed(fed.train_cfg.seed, "init"));
  if (!init.ok()) return init.status();
  auto result = FedAvgRun(*init, clients, fed, held_out);
  if (!result.ok()) return result.status();
  out.fed = *std::move(result);
  out.accuracy = out.fed.rounds.back().global_eval_accuracy;
  return out;
}

absl::StatusOr<std::vector<FlEpsilonRow>> AccuracyVsEpsilonFl(
    const DataMatrix& data, const std::vector<double>& epsilons,
    const std::vector<std::uint64_t>& seeds, const PipelineConfig& pipeline,
    const std::string& initiator, const PersonalizedConfig& cfg) {
  if (epsilons.empty() || seeds.empty()) {
    return absl::InvalidArgumentError("epsilon and seed lists must be non-empty");
  }
  std::vector<FlEpsilonRow> rows;
  for (std::uint64_t seed : seeds) {
    PipelineConfig pc = pipeline;
    pc.seed = seed;
    auto base = BuildPipelineBase(data, pc);
    if (!base.ok()) return base.status();
    std::map<std::string, DataMatrix> raw;
    for (std::size_t i = 0; i < base->market_ids.size(); ++i) {
      raw.emplace(base->market_ids[i], base->partition.markets[i]);
    }
    PersonalizedConfig run = cfg;
    run.split_seed = DeriveSeed(seed, "split");
    run.fed.train_cfg.seed = DeriveSeed(seed, "fl");
    for (double eps : epsilons) {
      auto shares = PrivatizeMarkets(*base, eps, DeriveSeed(seed, "noise"));
      if (!shares.ok()) return shares.status();
      auto result = PersonalizedTraining(shares->store, base->model, initiator, raw, run);
      if (!result.ok()) return result.status();
      FlEpsilonRow row{eps, seed, result->accuracy, {}};
      for (const auto& c : result->collaborators) row.collaborators.push_back(c.participant_id);
      rows.push_back(std::move(row));
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const FlEpsilonRow& a, const FlEpsilonRow& b) {
    if (a.epsilon != b.epsilon) return a.epsilon < b.epsilon;
    return a.seed < b.seed;
  });
  return rows;
}

}  // namespace agridp
