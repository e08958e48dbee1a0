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

// agridp command-line tool. Every command validates its inputs, writes
// <out>.manifest.json, then writes its results. Exit codes: 0 success,
// 1 validation error, 2 runtime failure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "agridp/data.h"
#include "agridp/eval.h"
#include "agridp/federated.h"
#include "agridp/hash.h"
#include "agridp/ldp.h"
#include "agridp/models.h"
#include "agridp/pca.h"
#include "agridp/pipeline.h"
#include "agridp/rng.h"
#include "agridp/sandbox.h"
#include "json.hpp"

#define AGRIDP_CONCAT_INNER(a, b) a##b
#define AGRIDP_CONCAT(a, b) AGRIDP_CONCAT_INNER(a, b)
#define ASSIGN_OR_RETURN(lhs, expr) \
  ASSIGN_OR_RETURN_IMPL(AGRIDP_CONCAT(status_or_, __LINE__), lhs, expr)
#define ASSIGN_OR_RETURN_IMPL(tmp, lhs, expr) \
  auto tmp = (expr);                          \
  if (!tmp.ok()) return tmp.status();         \
  lhs = *std::move(tmp)
#define RETURN_IF_ERROR(expr)                        \
  do {                                               \
    if (absl::Status st_ = (expr); !st_.ok()) return st_; \
  } while (0)

namespace agridp {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr char kToolVersion[] = "agridp 0.1.0";

int ExitCode(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return 0;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kNotFound:
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kOutOfRange:
    case absl::StatusCode::kAlreadyExists:
      return 1;
    default:
      return 2;
  }
}

void Log(const std::string& command, const std::string& message) {
  std::cerr << "agridp " << command << ": " << message << "\n";
}

absl::Status WriteJson(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  out << j.dump(2) << "\n";
  out.close();
  if (!out) return absl::DataLossError(absl::StrCat("short write to ", path));
  return absl::OkStatus();
}

absl::StatusOr<json> ReadJson(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot read ", path));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": ", e.what()));
  }
}

std::string ManifestPath(const std::string& path) {
  std::string p = path;
  while (p.size() > 1 && p.back() == '/') p.pop_back();
  return p + ".manifest.json";
}

// Files covered by an input argument; directories expand to their regular
// files in name order.
std::vector<std::string> ExpandInput(const std::string& path) {
  if (!fs::is_directory(path)) return {path};
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file()) files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Re-hashes the inputs recorded by every manifest reachable from `roots`.
absl::StatusOr<int> VerifyChain(const std::vector<std::string>& roots) {
  std::vector<std::string> pending = roots;
  std::set<std::string> seen_manifests;
  int verified = 0;
  while (!pending.empty()) {
    const std::string path = pending.back();
    pending.pop_back();
    std::vector<std::string> candidates{ManifestPath(path)};
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) candidates.push_back(ManifestPath(parent.string()));
    for (const auto& manifest_path : candidates) {
      if (!fs::is_regular_file(manifest_path)) continue;
      if (!seen_manifests.insert(manifest_path).second) continue;
      ASSIGN_OR_RETURN(json manifest, ReadJson(manifest_path));
      if (!manifest.contains("input_hashes") || !manifest["input_hashes"].is_object()) {
        return absl::InvalidArgumentError(
            absl::StrCat(manifest_path, ": no input_hashes"));
      }
      for (const auto& [input, hex] : manifest["input_hashes"].items()) {
        auto actual = HashFile(input);
        if (!actual.ok()) {
          return absl::FailedPreconditionError(absl::StrCat(
              manifest_path, ": recorded input ", input, " is unreadable"));
        }
        if (FingerprintToHex(*actual) != hex.get<std::string>()) {
          return absl::FailedPreconditionError(absl::StrCat(
              manifest_path, ": input ", input, " changed since it was recorded"));
        }
        pending.push_back(input);
      }
      ++verified;
    }
  }
  return verified;
}

// State shared by one command run: recorded inputs and seeds, and the
// manifest/--check gate in front of any output.
class Invocation {
 public:
  Invocation(std::string command, const CLI::App* sub, const CLI::App* root,
             bool check, int jobs)
      : command_(std::move(command)), sub_(sub), root_(root), check_(check), jobs_(jobs) {}

  const std::string& command() const { return command_; }
  int jobs() const { return jobs_; }

  absl::Status AddInput(const std::string& path) {
    if (!fs::exists(path)) {
      return absl::NotFoundError(absl::StrCat("input not found: ", path));
    }
    roots_.push_back(path);
    for (const auto& file : ExpandInput(path)) {
      ASSIGN_OR_RETURN(std::uint64_t h, HashFile(file));
      input_hashes_[file] = FingerprintToHex(h);
    }
    return absl::OkStatus();
  }

  void AddSeed(std::uint64_t seed) { seeds_.push_back(seed); }

  // Replaces the recorded value of an option with its resolved value.
  void Resolve(const std::string& name, json value) { resolved_[name] = std::move(value); }

  // In --check mode verifies the provenance chain and returns false. Otherwise
  // writes the manifest next to `out` and returns true.
  absl::StatusOr<bool> Begin(const std::string& out) {
    if (check_) {
      ASSIGN_OR_RETURN(int verified, VerifyChain(roots_));
      Log(command_, absl::StrCat("check passed: inputs consistent, ", verified,
                                 " upstream manifest(s) verified"));
      return false;
    }
    const fs::path parent = fs::path(ManifestPath(out)).parent_path();
    std::error_code ec;
    if (!parent.empty()) fs::create_directories(parent, ec);
    if (ec) return absl::UnavailableError(absl::StrCat("cannot create ", parent.string()));
    RETURN_IF_ERROR(WriteJson(ManifestPath(out), Manifest()));
    return true;
  }

 private:
  json Manifest() const {
    json config = json::object();
    auto capture = [&](const CLI::App* app) {
      for (const CLI::Option* opt : app->get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config" || name == "check") continue;
        if (opt->count() > 0) {
          config[name] = absl::StrJoin(opt->results(), ",");
        } else {
          config[name] = opt->get_default_str();
        }
      }
    };
    capture(root_);
    capture(sub_);
    for (const auto& [name, value] : resolved_) config[name] = value;
    json j;
    j["command"] = command_;
    j["config"] = config;
    j["seeds"] = seeds_;
    j["input_hashes"] = input_hashes_;
    j["tool_version"] = kToolVersion;
    return j;
  }

  std::string command_;
  const CLI::App* sub_;
  const CLI::App* root_;
  bool check_;
  int jobs_;
  std::vector<std::string> roots_;
  std::map<std::string, std::string> input_hashes_;
  std::vector<std::uint64_t> seeds_;
  std::map<std::string, json> resolved_;
};

using Handler = std::function<absl::Status(Invocation&)>;

absl::StatusOr<DataMatrix> LoadDataset(Invocation& inv, const std::string& path,
                                       const std::string& label) {
  RETURN_IF_ERROR(inv.AddInput(path));
  std::optional<std::string> label_name;
  if (!label.empty()) label_name = label;
  return LoadCsvInferSchema(path, label_name);
}

absl::StatusOr<PcaModel> LoadModel(Invocation& inv, const std::string& path) {
  RETURN_IF_ERROR(inv.AddInput(path));
  return LoadPcaModel(path);
}

absl::StatusOr<AggregatedStore> LoadStoreInput(Invocation& inv, const std::string& dir) {
  RETURN_IF_ERROR(inv.AddInput(dir));
  return LoadStore(dir);
}

absl::Status RequireFingerprint(std::uint64_t expected, std::uint64_t actual,
                                const std::string& what) {
  if (expected == actual) return absl::OkStatus();
  return absl::FailedPreconditionError(absl::StrCat(
      what, " was produced by model ", FingerprintToHex(actual), ", expected ",
      FingerprintToHex(expected)));
}

// Cluster models on disk carry the fingerprint of the store they came from.
absl::StatusOr<std::pair<ClusterModel, std::uint64_t>> LoadClusterModel(
    Invocation& inv, const std::string& path) {
  RETURN_IF_ERROR(inv.AddInput(path));
  ASSIGN_OR_RETURN(json j, ReadJson(path));
  if (!j.contains("fingerprint") || !j["fingerprint"].is_string()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": no fingerprint"));
  }
  ASSIGN_OR_RETURN(std::uint64_t fp, FingerprintFromHex(j["fingerprint"].get<std::string>()));
  ASSIGN_OR_RETURN(ClusterModel model, ClusterModelFromJson(j));
  return std::make_pair(std::move(model), fp);
}

// Runs `body` with raw participant data reads banned and fails if any slipped
// through.
absl::Status WithoutRawAccess(const std::function<absl::Status()>& body) {
  ScopedRawAccessBan ban;
  const std::uint64_t before = RawAccessAudit::violations();
  RETURN_IF_ERROR(body());
  if (RawAccessAudit::violations() != before) {
    return absl::InternalError("raw participant data was read inside the sandbox");
  }
  return absl::OkStatus();
}

absl::Status CheckEpsilon(double epsilon) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError("--epsilon must be a positive finite number");
  }
  return absl::OkStatus();
}

absl::Status CheckFpr(double fpr) {
  if (!(fpr > 0 && fpr < 1)) return absl::InvalidArgumentError("--fpr must be in (0, 1)");
  return absl::OkStatus();
}

// ---------------------------------------------------------------------------
// Commands.

struct GenerateOpts {
  std::string dataset = "crop";
  std::size_t rows = 100;
  std::uint64_t seed = 0;
  std::string out;
};

absl::Status RunGenerate(const GenerateOpts& o, Invocation& inv) {
  if (o.dataset != "crop" && o.dataset != "market") {
    return absl::InvalidArgumentError("--dataset must be 'crop' or 'market'");
  }
  if (o.rows == 0) return absl::InvalidArgumentError("--rows must be positive");
  inv.AddSeed(o.seed);
  ASSIGN_OR_RETURN(bool proceed, inv.Begin(o.out));
  if (!proceed) return absl::OkStatus();
  ASSIGN_OR_RETURN(DataMatrix data, o.dataset == "crop"
                                        ? GenerateCropReplica(o.rows, o.seed)
                                        : GenerateSyntheticMarket(o.rows, o.seed));
  RETURN_IF_ERROR(WriteCsv(o.out, data));
  Log(inv.command(), absl::StrCat("wrote ", data.rows(), " rows to ", o.out));
  return absl::OkStatus();
}

struct PartitionOpts {
  std::string input;
  std::string label = "label";
  int markets = 5;
  double global_fraction = 1.0 / 3.0;
  std::uint64_t seed = 0;
  std::string out;
};

absl::Status RunPartition(const PartitionOpts& o, Invocation& inv) {
  ASSIGN_OR_RETURN(DataMatrix data, LoadDataset(inv, o.input, o.label));
  PartitionSpec spec{o.markets, o.global_fraction, o.seed, data.has_labels()};
  inv.AddSeed(o.seed);
  ASSIGN_OR_RETURN(Partition part, PartitionMarkets(data, spec));
  ASSIGN_OR_RETURN(bool proceed, inv.Begin(o.out));
  if (!proceed) return absl::OkStatus();
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) return absl::UnavailableError(absl::StrCat("cannot create ", o.out));
  RETURN_IF_ERROR(WriteCsv((fs::path(o.out) / "global.csv").string(), part.global));
  for (std::size_t i = 0; i < part.markets.size(); ++i) {
    const std::string path =
        (fs::path(o.out) / (MarketId(static_cast<int>(i)) + ".csv")).string();
    RETURN_IF_ERROR(WriteCsv(path, part.markets[i].WithOrigin(DataOrigin::kPublic)));
  }
  Log(inv.command(), absl::StrCat("global ", part.global.rows(), " rows, ",
                                  part.markets.size(), " markets in ", o.out));
  return absl::OkStatus();
}

struct TrainPcaOpts {
  std::string input;
  std::string label = "label";
  int k = 2;
  std::string out;
};

absl::Status RunTrainPca(const TrainPcaOpts& o, Invocation& inv) {
  ASSIGN_OR_RETURN(DataMatrix data, LoadDataset(inv, o.input, o.label));
  ASSIGN_OR_RETURN(PcaModel model, PcaFit(data, o.k));
  ASSIGN_OR_RETURN(bool proceed, inv.Begin(o.out));
  if (!proceed) return absl::OkStatus();
  RETURN_IF_ERROR(SavePcaModel(o.out, model));
  Log(inv.command(), absl::StrCat("model ", FingerprintToHex(model.Fingerprint()),
                                  " (k=", model.k(), ", d=", model.d(), ")"));
  return absl::OkStatus();
}

struct TransformOpts {
  std::string model;
  std::string input;
  std::string label = "label";
  std::string out;
};

absl::Status RunTransform(const TransformOpts& o, Invocation& inv) {
  ASSIGN_OR_RETURN(PcaModel model, LoadModel(inv, o.model));
  ASSIGN_OR_RETURN(DataMatrix raw, LoadDataset(inv, o.input, o.label));
  ASSIGN_OR_RETURN(TransformedMatrix t,
                   PcaTransform(model, raw.WithOrigin(DataOrigin::kParticipantPrivate)));
  ASSIGN_OR_RETURN(bool proceed, inv.Begin(o.out));
  if (!proceed) return absl::OkStatus();
  RETURN_IF_ERROR(WriteTransformedCsv(o.out, t));
  Log(inv.command(), absl::StrCat("projected ", t.rows.rows(), " rows"));
  return absl::OkStatus();
}

struct PrivatizeOpts {
  std::string model;
  std::string input;
  double epsilon = 25.0;
  std::uint64_t seed = 0;
  std::string out;
};

absl::Status RunPrivatize(const PrivatizeOpts& o, Invocation& inv) {
  RETURN_IF_ERROR(CheckEpsilon(o.epsilon));
  ASSIGN_OR_RETURN(PcaModel model, LoadModel(inv, o.model));
  RETURN_IF_ERROR(inv.AddInput(o.input));
  ASSIGN_OR_RETURN(TransformedMatrix t, ReadTransformedCsv(o.input));
  RETURN_IF_ERROR(RequireFingerprint(model.Fingerprint(), t.model_fingerprint, o.input));
  SensitivityVector s{model.sensitivities};
  ASSIGN_OR_RETURN(PrivacyBudget budget, AllocateEpsilon(o.epsilon, s));
  inv.AddSeed(o.seed);
  ASSIGN_OR_RETURN(bool proceed, inv.Begin(o.out));
  if (!proceed) return absl::OkStatus();
  ASSIGN_OR_RETURN(NoisyMatrix noisy, PrivatizeParallel(t, s, budget, o.seed, inv.jobs()));
  RETURN_IF_ERROR(WriteNoisyCsv(o.out, noisy));
  Log(inv.command(), absl::StrCat("privatized ", noisy.rows.rows(), " rows at epsilon ",
                                  FormatDouble(o.epsilon)));
  return absl::OkStatus();
}

struct AggregateOpts {
  std::vector<std::string> shares;
  std::string model;
  std::string out;
};

absl::Status RunAggregate(const AggregateOpts& o, Invocation& inv) {
  std::optional<PcaModel> model;
  if (!o.model.empty()) {
    ASSIGN_OR_RETURN(model, LoadModel(inv, o.model));
  }
  std::optional<AggregatedStore> store;
  RETURN_IF_ERROR(WithoutRawAccess([&]() -> absl::Status {
    for (const auto& arg : o.shares) {
      // "id=path" or a bare path whose file stem is the id.
      std::string id, path;
      if (auto eq = arg.find('='); eq != std::string::npos) {
        id = arg.substr(0, eq);
        path = arg.substr(eq + 1);
      } else {
        path = arg;
        id = fs::path(arg).stem().string();
      }
      RETURN_IF_ERROR(inv.AddInput(path));
      ASSIGN_OR_RETURN(NoisyMatrix share, ReadNoisyCsv(path));
      if (!store) store.emplace(model ? model->Fingerprint() : share.model_fingerprint);
      RETURN_IF_ERROR(store->SubmitShare({id, std::move(share)}));
    }
    return absl::OkStatus();
  }));
  ASSIGN_OR_RETURN(bool proceed, inv.Begin(o.out));
  if (!proceed) return absl::OkStatus();
  RETURN_IF_ERROR(SaveStore(o.out, *store));
  Log(inv.command(), absl::StrCat(store->participant_ids().size(), " shares, ",
                                  store->total_rows(), " rows in ", o.out));
  return absl::OkStatus();
}

struct ClusterOpts {
  std::string store;
  int clusters = 4;
  std::uint64_t seed = 0;
  std::string out;
};

absl::Status RunCluster(const ClusterOpts& o, Invocation& inv) {
  ASSIGN_OR_RETURN(AggregatedStore store, LoadStoreInput(inv, o.store));
  if (o.clusters < 1) return absl::InvalidArgumentError("--clusters must be >= 1");
  inv.AddSeed(o.seed);
  ASSIGN_OR_RETURN(bool proceed, inv.Begin(o.out));
  if (!proceed) return absl::OkStatus();
  ClusterModel model;
  RETURN_IF_ERROR(WithoutRawAccess([&]() -> absl::Status {
    ASSIGN_OR_RETURN(model, KMeansFit(store, o.clusters, o.seed));
    return absl::OkStatus();
  }));
  json j = ClusterModelToJson(model);
  j["fingerprint"] = FingerprintToHex(store.model_fingerprint());
  RETURN_IF_ERROR(WriteJson(o.out, j));
  Log(inv.command(), absl::StrCat("c=", o.clusters, " inertia ", FormatDouble(model.inertia)));
  return absl::OkStatus();
}

struct RecommendOpts {
  std::string store;
  std::string cluster_model;
  std::string model;
  std::vector<double> profile;
  int neighbors = 5;
  std::string out;
};

absl::Status RunRecommend(const RecommendOpts& o, Invocation& inv) {
  ASSIGN_OR_RETURN(PcaModel pca, LoadModel(inv, o.model));
  ASSIGN_OR_RETURN(AggregatedStore store, LoadStoreInput(inv, o.store));
  ASSIGN_OR_RETURN(auto clusters, LoadClusterModel(inv, o.cluster_model));
  RETURN_IF_ERROR(RequireFingerprint(pca.Fingerprint(), store.model_fingerprint(), o.store));
  RETURN_IF_ERROR(RequireFingerprint(pca.Fingerprint(), clusters.second, o.cluster_model));
  if (o.profile.size() != pca.d()) {
    return absl::InvalidArgumentError(absl::StrCat("--profile has ", o.profile.size(),
                                                   " values, the model expects ", pca.d()));
  }
  if (o.neighbors < 1) return absl::InvalidArgumentError("--neighbors must be >= 1");
  ASSIGN_OR_RETURN(TransformedMatrix query,
                   PcaTransform(pca, Matrix::FromRows({o.profile})));
  ASSIGN_OR_RETURN(bool proceed, inv.Begin(o.out));
  if (!proceed) return absl::OkStatus();
  Recommendation rec;
  RETURN_IF_ERROR(WithoutRawAccess([&]() -> absl::Status {
    ASSIGN_OR_RETURN(rec, RecommendCollaborators(store, clusters.first, query.rows.Row(0),
                                                 o.neighbors));
    return absl::OkStatus();
  }));
  RETURN_IF_ERROR(WriteJson(o.out, RecommendationToJson(rec)));
  Log(inv.command(), absl::StrCat("cluster ", rec.query_label, ", ", rec.neighbors.size(),
                                  " neighbours"));
  return absl::OkStatus();
}

struct SimilarityOpts {
  std::string store;
  std::string initiator;
  int m = 3;
  std::string mode = "profile";
  std::string out;
};

absl::Status RunSimilarity(const SimilarityOpts& o, Invocation& inv) {
  ASSIGN_OR_RETURN(SimilarityMode mode, ParseSimilarityMode(o.mode));
  ASSIGN_OR_RETURN(AggregatedStore store, LoadStoreInput(inv, o.store));
  const int others = static_cast<int>(store.participant_ids().size()) - 1;
  if (o.m < 1 || o.m > others) {
    return absl::InvalidArgumentError(
        absl::StrCat("--m must be in [1, ", others, "] for this store"));
  }
  ASSIGN_OR_RETURN(bool proceed, inv.Begin(o.out));
  if (!proceed) return absl::OkStatus();
  std::vector<RankedParticipant> ranking;
  RETURN_IF_ERROR(WithoutRawAccess([&]() -> absl::Status {
    ASSIGN_OR_RETURN(ranking, SelectCollaborators(store, o.initiator, others, mode));
    return absl::OkStatus();
  }));
  json j;
  j["initiator"] = o.initiator;
  j["mode"] = SimilarityModeName(mode);
  j["m"] = o.m;
  j["ranking"] = json::array();
  j["selected"] = json::array();
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    j["ranking"].push_back(
        {{"participant", ranking[i].participant_id}, {"distance", ranking[i].distance}});
    if (static_cast<int>(i) < o.m) j["selected"].push_back(ranking[i].participant_id);
  }
  RETURN_IF_ERROR(WriteJson(o.out, j));
  Log(inv.command(), absl::StrCat("selected ", j["selected"].dump()));
  return absl::OkStatus();
}

struct FedtrainOpts {
  std::string store;
  std::string model;
  std::string data_dir;
  std::string label = "label";
  std::string initiator;
  int m = 3;
  std::string mode = "profile";
  int rounds = 20;
  int local_epochs = 5;
  int hidden = kMlpDefaultHidden;
  double lr = MlpDefaults().learning_rate;
  std::size_t batch_size = MlpDefaults().batch_size;
  std::string weighting = "by-sample-count";
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  std::string out;
};

absl::Status RunFedtrain(const FedtrainOpts& o, Invocation& inv) {
  ASSIGN_OR_RETURN(SimilarityMode mode, ParseSimilarityMode(o.mode));
  ASSIGN_OR_RETURN(Weighting weighting, ParseWeighting(o.weighting));
  ASSIGN_OR_RETURN(PcaModel pca, LoadModel(inv, o.model));
  ASSIGN_OR_RETURN(AggregatedStore store, LoadStoreInput(inv, o.store));
  RETURN_IF_ERROR(RequireFingerprint(pca.Fingerprint(), store.model_fingerprint(), o.store));
  // Client-local data; in a deployment each file stays with its owner.
  std::map<std::string, DataMatrix> raw;
  for (const auto& id : store.participant_ids()) {
    const std::string path = (fs::path(o.data_dir) / (id + ".csv")).string();
    ASSIGN_OR_RETURN(DataMatrix data, LoadDataset(inv, path, o.label));
    raw.emplace(id, data.WithOrigin(DataOrigin::kParticipantPrivate));
  }
  PersonalizedConfig cfg;
  cfg.m = o.m;
  cfg.mode = mode;
  cfg.hidden = o.hidden;
  cfg.test_fraction = o.test_fraction;
  cfg.split_seed = DeriveSeed(o.seed, "split");
  cfg.fed.rounds = o.rounds;
  cfg.fed.local_epochs = o.local_epochs;
  cfg.fed.weighting = weighting;
  cfg.fed.jobs = inv.jobs();
  cfg.fed.train_cfg = MlpDefaults();
  cfg.fed.train_cfg.learning_rate = o.lr;
  cfg.fed.train_cfg.batch_size = o.batch_size;
  cfg.fed.train_cfg.seed = DeriveSeed(o.seed, "fl");
  RETURN_IF_ERROR(ValidateTrainConfig(cfg.fed.train_cfg));
  inv.AddSeed(o.seed);
  ASSIGN_OR_RETURN(bool proceed, inv.Begin(o.out));
  if (!proceed) return absl::OkStatus();
  ASSIGN_OR_RETURN(PersonalizedResult result,
                   PersonalizedTraining(store, pca, o.initiator, raw, cfg));
  json j;
  j["initiator"] = o.initiator;
  j["mode"] = SimilarityModeName(mode);
  j["collaborators"] = json::array();
  for (const auto& c : result.collaborators) {
    j["collaborators"].push_back({{"participant", c.participant_id}, {"distance", c.distance}});
  }
  j["rounds"] = json::array();
  for (const auto& r : result.fed.rounds) {
    j["rounds"].push_back({{"round", r.round},
                           {"per_client_loss", r.per_client_loss},
                           {"global_eval_accuracy", r.global_eval_accuracy}});
  }
  j["accuracy"] = result.accuracy;
  j["majority_baseline"] = result.majority_baseline;
  j["params"] = ModelParamsToJson(result.fed.params);
  RETURN_IF_ERROR(WriteJson(o.out, j));
  Log(inv.command(), absl::StrCat("held-out accuracy ", FormatDouble(result.accuracy),
                                  " (majority ", FormatDouble(result.majority_baseline), ")"));
  return absl::OkStatus();
}

struct EvalPowerOpts {
  std::string share;
  std::string members;
  std::string controls;
  double fpr = 0.05;
  std::size_t n_control = 200;
  std::size_t n_case = 200;
  std::uint64_t seed = 0;
  std::string out;
};

absl::Status RunEvalPower(const EvalPowerOpts& o, Invocation& inv) {
  RETURN_IF_ERROR(CheckFpr(o.fpr));
  RETURN_IF_ERROR(inv.AddInput(o.share));
  RETURN_IF_ERROR(inv.AddInput(o.members));
  RETURN_IF_ERROR(inv.AddInput(o.controls));
  ASSIGN_OR_RETURN(NoisyMatrix shared, ReadNoisyCsv(o.share));
  ASSIGN_OR_RETURN(TransformedMatrix members, ReadTransformedCsv(o.members));
  ASSIGN_OR_RETURN(TransformedMatrix controls, ReadTransformedCsv(o.controls));
  RETURN_IF_ERROR(RequireFingerprint(shared.model_fingerprint, members.model_fingerprint,
                                     o.members));
  RETURN_IF_ERROR(RequireFingerprint(shared.model_fingerprint, controls.model_fingerprint,
                                     o.controls));
  PowerConfig cfg{o.fpr, std::min(o.n_control, controls.rows.rows()),
                  std::min(o.n_case, members.rows.rows()), o.seed};
  inv.Resolve("n-control", cfg.n_control);
  inv.Resolve("n-case", cfg.n_case);
  inv.AddSeed(o.seed);
  ASSIGN_OR_RETURN(bool proceed, inv.Begin(o.out));
  if (!proceed) return absl::OkStatus();
  PowerReport report;
  RETURN_IF_ERROR(WithoutRawAccess([&]() -> absl::Status {
    ASSIGN_OR_RETURN(report, PowerAnalysis(shared, members, controls, cfg));
    return absl::OkStatus();
  }));
  json j{{"epsilon", report.epsilon},
         {"fpr", o.fpr},
         {"threshold", report.threshold},
         {"power", report.power},
         {"n_control", report.n_control},
         {"n_case", report.n_case},
         {"controls_flagged", report.controls_flagged}};
  RETURN_IF_ERROR(WriteJson(o.out, j));
  Log(inv.command(), absl::StrCat("power ", FormatDouble(report.power), " at threshold ",
                                  FormatDouble(report.threshold)));
  return absl::OkStatus();
}

struct EvalUtilityOpts {
  std::string clean;
  std::string share;
  std::string cluster_model;
  int clusters = 2;
  std::string classifier = "logreg";
  std::optional<double> lr;
  std::optional<int> epochs;
  std::optional<double> l2;
  double test_fraction = 0.2;
  bool train_on_noisy = false;
  std::uint64_t seed = 0;
  std::string out;
};

absl::Status RunEvalUtility(const EvalUtilityOpts& o, Invocation& inv) {
  ASSIGN_OR_RETURN(ClassifierKind kind, ParseClassifierKind(o.classifier));
  RETURN_IF_ERROR(inv.AddInput(o.clean));
  RETURN_IF_ERROR(inv.AddInput(o.share));
  ASSIGN_OR_RETURN(TransformedMatrix clean, ReadTransformedCsv(o.clean));
  ASSIGN_OR_RETURN(NoisyMatrix noisy, ReadNoisyCsv(o.share));
  RETURN_IF_ERROR(RequireFingerprint(clean.model_fingerprint, noisy.model_fingerprint, o.share));
  std::optional<ClusterModel> clusters;
  if (!o.cluster_model.empty()) {
    ASSIGN_OR_RETURN(auto loaded, LoadClusterModel(inv, o.cluster_model));
    RETURN_IF_ERROR(RequireFingerprint(clean.model_fingerprint, loaded.second, o.cluster_model));
    clusters = std::move(loaded.first);
  } else if (o.clusters < 2) {
    return absl::InvalidArgumentError("--clusters must be >= 2");
  }
  UtilityConfig cfg;
  cfg.classifier = kind;
  cfg.train = DefaultTrainConfig(kind);
  if (o.lr) cfg.train.learning_rate = *o.lr;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.l2) cfg.train.l2 = *o.l2;
  cfg.train.seed = o.seed;
  cfg.test_fraction = o.test_fraction;
  cfg.split_seed = o.seed;
  cfg.train_on_noisy = o.train_on_noisy;
  if (kind != ClassifierKind::kGnb) RETURN_IF_ERROR(ValidateTrainConfig(cfg.train));
  inv.Resolve("lr", cfg.train.learning_rate);
  inv.Resolve("epochs", cfg.train.epochs);
  inv.Resolve("l2", cfg.train.l2);
  inv.AddSeed(o.seed);
  ASSIGN_OR_RETURN(bool proceed, inv.Begin(o.out));
  if (!proceed) return absl::OkStatus();
  if (!clusters) {
    ASSIGN_OR_RETURN(clusters, KMeansFit(clean.rows, o.clusters, DeriveSeed(o.seed, "kmeans")));
  }
  ASSIGN_OR_RETURN(UtilityReport report, UtilityAccuracy(clean, noisy, *clusters, cfg));
  json j{{"epsilon", report.epsilon},
         {"classifier", ClassifierKindName(report.classifier)},
         {"clusters", clusters->c()},
         {"accuracy_noisy", report.accuracy_noisy},
         {"accuracy_clean", report.accuracy_clean}};
  RETURN_IF_ERROR(WriteJson(o.out, j));
  Log(inv.command(), absl::StrCat(ClassifierKindName(kind), " noisy ",
                                  FormatDouble(report.accuracy_noisy), ", clean ",
                                  FormatDouble(report.accuracy_clean)));
  return absl::OkStatus();
}

struct ExperimentOpts {
  std::string input;
  std::string label = "label";
  int markets = 5;
  double global_fraction = 1.0 / 3.0;
  int k = 2;
  int clusters = 2;
};

void AddExperimentOptions(CLI::App* sub, ExperimentOpts& e) {
  sub->add_option("--input", e.input, "Labelled dataset CSV")->required();
  sub->add_option("--label", e.label, "Label column name");
  sub->add_option("--markets", e.markets, "Number of markets");
  sub->add_option("--global-fraction", e.global_fraction, "Share of rows kept as global data");
  sub->add_option("--k", e.k, "PCA components");
  sub->add_option("--clusters", e.clusters, "K-Means clusters labelling the utility task");
}

struct Table4Opts {
  ExperimentOpts e;
  std::optional<double> epsilon;
  double eps_logreg = 25.0;
  double eps_gnb = 35.0;
  double eps_svm = 35.0;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  std::string out;
};

absl::Status RunTable4(const Table4Opts& o, Invocation& inv) {
  ASSIGN_OR_RETURN(DataMatrix data, LoadDataset(inv, o.e.input, o.e.label));
  Table4Config cfg;
  cfg.pipeline = {o.e.markets, o.e.global_fraction, o.e.k, o.seed};
  cfg.clusters = o.e.clusters;
  cfg.epsilon_logreg = o.epsilon.value_or(o.eps_logreg);
  cfg.epsilon_gnb = o.epsilon.value_or(o.eps_gnb);
  cfg.epsilon_svm = o.epsilon.value_or(o.eps_svm);
  cfg.test_fraction = o.test_fraction;
  cfg.seed = o.seed;
  for (double eps : {cfg.epsilon_logreg, cfg.epsilon_gnb, cfg.epsilon_svm}) {
    RETURN_IF_ERROR(CheckEpsilon(eps));
  }
  inv.Resolve("eps-logreg", cfg.epsilon_logreg);
  inv.Resolve("eps-gnb", cfg.epsilon_gnb);
  inv.Resolve("eps-svm", cfg.epsilon_svm);
  inv.AddSeed(o.seed);
  ASSIGN_OR_RETURN(bool proceed, inv.Begin(o.out));
  if (!proceed) return absl::OkStatus();
  ASSIGN_OR_RETURN(Table4Result result, Table4Experiment(data, cfg));
  RETURN_IF_ERROR(WriteTable4Csv(o.out, result));
  for (const auto& row : result.rows) {
    Log(inv.command(), absl::StrCat(ClassifierKindName(row.classifier), " centralized ",
                                    FormatDouble(row.accuracy_centralized), ", aggregated ",
                                    FormatDouble(row.accuracy_aggregated)));
  }
  Log(inv.command(), absl::StrCat("average gap ", FormatDouble(result.average_gap)));
  return absl::OkStatus();
}

struct SweepOpts {
  ExperimentOpts e;
  std::vector<double> epsilons{10, 15, 20, 25, 30, 35, 40};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string experiment = "both";
  std::string classifier = "logreg";
  double fpr = 0.05;
  std::string out;
};

absl::Status RunSweep(const SweepOpts& o, Invocation& inv) {
  ASSIGN_OR_RETURN(SweepExperiment experiment, ParseSweepExperiment(o.experiment));
  ASSIGN_OR_RETURN(ClassifierKind kind, ParseClassifierKind(o.classifier));
  RETURN_IF_ERROR(CheckFpr(o.fpr));
  for (double eps : o.epsilons) RETURN_IF_ERROR(CheckEpsilon(eps));
  ASSIGN_OR_RETURN(DataMatrix data, LoadDataset(inv, o.e.input, o.e.label));
  SweepConfig cfg;
  cfg.epsilons = o.epsilons;
  cfg.seeds = o.seeds;
  cfg.experiment = experiment;
  cfg.pipeline = {o.e.markets, o.e.global_fraction, o.e.k, 0};
  cfg.power.fpr = o.fpr;
  cfg.clusters = o.e.clusters;
  cfg.classifier = kind;
  cfg.train = DefaultTrainConfig(kind);
  cfg.jobs = inv.jobs();
  for (std::uint64_t s : o.seeds) inv.AddSeed(s);
  ASSIGN_OR_RETURN(bool proceed, inv.Begin(o.out));
  if (!proceed) return absl::OkStatus();
  ASSIGN_OR_RETURN(SweepResult result, SweepEpsilon(data, cfg));
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) return absl::UnavailableError(absl::StrCat("cannot create ", o.out));
  const fs::path dir(o.out);
  if (experiment != SweepExperiment::kUtility) {
    RETURN_IF_ERROR(WritePowerCsv((dir / "power.csv").string(), result.power));
    RETURN_IF_ERROR(
        WriteMedianDat((dir / "power_median.dat").string(), PowerMedians(result.power)));
  }
  if (experiment != SweepExperiment::kPower) {
    RETURN_IF_ERROR(WriteUtilityCsv((dir / "utility.csv").string(), result.utility));
    RETURN_IF_ERROR(
        WriteMedianDat((dir / "utility_median.dat").string(), UtilityMedians(result.utility)));
  }
  Log(inv.command(), absl::StrCat(o.epsilons.size(), " epsilons x ", o.seeds.size(),
                                  " seeds written to ", o.out));
  return absl::OkStatus();
}

// ---------------------------------------------------------------------------

int Main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving agricultural data sandbox", "agridp"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML config file; command-line flags win over it");
  app.require_subcommand(1, 1);
  int jobs = 1;
  bool check = false;
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--check", check,
               "Validate inputs and re-verify fingerprint chains without writing");

  std::vector<std::pair<CLI::App*, Handler>> commands;
  auto add = [&](const std::string& name, const std::string& help, auto opts,
                 auto setup, auto run) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    setup(sub, *opts);
    commands.emplace_back(sub, [opts, run](Invocation& inv) { return run(*opts, inv); });
  };

  add("generate", "Write a synthetic dataset CSV", std::make_shared<GenerateOpts>(),
      [](CLI::App* s, GenerateOpts& o) {
        s->add_option("--dataset", o.dataset, "crop or market");
        s->add_option("--rows", o.rows, "Rows per crop (crop) or total rows (market)");
        s->add_option("--seed", o.seed, "Random seed");
        s->add_option("--out", o.out, "Output CSV")->required();
      },
      RunGenerate);
  add("partition", "Split a dataset into global and market CSVs",
      std::make_shared<PartitionOpts>(),
      [](CLI::App* s, PartitionOpts& o) {
        s->add_option("--input", o.input, "Dataset CSV")->required();
        s->add_option("--label", o.label, "Label column name, empty for none");
        s->add_option("--markets", o.markets, "Number of markets");
        s->add_option("--global-fraction", o.global_fraction, "Share of rows kept global");
        s->add_option("--seed", o.seed, "Random seed");
        s->add_option("--out", o.out, "Output directory")->required();
      },
      RunPartition);
  add("train-pca", "Fit the global PCA model on public data", std::make_shared<TrainPcaOpts>(),
      [](CLI::App* s, TrainPcaOpts& o) {
        s->add_option("--input", o.input, "Public dataset CSV")->required();
        s->add_option("--label", o.label, "Label column name, empty for none");
        s->add_option("--k", o.k, "Number of components");
        s->add_option("--out", o.out, "Model JSON")->required();
      },
      RunTrainPca);
  add("transform", "Project participant data with a PCA model",
      std::make_shared<TransformOpts>(),
      [](CLI::App* s, TransformOpts& o) {
        s->add_option("--model", o.model, "PCA model JSON")->required();
        s->add_option("--input", o.input, "Participant dataset CSV")->required();
        s->add_option("--label", o.label, "Label column name, empty for none");
        s->add_option("--out", o.out, "Transformed CSV")->required();
      },
      RunTransform);
  add("privatize", "Add Laplace noise to a transformed matrix",
      std::make_shared<PrivatizeOpts>(),
      [](CLI::App* s, PrivatizeOpts& o) {
        s->add_option("--model", o.model, "PCA model JSON")->required();
        s->add_option("--input", o.input, "Transformed CSV")->required();
        s->add_option("--epsilon", o.epsilon, "Total privacy budget");
        s->add_option("--seed", o.seed, "Noise seed");
        s->add_option("--out", o.out, "Privatized share CSV")->required();
      },
      RunPrivatize);
  add("aggregate", "Collect privatized shares into a sandbox store",
      std::make_shared<AggregateOpts>(),
      [](CLI::App* s, AggregateOpts& o) {
        s->add_option("--share", o.shares, "Share CSV as path or id=path (repeatable)")
            ->required();
        s->add_option("--model", o.model, "PCA model JSON the shares must match");
        s->add_option("--out", o.out, "Store directory")->required();
      },
      RunAggregate);
  add("cluster", "Fit K-Means on the aggregated shares", std::make_shared<ClusterOpts>(),
      [](CLI::App* s, ClusterOpts& o) {
        s->add_option("--store", o.store, "Store directory")->required();
        s->add_option("--clusters", o.clusters, "Number of clusters");
        s->add_option("--seed", o.seed, "K-Means seed");
        s->add_option("--out", o.out, "Cluster model JSON")->required();
      },
      RunCluster);
  add("recommend", "Recommend collaborators for a farm profile",
      std::make_shared<RecommendOpts>(),
      [](CLI::App* s, RecommendOpts& o) {
        s->add_option("--store", o.store, "Store directory")->required();
        s->add_option("--clusters-model", o.cluster_model, "Cluster model JSON")->required();
        s->add_option("--model", o.model, "PCA model JSON")->required();
        s->add_option("--profile", o.profile, "Raw feature values, comma separated")
            ->required()
            ->delimiter(',');
        s->add_option("--neighbors", o.neighbors, "Neighbours to return");
        s->add_option("--out", o.out, "Recommendation JSON")->required();
      },
      RunRecommend);
  add("similarity", "Rank participants by similarity to an initiator",
      std::make_shared<SimilarityOpts>(),
      [](CLI::App* s, SimilarityOpts& o) {
        s->add_option("--store", o.store, "Store directory")->required();
        s->add_option("--initiator", o.initiator, "Initiating participant id")->required();
        s->add_option("--m", o.m, "Collaborators to select");
        s->add_option("--mode", o.mode, "profile or distribution");
        s->add_option("--out", o.out, "Similarity JSON")->required();
      },
      RunSimilarity);
  add("fedtrain", "Personalized federated training with selected collaborators",
      std::make_shared<FedtrainOpts>(),
      [](CLI::App* s, FedtrainOpts& o) {
        s->add_option("--store", o.store, "Store directory")->required();
        s->add_option("--model", o.model, "PCA model JSON")->required();
        s->add_option("--data-dir", o.data_dir, "Directory of <participant>.csv files")
            ->required();
        s->add_option("--label", o.label, "Label column name");
        s->add_option("--initiator", o.initiator, "Initiating participant id")->required();
        s->add_option("--m", o.m, "Collaborators to select");
        s->add_option("--mode", o.mode, "profile or distribution");
        s->add_option("--rounds", o.rounds, "Federated rounds");
        s->add_option("--local-epochs", o.local_epochs, "Local epochs per round");
        s->add_option("--hidden", o.hidden, "Hidden units");
        s->add_option("--lr", o.lr, "Learning rate");
        s->add_option("--batch-size", o.batch_size, "Mini-batch size, 0 for full batch");
        s->add_option("--weighting", o.weighting, "uniform or by-sample-count");
        s->add_option("--test-fraction", o.test_fraction, "Initiator rows held out");
        s->add_option("--seed", o.seed, "Random seed");
        s->add_option("--out", o.out, "Result JSON")->required();
      },
      RunFedtrain);
  add("eval-power", "Membership-inference power of a privatized share",
      std::make_shared<EvalPowerOpts>(),
      [](CLI::App* s, EvalPowerOpts& o) {
        s->add_option("--share", o.share, "Privatized share CSV")->required();
        s->add_option("--members", o.members, "Transformed rows behind the share")->required();
        s->add_option("--controls", o.controls, "Transformed public rows")->required();
        s->add_option("--fpr", o.fpr, "False-positive rate");
        s->add_option("--n-control", o.n_control, "Control sample size (capped at pool)");
        s->add_option("--n-case", o.n_case, "Case sample size (capped at pool)");
        s->add_option("--seed", o.seed, "Sampling seed");
        s->add_option("--out", o.out, "Report JSON")->required();
      },
      RunEvalPower);
  add("eval-utility", "Cluster-label accuracy on a privatized share",
      std::make_shared<EvalUtilityOpts>(),
      [](CLI::App* s, EvalUtilityOpts& o) {
        s->add_option("--clean", o.clean, "Transformed rows behind the share")->required();
        s->add_option("--share", o.share, "Privatized share CSV")->required();
        s->add_option("--clusters-model", o.cluster_model, "Cluster model JSON");
        s->add_option("--clusters", o.clusters, "Clusters fitted on clean rows if no model");
        s->add_option("--classifier", o.classifier, "logreg, gnb or svm");
        s->add_option("--lr", o.lr, "Learning rate (default per classifier)");
        s->add_option("--epochs", o.epochs, "Epochs (default per classifier)");
        s->add_option("--l2", o.l2, "L2 penalty (default per classifier)");
        s->add_option("--test-fraction", o.test_fraction, "Held-out fraction");
        s->add_flag("--train-on-noisy", o.train_on_noisy, "Train on noisy rows");
        s->add_option("--seed", o.seed, "Split and training seed");
        s->add_option("--out", o.out, "Report JSON")->required();
      },
      RunEvalUtility);
  add("table4", "Centralized vs privacy-protected classifier accuracy",
      std::make_shared<Table4Opts>(),
      [](CLI::App* s, Table4Opts& o) {
        AddExperimentOptions(s, o.e);
        s->add_option("--epsilon", o.epsilon, "Use one epsilon for all classifiers");
        s->add_option("--eps-logreg", o.eps_logreg, "Epsilon for logistic regression");
        s->add_option("--eps-gnb", o.eps_gnb, "Epsilon for Gaussian naive Bayes");
        s->add_option("--eps-svm", o.eps_svm, "Epsilon for the linear SVM");
        s->add_option("--test-fraction", o.test_fraction, "Held-out fraction");
        s->add_option("--seed", o.seed, "Random seed");
        s->add_option("--out", o.out, "Result CSV")->required();
      },
      RunTable4);
  add("sweep", "Power and utility over a grid of epsilons and seeds",
      std::make_shared<SweepOpts>(),
      [](CLI::App* s, SweepOpts& o) {
        AddExperimentOptions(s, o.e);
        s->add_option("--epsilons", o.epsilons, "Epsilon grid")->delimiter(',');
        s->add_option("--seeds", o.seeds, "Seeds")->delimiter(',');
        s->add_option("--experiment", o.experiment, "power, utility or both");
        s->add_option("--classifier", o.classifier, "logreg, gnb or svm");
        s->add_option("--fpr", o.fpr, "False-positive rate");
        s->add_option("--out", o.out, "Output directory")->required();
      },
      RunSweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  for (auto& [sub, handler] : commands) {
    if (!sub->parsed()) continue;
    Invocation inv(sub->get_name(), sub, &app, check, jobs);
    absl::Status status;
    try {
      status = handler(inv);
    } catch (const std::exception& e) {
      status = absl::InternalError(e.what());
    }
    if (!status.ok()) {
      std::cerr << "agridp " << sub->get_name() << ": error: " << status.message() << "\n";
    }
    return ExitCode(status);
  }
  return 1;
}

}  // namespace
}  // namespace agridp

int main(int argc, char** argv) { return agridp::Main(argc, argv); }
