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

#include "agridp/sandbox.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "absl/strings/str_cat.h"
#include "agridp/hash.h"
#include "agridp/rng.h"

namespace agridp {

absl::Status AggregatedStore::SubmitShare(ParticipantShare share) {
  if (share.participant_id.empty()) {
    return absl::InvalidArgumentError("participant id must be non-empty");
  }
  if (shares_.contains(share.participant_id)) {
    return absl::AlreadyExistsError(
        absl::StrCat("participant '", share.participant_id,
                     "' already submitted a share"));
  }
  if (share.matrix.model_fingerprint != fingerprint_) {
    return absl::FailedPreconditionError(absl::StrCat(
        "share from '", share.participant_id, "' was made with model ",
        FingerprintToHex(share.matrix.model_fingerprint), ", sandbox expects ",
        FingerprintToHex(fingerprint_)));
  }
  if (total_rows() > 0 && share.matrix.rows.cols() != dimension()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "share has ", share.matrix.rows.cols(), " components, store has ",
        dimension()));
  }
  for (std::size_t r = 0; r < share.matrix.rows.rows(); ++r) {
    rows_.AppendRow(share.matrix.rows.Row(r));
    provenance_.push_back({share.participant_id, r});
  }
  ids_.push_back(share.participant_id);
  shares_.emplace(share.participant_id, std::move(share.matrix));
  return absl::OkStatus();
}

const NoisyMatrix* AggregatedStore::share(const std::string& id) const {
  auto it = shares_.find(id);
  return it == shares_.end() ? nullptr : &it->second;
}

int NearestCentroid(const Matrix& centroids, std::span<const double> point) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = SquaredDistance(centroids.Row(c), point);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

namespace {

Matrix PlusPlusSeeding(const Matrix& points, int c, Rng& rng) {
  const std::size_t n = points.rows();
  Matrix centroids(0, points.cols());
  centroids.AppendRow(points.Row(rng.UniformInt(n)));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centroids.rows() < static_cast<std::size_t>(c)) {
    auto last = centroids.Row(centroids.rows() - 1);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], SquaredDistance(points.Row(i), last));
      total += d2[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = rng.Uniform01() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.UniformInt(n);
    }
    centroids.AppendRow(points.Row(pick));
  }
  return centroids;
}

double AssignAll(const Matrix& points, const Matrix& centroids,
                 std::vector<int>& labels) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    labels[i] = NearestCentroid(centroids, points.Row(i));
    inertia += SquaredDistance(points.Row(i), centroids.Row(labels[i]));
  }
  return inertia;
}

// Empty clusters keep their previous centroid.
void UpdateCentroids(const Matrix& points, const std::vector<int>& labels,
                     Matrix& centroids) {
  Matrix sums(centroids.rows(), centroids.cols());
  std::vector<std::size_t> counts(centroids.rows(), 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    ++counts[labels[i]];
    auto dst = sums.Row(labels[i]);
    auto src = points.Row(i);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
  }
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < centroids.cols(); ++j) {
      centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
  }
}

ClusterModel LloydRun(const Matrix& points, int c, std::uint64_t seed,
                      int max_iterations) {
  Rng rng(seed);
  ClusterModel run;
  run.centroids = PlusPlusSeeding(points, c, rng);
  std::vector<int> labels(points.rows()), next(points.rows());
  run.inertia = AssignAll(points, run.centroids, labels);
  run.inertia_trace.push_back(run.inertia);
  for (int it = 0; it < max_iterations; ++it) {
    UpdateCentroids(points, labels, run.centroids);
    run.inertia = AssignAll(points, run.centroids, next);
    run.inertia_trace.push_back(run.inertia);
    run.iterations = it + 1;
    if (next == labels) break;
    labels.swap(next);
  }
  return run;
}

}  // namespace

absl::StatusOr<ClusterModel> KMeansFit(const Matrix& points, int c,
                                       std::uint64_t seed,
                                       const KMeansOptions& options) {
  if (c < 1) return absl::InvalidArgumentError("cluster count must be >= 1");
  if (points.rows() < static_cast<std::size_t>(c)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "too few rows: ", points.rows(), " rows for ", c, " clusters"));
  }
  if (options.restarts < 1 || options.max_iterations < 1) {
    return absl::InvalidArgumentError("restarts and iterations must be >= 1");
  }
  ClusterModel best;
  for (int r = 0; r < options.restarts; ++r) {
    ClusterModel run =
        LloydRun(points, c, DeriveSeed(seed, r), options.max_iterations);
    if (r == 0 || run.inertia < best.inertia) best = std::move(run);
  }
  best.seed = seed;
  return best;
}

absl::StatusOr<ClusterModel> KMeansFit(const AggregatedStore& store, int c,
                                       std::uint64_t seed,
                                       const KMeansOptions& options) {
  return KMeansFit(store.aggregated(), c, seed, options);
}

absl::StatusOr<int> KMeansAssign(const ClusterModel& model,
                                 std::span<const double> point) {
  if (point.size() != model.centroids.cols()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "point has ", point.size(), " coordinates, model expects ",
        model.centroids.cols()));
  }
  return NearestCentroid(model.centroids, point);
}

absl::StatusOr<Recommendation> RecommendCollaborators(
    const AggregatedStore& store, const ClusterModel& model,
    std::span<const double> profile, int m) {
  if (store.total_rows() == 0) return absl::FailedPreconditionError("empty store");
  if (m < 1) return absl::InvalidArgumentError("m must be >= 1");
  auto label = KMeansAssign(model, profile);
  if (!label.ok()) return label.status();
  Recommendation rec;
  rec.query_label = *label;
  const Matrix& rows = store.aggregated();
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    if (NearestCentroid(model.centroids, rows.Row(i)) != *label) continue;
    rec.neighbors.push_back(
        {store.provenance()[i], EuclideanDistance(rows.Row(i), profile)});
  }
  std::stable_sort(rec.neighbors.begin(), rec.neighbors.end(),
                   [](const Neighbor& a, const Neighbor& b) {
                     return a.distance < b.distance;
                   });
  if (rec.neighbors.size() > static_cast<std::size_t>(m)) rec.neighbors.resize(m);
  return rec;
}

namespace {

absl::StatusOr<const NoisyMatrix*> Lookup(const AggregatedStore& store,
                                          const std::string& id) {
  const NoisyMatrix* share = store.share(id);
  if (share == nullptr) {
    return absl::NotFoundError(absl::StrCat("unknown participant '", id, "'"));
  }
  return share;
}

struct ColumnGaussian {
  std::vector<double> mean, sd;
};

ColumnGaussian FitColumns(const Matrix& rows) {
  ColumnGaussian g;
  g.mean = rows.ColumnMeans();
  g.sd.assign(rows.cols(), 0.0);
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    for (std::size_t c = 0; c < rows.cols(); ++c) {
      const double d = rows(r, c) - g.mean[c];
      g.sd[c] += d * d;
    }
  }
  for (double& s : g.sd) s = std::sqrt(s / static_cast<double>(rows.rows()));
  return g;
}

}  // namespace

absl::StatusOr<double> MarketSimilarityProfile(const AggregatedStore& store,
                                               const std::string& a,
                                               const std::string& b) {
  auto sa = Lookup(store, a);
  if (!sa.ok()) return sa.status();
  auto sb = Lookup(store, b);
  if (!sb.ok()) return sb.status();
  if ((*sa)->rows.rows() == 0 || (*sb)->rows.rows() == 0) {
    return absl::FailedPreconditionError("participant has no rows");
  }
  return EuclideanDistance((*sa)->rows.ColumnMeans(), (*sb)->rows.ColumnMeans());
}

absl::StatusOr<double> MarketSimilarityDistribution(
    const AggregatedStore& store, const std::string& a, const std::string& b) {
  auto sa = Lookup(store, a);
  if (!sa.ok()) return sa.status();
  auto sb = Lookup(store, b);
  if (!sb.ok()) return sb.status();
  for (const auto* s : {*sa, *sb}) {
    if (s->rows.rows() < 2) {
      return absl::FailedPreconditionError(
          "distribution similarity needs at least 2 rows per participant");
    }
  }
  const ColumnGaussian ga = FitColumns((*sa)->rows);
  const ColumnGaussian gb = FitColumns((*sb)->rows);
  double total = 0.0;
  for (std::size_t c = 0; c < ga.mean.size(); ++c) {
    total += std::hypot(ga.mean[c] - gb.mean[c], ga.sd[c] - gb.sd[c]);
  }
  return total;
}

absl::StatusOr<SimilarityMode> ParseSimilarityMode(const std::string& text) {
  if (text == "profile") return SimilarityMode::kProfile;
  if (text == "distribution") return SimilarityMode::kDistribution;
  return absl::InvalidArgumentError(
      absl::StrCat("mode must be 'profile' or 'distribution', got '", text, "'"));
}

std::string SimilarityModeName(SimilarityMode mode) {
  return mode == SimilarityMode::kProfile ? "profile" : "distribution";
}

absl::StatusOr<double> MarketSimilarity(const AggregatedStore& store,
                                        const std::string& a,
                                        const std::string& b,
                                        SimilarityMode mode) {
  return mode == SimilarityMode::kProfile
             ? MarketSimilarityProfile(store, a, b)
             : MarketSimilarityDistribution(store, a, b);
}

absl::StatusOr<std::vector<RankedParticipant>> SelectCollaborators(
    const AggregatedStore& store, const std::string& initiator, int m,
    SimilarityMode mode) {
  if (store.share(initiator) == nullptr) {
    return absl::NotFoundError(
        absl::StrCat("unknown initiator '", initiator, "'"));
  }
  if (m < 1 || store.participant_count() < static_cast<std::size_t>(m) + 1) {
    return absl::FailedPreconditionError(absl::StrCat(
        "need at least ", m + 1, " participants, store has ",
        store.participant_count()));
  }
  std::vector<RankedParticipant> ranked;
  for (const auto& id : store.participant_ids()) {
    if (id == initiator) continue;
    auto d = MarketSimilarity(store, initiator, id, mode);
    if (!d.ok()) return d.status();
    ranked.push_back({id, *d});
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const RankedParticipant& a, const RankedParticipant& b) {
              if (a.distance != b.distance) return a.distance < b.distance;
              return a.participant_id < b.participant_id;
            });
  ranked.resize(m);
  return ranked;
}

nlohmann::json ClusterModelToJson(const ClusterModel& model) {
  nlohmann::json centroids = nlohmann::json::array();
  for (std::size_t c = 0; c < model.c(); ++c) {
    auto row = model.centroids.Row(c);
    centroids.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"version", 1},
          {"c", model.c()},
          {"k", model.centroids.cols()},
          {"centroids", centroids},
          {"inertia", model.inertia},
          {"iterations", model.iterations},
          {"seed", model.seed}};
}

absl::StatusOr<ClusterModel> ClusterModelFromJson(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1) {
      return absl::InvalidArgumentError("unsupported cluster model version");
    }
    ClusterModel model;
    const auto rows = j.at("centroids").get<std::vector<std::vector<double>>>();
    if (rows.empty() || rows.size() != j.at("c").get<std::size_t>()) {
      return absl::InvalidArgumentError("centroid count does not match c");
    }
    for (const auto& row : rows) {
      if (row.size() != j.at("k").get<std::size_t>()) {
        return absl::InvalidArgumentError("centroid has wrong dimension");
      }
    }
    model.centroids = Matrix::FromRows(rows);
    model.inertia = j.at("inertia").get<double>();
    model.iterations = j.at("iterations").get<int>();
    model.seed = j.at("seed").get<std::uint64_t>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad cluster model JSON: ", e.what()));
  }
}

nlohmann::json RecommendationToJson(const Recommendation& rec) {
  nlohmann::json neighbors = nlohmann::json::array();
  for (const auto& n : rec.neighbors) {
    neighbors.push_back({{"participant", n.ref.participant},
                         {"row", n.ref.row},
                         {"distance", n.distance}});
  }
  return {{"query_label", rec.query_label}, {"neighbors", neighbors}};
}

absl::Status SaveStore(const std::string& dir, const AggregatedStore& store) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return absl::InternalError(absl::StrCat("cannot create ", dir));
  nlohmann::json manifest;
  manifest["fingerprint"] = FingerprintToHex(store.model_fingerprint());
  manifest["participant_ids"] = store.participant_ids();
  std::vector<std::size_t> counts;
  std::vector<std::string> files;
  for (std::size_t i = 0; i < store.participant_ids().size(); ++i) {
    const auto& id = store.participant_ids()[i];
    const NoisyMatrix* share = store.share(id);
    counts.push_back(share->rows.rows());
    files.push_back(absl::StrCat("share_", i, ".csv"));
    if (auto st = WriteNoisyCsv(dir + "/" + files.back(), *share); !st.ok()) {
      return st;
    }
  }
  manifest["row_counts"] = counts;
  manifest["files"] = files;
  std::ofstream out(dir + "/manifest.json", std::ios::binary);
  out << manifest.dump(2) << "\n";
  return out ? absl::OkStatus()
             : absl::InternalError("cannot write store manifest");
}

absl::StatusOr<AggregatedStore> LoadStore(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) return absl::NotFoundError(absl::StrCat("no store manifest in ", dir));
  auto manifest = nlohmann::json::parse(in, nullptr, false);
  if (manifest.is_discarded()) {
    return absl::InvalidArgumentError("store manifest is not valid JSON");
  }
  try {
    auto fp = FingerprintFromHex(manifest.at("fingerprint").get<std::string>());
    if (!fp.ok()) return fp.status();
    AggregatedStore store(*fp);
    const auto ids = manifest.at("participant_ids").get<std::vector<std::string>>();
    const auto files = manifest.at("files").get<std::vector<std::string>>();
    const auto counts = manifest.at("row_counts").get<std::vector<std::size_t>>();
    if (ids.size() != files.size() || ids.size() != counts.size()) {
      return absl::InvalidArgumentError("store manifest lists are inconsistent");
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto share = ReadNoisyCsv(dir + "/" + files[i]);
      if (!share.ok()) return share.status();
      if (share->rows.rows() != counts[i]) {
        return absl::DataLossError(absl::StrCat(
            "share of '", ids[i], "' has ", share->rows.rows(),
            " rows, manifest says ", counts[i]));
      }
      if (auto st = store.SubmitShare({ids[i], *std::move(share)}); !st.ok()) {
        return st;
      }
    }
    return store;
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad store manifest: ", e.what()));
  }
}

}  // namespace agridp
