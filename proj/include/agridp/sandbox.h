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

// The sandbox: holds privatized shares only, clusters them, and answers
// collaborator queries.

#ifndef AGRIDP_SANDBOX_H_
#define AGRIDP_SANDBOX_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "agridp/ldp.h"
#include "agridp/matrix.h"
#include "json.hpp"

namespace agridp {

struct ParticipantShare {
  std::string participant_id;
  NoisyMatrix matrix;
};

struct RowRef {
  std::string participant;
  std::size_t row = 0;
};

// Single-writer: SubmitShare calls must be serialized by the caller. Const
// queries are safe to run concurrently once aggregation is complete.
class AggregatedStore {
 public:
  explicit AggregatedStore(std::uint64_t model_fingerprint)
      : fingerprint_(model_fingerprint) {}

  // Rejects empty or duplicate ids and shares produced under another model.
  // On error the store is unchanged.
  absl::Status SubmitShare(ParticipantShare share);

  std::uint64_t model_fingerprint() const { return fingerprint_; }
  // Participant ids in submission order.
  const std::vector<std::string>& participant_ids() const { return ids_; }
  std::size_t participant_count() const { return ids_.size(); }
  std::size_t total_rows() const { return rows_.rows(); }
  std::size_t dimension() const { return rows_.cols(); }

  // nullptr if unknown.
  const NoisyMatrix* share(const std::string& id) const;

  // All rows stacked in submission order, with per-row provenance.
  const Matrix& aggregated() const { return rows_; }
  const std::vector<RowRef>& provenance() const { return provenance_; }

 private:
  std::uint64_t fingerprint_;
  std::vector<std::string> ids_;
  std::map<std::string, NoisyMatrix> shares_;
  Matrix rows_;
  std::vector<RowRef> provenance_;
};

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 300;
};

struct ClusterModel {
  Matrix centroids;  // c x k
  double inertia = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  // Inertia after every assignment step of the winning restart.
  std::vector<double> inertia_trace;

  std::size_t c() const { return centroids.rows(); }
};

// Lloyd's algorithm from k-means++ seeding, run to an assignment fixpoint
// (or the iteration cap), best of `restarts` by inertia. Restart r seeds
// from DeriveSeed(seed, r).
absl::StatusOr<ClusterModel> KMeansFit(const Matrix& points, int c,
                                       std::uint64_t seed,
                                       const KMeansOptions& options = {});
absl::StatusOr<ClusterModel> KMeansFit(const AggregatedStore& store, int c,
                                       std::uint64_t seed,
                                       const KMeansOptions& options = {});

// Nearest centroid; ties go to the lower index.
absl::StatusOr<int> KMeansAssign(const ClusterModel& model,
                                 std::span<const double> point);
int NearestCentroid(const Matrix& centroids, std::span<const double> point);

struct Neighbor {
  RowRef ref;
  double distance = 0.0;
};

struct Recommendation {
  int query_label = 0;
  std::vector<Neighbor> neighbors;  // ascending distance
};

// Labels `profile`, then returns up to m aggregated rows with the same label
// ordered by distance (ties keep aggregation order).
absl::StatusOr<Recommendation> RecommendCollaborators(
    const AggregatedStore& store, const ClusterModel& model,
    std::span<const double> profile, int m);

// Distance between the participants' mean rows.
absl::StatusOr<double> MarketSimilarityProfile(const AggregatedStore& store,
                                               const std::string& a,
                                               const std::string& b);

// Sum over components of the 2-Wasserstein distance between per-component
// Gaussian fits: sqrt((mu_a - mu_b)^2 + (sigma_a - sigma_b)^2). Sigma is the
// maximum-likelihood (1/n) standard deviation.
absl::StatusOr<double> MarketSimilarityDistribution(
    const AggregatedStore& store, const std::string& a, const std::string& b);

enum class SimilarityMode { kProfile, kDistribution };

absl::StatusOr<SimilarityMode> ParseSimilarityMode(const std::string& text);
std::string SimilarityModeName(SimilarityMode mode);

absl::StatusOr<double> MarketSimilarity(const AggregatedStore& store,
                                        const std::string& a,
                                        const std::string& b,
                                        SimilarityMode mode);

struct RankedParticipant {
  std::string participant_id;
  double distance = 0.0;
};

// The m participants closest to `initiator`, ascending distance, ties by id.
absl::StatusOr<std::vector<RankedParticipant>> SelectCollaborators(
    const AggregatedStore& store, const std::string& initiator, int m,
    SimilarityMode mode);

nlohmann::json ClusterModelToJson(const ClusterModel& model);
absl::StatusOr<ClusterModel> ClusterModelFromJson(const nlohmann::json& j);

nlohmann::json RecommendationToJson(const Recommendation& rec);

// Directory layout: manifest.json {fingerprint, participant_ids, row_counts,
// files} plus one share CSV per participant.
absl::Status SaveStore(const std::string& dir, const AggregatedStore& store);
absl::StatusOr<AggregatedStore> LoadStore(const std::string& dir);

}  // namespace agridp

#endif  // AGRIDP_SANDBOX_H_
