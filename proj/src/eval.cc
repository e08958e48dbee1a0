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

#include "agridp/eval.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "absl/strings/str_cat.h"
#include "agridp/hash.h"
#include "agridp/rng.h"

namespace agridp {

std::vector<double> MinDistances(const Matrix& queries, const Matrix& reference) {
  std::vector<double> out(queries.rows(), std::numeric_limits<double>::infinity());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < reference.rows(); ++r) {
      best = std::min(best, SquaredDistance(queries.Row(q), reference.Row(r)));
    }
    out[q] = std::sqrt(best);
  }
  return out;
}

namespace {

Matrix SampleRows(const Matrix& pool, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(pool.rows());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.Shuffle(std::span<std::size_t>(order));
  order.resize(n);
  return pool.SelectRows(order);
}

absl::Status SameModel(std::uint64_t a, std::uint64_t b, const char* what) {
  if (a == b) return absl::OkStatus();
  return absl::FailedPreconditionError(absl::StrCat(
      what, " was produced with model ", FingerprintToHex(a), ", expected ",
      FingerprintToHex(b)));
}

}  // namespace

absl::StatusOr<PowerReport> PowerAnalysis(const NoisyMatrix& shared,
                                          const TransformedMatrix& case_pool,
                                          const TransformedMatrix& control_pool,
                                          const PowerConfig& cfg) {
  if (!(cfg.fpr > 0 && cfg.fpr < 1)) {
    return absl::InvalidArgumentError("fpr must be in (0, 1)");
  }
  if (cfg.n_control == 0 || cfg.n_case == 0) {
    return absl::InvalidArgumentError("sample counts must be positive");
  }
  if (shared.rows.rows() == 0 || case_pool.rows.rows() == 0 ||
      control_pool.rows.rows() == 0) {
    return absl::InvalidArgumentError("empty shared matrix or pool");
  }
  const std::size_t k = shared.rows.cols();
  if (case_pool.rows.cols() != k || control_pool.rows.cols() != k) {
    return absl::InvalidArgumentError("pools and shared matrix differ in dimension");
  }
  if (auto st = SameModel(case_pool.model_fingerprint, shared.model_fingerprint, "case pool");
      !st.ok()) {
    return st;
  }
  if (auto st = SameModel(control_pool.model_fingerprint, shared.model_fingerprint,
                          "control pool");
      !st.ok()) {
    return st;
  }
  if (case_pool.rows.rows() < cfg.n_case || control_pool.rows.rows() < cfg.n_control) {
    return absl::InvalidArgumentError(absl::StrCat(
        "pools too small: need ", cfg.n_case, " case and ", cfg.n_control,
        " control rows, have ", case_pool.rows.rows(), " and ",
        control_pool.rows.rows()));
  }
  const Matrix controls =
      SampleRows(control_pool.rows, cfg.n_control, DeriveSeed(cfg.seed, "control"));
  const Matrix cases = SampleRows(case_pool.rows, cfg.n_case, DeriveSeed(cfg.seed, "case"));
  std::vector<double> control_d = MinDistances(controls, shared.rows);
  const std::vector<double> case_d = MinDistances(cases, shared.rows);
  std::sort(control_d.begin(), control_d.end());
  // The small slack keeps 0.05 * 200 from rounding up to 11.
  const std::size_t rank = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(cfg.fpr * cfg.n_control - 1e-9)), 1,
      cfg.n_control);
  PowerReport report;
  report.epsilon = shared.epsilon;
  report.threshold = control_d[rank - 1];
  report.n_control = cfg.n_control;
  report.n_case = cfg.n_case;
  report.controls_flagged = static_cast<std::size_t>(
      std::upper_bound(control_d.begin(), control_d.end(), report.threshold) -
      control_d.begin());
  const auto hits = std::count_if(case_d.begin(), case_d.end(),
                                  [&](double d) { return d <= report.threshold; });
  report.power = static_cast<double>(hits) / static_cast<double>(cfg.n_case);
  return report;
}

TrainConfig DefaultTrainConfig(ClassifierKind kind) {
  return kind == ClassifierKind::kSvm ? SvmDefaults() : LogRegDefaults();
}

absl::StatusOr<UtilityReport> UtilityAccuracy(const TransformedMatrix& clean,
                                              const NoisyMatrix& noisy,
                                              const ClusterModel& cluster_model,
                                              const UtilityConfig& cfg) {
  if (clean.rows.rows() != noisy.rows.rows() || clean.rows.cols() != noisy.rows.cols()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "clean (", clean.rows.rows(), "x", clean.rows.cols(), ") and noisy (",
        noisy.rows.rows(), "x", noisy.rows.cols(), ") rows are not aligned"));
  }
  if (auto st = SameModel(noisy.model_fingerprint, clean.model_fingerprint, "noisy matrix");
      !st.ok()) {
    return st;
  }
  if (cluster_model.centroids.cols() != clean.rows.cols()) {
    return absl::InvalidArgumentError("cluster model dimension does not match");
  }
  std::vector<int> labels(clean.rows.rows());
  std::set<int> distinct;
  for (std::size_t r = 0; r < clean.rows.rows(); ++r) {
    labels[r] = NearestCentroid(cluster_model.centroids, clean.rows.Row(r));
    distinct.insert(labels[r]);
  }
  if (distinct.size() < 2) {
    return absl::FailedPreconditionError("all records fall in a single cluster");
  }
  const int c = static_cast<int>(cluster_model.c());
  auto clean_data = MakeLabeled(clean.rows, labels, c);
  if (!clean_data.ok()) return clean_data.status();
  auto noisy_data = MakeLabeled(noisy.rows, labels, c);
  if (!noisy_data.ok()) return noisy_data.status();
  auto split = StratifiedSplit(labels, cfg.test_fraction, cfg.split_seed);
  if (!split.ok()) return split.status();
  const LabeledData& source = cfg.train_on_noisy ? *noisy_data : *clean_data;
  auto model = TrainClassifier(cfg.classifier, source.SelectRows(split->train), cfg.train);
  if (!model.ok()) return model.status();
  UtilityReport report;
  report.epsilon = noisy.epsilon;
  report.classifier = cfg.classifier;
  auto acc_noisy = Accuracy(*model, noisy_data->SelectRows(split->test));
  if (!acc_noisy.ok()) return acc_noisy.status();
  auto acc_clean = Accuracy(*model, clean_data->SelectRows(split->test));
  if (!acc_clean.ok()) return acc_clean.status();
  report.accuracy_noisy = *acc_noisy;
  report.accuracy_clean = *acc_clean;
  return report;
}

namespace {

// Stacks the markets' clean and noisy rows in market order.
struct Pooled {
  TransformedMatrix clean;
  NoisyMatrix noisy;
};

Pooled Pool(const PipelineBase& base, const PrivatizedPipeline& shares) {
  Pooled p;
  p.clean.model_fingerprint = base.model.Fingerprint();
  p.noisy.model_fingerprint = base.model.Fingerprint();
  p.clean.rows = Matrix(0, base.model.k());
  p.noisy.rows = Matrix(0, base.model.k());
  for (std::size_t i = 0; i < base.transformed.size(); ++i) {
    for (std::size_t r = 0; r < base.transformed[i].rows.rows(); ++r) {
      p.clean.rows.AppendRow(base.transformed[i].rows.Row(r));
      p.noisy.rows.AppendRow(shares.noisy[i].rows.Row(r));
    }
    p.noisy.epsilon = shares.noisy[i].epsilon;
  }
  return p;
}

}  // namespace

absl::StatusOr<Table4Result> Table4Experiment(const DataMatrix& data,
                                              const Table4Config& cfg) {
  if (!data.has_labels()) return absl::InvalidArgumentError("dataset has no labels");
  PipelineConfig pc = cfg.pipeline;
  pc.seed = cfg.seed;
  auto base = BuildPipelineBase(data, pc);
  if (!base.ok()) return base.status();

  auto all = EncodeLabels(data);
  if (!all.ok()) return all.status();
  auto split = StratifiedSplit(all->y, cfg.test_fraction, DeriveSeed(cfg.seed, "central"));
  if (!split.ok()) return split.status();
  const LabeledData train = all->SelectRows(split->train);
  const LabeledData test = all->SelectRows(split->test);

  Matrix clean_pool(0, base->model.k());
  for (const auto& t : base->transformed) {
    for (std::size_t r = 0; r < t.rows.rows(); ++r) clean_pool.AppendRow(t.rows.Row(r));
  }
  auto clusters = KMeansFit(clean_pool, cfg.clusters, DeriveSeed(cfg.seed, "kmeans"));
  if (!clusters.ok()) return clusters.status();

  Table4Result result;
  const std::pair<ClassifierKind, double> arms[] = {
      {ClassifierKind::kLogReg, cfg.epsilon_logreg},
      {ClassifierKind::kGnb, cfg.epsilon_gnb},
      {ClassifierKind::kSvm, cfg.epsilon_svm}};
  double gap = 0.0;
  for (const auto& [kind, eps] : arms) {
    const TrainConfig train_cfg = kind == ClassifierKind::kSvm ? cfg.svm : cfg.logreg;
    auto central = TrainClassifier(kind, train, train_cfg);
    if (!central.ok()) return central.status();
    auto acc_central = Accuracy(*central, test);
    if (!acc_central.ok()) return acc_central.status();

    auto shares = PrivatizeMarkets(*base, eps, DeriveSeed(cfg.seed, "noise"));
    if (!shares.ok()) return shares.status();
    const Pooled pooled = Pool(*base, *shares);
    UtilityConfig uc{kind, train_cfg, cfg.test_fraction, DeriveSeed(cfg.seed, "utility"), false};
    auto utility = UtilityAccuracy(pooled.clean, pooled.noisy, *clusters, uc);
    if (!utility.ok()) return utility.status();

    result.rows.push_back({kind, eps, *acc_central, utility->accuracy_noisy});
    gap += *acc_central - utility->accuracy_noisy;
  }
  result.average_gap = gap / static_cast<double>(result.rows.size());
  return result;
}

absl::StatusOr<SweepExperiment> ParseSweepExperiment(const std::string& text) {
  if (text == "power") return SweepExperiment::kPower;
  if (text == "utility") return SweepExperiment::kUtility;
  if (text == "both") return SweepExperiment::kBoth;
  return absl::InvalidArgumentError(
      absl::StrCat("experiment must be power, utility or both, got '", text, "'"));
}

std::string SweepExperimentName(SweepExperiment e) {
  switch (e) {
    case SweepExperiment::kPower:
      return "power";
    case SweepExperiment::kUtility:
      return "utility";
    case SweepExperiment::kBoth:
      return "both";
  }
  return "unknown";
}

absl::StatusOr<SweepResult> SweepEpsilon(const DataMatrix& data,
                                         const SweepConfig& cfg) {
  if (cfg.epsilons.empty() || cfg.seeds.empty()) {
    return absl::InvalidArgumentError("epsilon and seed lists must be non-empty");
  }
  if (cfg.jobs < 1) return absl::InvalidArgumentError("jobs must be >= 1");
  const bool want_power = cfg.experiment != SweepExperiment::kUtility;
  const bool want_utility = cfg.experiment != SweepExperiment::kPower;

  struct SeedState {
    PipelineBase base;
    ClusterModel clusters;
    TransformedMatrix clean_pool;
  };
  std::vector<SeedState> states;
  for (std::uint64_t seed : cfg.seeds) {
    PipelineConfig pc = cfg.pipeline;
    pc.seed = seed;
    auto base = BuildPipelineBase(data, pc);
    if (!base.ok()) return base.status();
    SeedState s{*std::move(base), {}, {}};
    s.clean_pool.model_fingerprint = s.base.model.Fingerprint();
    s.clean_pool.rows = Matrix(0, s.base.model.k());
    for (const auto& t : s.base.transformed) {
      for (std::size_t r = 0; r < t.rows.rows(); ++r) s.clean_pool.rows.AppendRow(t.rows.Row(r));
    }
    if (want_utility) {
      auto clusters = KMeansFit(s.clean_pool.rows, cfg.clusters, DeriveSeed(seed, "kmeans"));
      if (!clusters.ok()) return clusters.status();
      s.clusters = *std::move(clusters);
    }
    states.push_back(std::move(s));
  }

  struct Point {
    std::size_t eps_index, seed_index;
    absl::Status status;
    PowerRow power;
    UtilityRow utility;
  };
  std::vector<Point> points;
  for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) points.push_back({e, s, {}, {}, {}});
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      Point& p = points[i];
      const double eps = cfg.epsilons[p.eps_index];
      const std::uint64_t seed = cfg.seeds[p.seed_index];
      const SeedState& st = states[p.seed_index];
      auto shares = PrivatizeMarkets(st.base, eps, DeriveSeed(seed, "noise"));
      if (!shares.ok()) {
        p.status = shares.status();
        continue;
      }
      const Pooled pooled = Pool(st.base, *shares);
      if (want_power) {
        double threshold = 0.0, power = 0.0;
        const std::size_t markets = st.base.transformed.size();
        for (std::size_t m = 0; m < markets && p.status.ok(); ++m) {
          PowerConfig pw = cfg.power;
          pw.seed = DeriveSeed(seed, "power/" + st.base.market_ids[m]);
          pw.n_case = std::min(pw.n_case, st.base.transformed[m].rows.rows());
          pw.n_control = std::min(pw.n_control, st.base.global_transformed.rows.rows());
          auto report = PowerAnalysis(shares->noisy[m], st.base.transformed[m],
                                      st.base.global_transformed, pw);
          if (!report.ok()) {
            p.status = report.status();
            break;
          }
          threshold += report->threshold / static_cast<double>(markets);
          power += report->power / static_cast<double>(markets);
        }
        if (!p.status.ok()) continue;
        p.power = {eps, seed, threshold, power};
      }
      if (want_utility) {
        UtilityConfig uc{cfg.classifier, cfg.train, 0.2, DeriveSeed(seed, "utility"), false};
        auto report = UtilityAccuracy(pooled.clean, pooled.noisy, st.clusters, uc);
        if (!report.ok()) {
          p.status = report.status();
          continue;
        }
        p.utility = {eps, seed, cfg.classifier, report->accuracy_noisy, report->accuracy_clean};
      }
    }
  };
  const int threads = std::min<int>(cfg.jobs, static_cast<int>(points.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SweepResult result;
  for (const Point& p : points) {
    if (!p.status.ok()) return p.status;
    if (want_power) result.power.push_back(p.power);
    if (want_utility) result.utility.push_back(p.utility);
  }
  auto by_key = [](const auto& a, const auto& b) {
    if (a.epsilon != b.epsilon) return a.epsilon < b.epsilon;
    return a.seed < b.seed;
  };
  std::stable_sort(result.power.begin(), result.power.end(), by_key);
  std::stable_sort(result.utility.begin(), result.utility.end(), by_key);
  return result;
}

double Quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

template <typename Row, typename Get>
std::vector<MedianRow> Medians(const std::vector<Row>& rows, Get get) {
  std::map<double, std::vector<double>> groups;
  for (const Row& r : rows) groups[r.epsilon].push_back(get(r));
  std::vector<MedianRow> out;
  for (const auto& [eps, v] : groups) {
    out.push_back({eps, Quantile(v, 0.5), Quantile(v, 0.25), Quantile(v, 0.75)});
  }
  return out;
}

absl::Status WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return absl::InternalError(absl::StrCat("cannot open ", path, " for writing"));
  out << text;
  out.close();
  if (!out) return absl::InternalError(absl::StrCat("failed writing ", path));
  return absl::OkStatus();
}

}  // namespace

std::vector<MedianRow> PowerMedians(const std::vector<PowerRow>& rows) {
  return Medians(rows, [](const PowerRow& r) { return r.power; });
}

std::vector<MedianRow> UtilityMedians(const std::vector<UtilityRow>& rows) {
  return Medians(rows, [](const UtilityRow& r) { return r.accuracy_noisy; });
}

absl::Status WritePowerCsv(const std::string& path, const std::vector<PowerRow>& rows) {
  std::string text = "epsilon,seed,threshold,power\n";
  for (const auto& r : rows) {
    absl::StrAppend(&text, FormatDouble(r.epsilon), ",", r.seed, ",",
                    FormatDouble(r.threshold), ",", FormatDouble(r.power), "\n");
  }
  return WriteText(path, text);
}

absl::Status WriteUtilityCsv(const std::string& path,
                             const std::vector<UtilityRow>& rows) {
  std::string text = "epsilon,seed,classifier,acc_noisy,acc_clean\n";
  for (const auto& r : rows) {
    absl::StrAppend(&text, FormatDouble(r.epsilon), ",", r.seed, ",",
                    ClassifierKindName(r.classifier), ",", FormatDouble(r.accuracy_noisy),
                    ",", FormatDouble(r.accuracy_clean), "\n");
  }
  return WriteText(path, text);
}

absl::Status WriteTable4Csv(const std::string& path, const Table4Result& result) {
  std::string text = "classifier,epsilon,acc_centralized,acc_aggregated\n";
  for (const auto& r : result.rows) {
    absl::StrAppend(&text, ClassifierKindName(r.classifier), ",", FormatDouble(r.epsilon),
                    ",", FormatDouble(r.accuracy_centralized), ",",
                    FormatDouble(r.accuracy_aggregated), "\n");
  }
  return WriteText(path, text);
}

absl::Status WriteMedianDat(const std::string& path,
                            const std::vector<MedianRow>& rows) {
  std::string text = "# epsilon median q25 q75\n";
  for (const auto& r : rows) {
    absl::StrAppend(&text, FormatDouble(r.epsilon), " ", FormatDouble(r.median), " ",
                    FormatDouble(r.q25), " ", FormatDouble(r.q75), "\n");
  }
  return WriteText(path, text);
}

}  // namespace agridp
