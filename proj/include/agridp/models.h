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

// Small classifiers written from scratch: multinomial logistic regression,
// Gaussian naive Bayes, one-vs-rest linear SVM and a one-hidden-layer MLP.

#ifndef AGRIDP_MODELS_H_
#define AGRIDP_MODELS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "agridp/data.h"
#include "agridp/matrix.h"
#include "json.hpp"

namespace agridp {

// Features with integer class indices into `classes`.
struct LabeledData {
  Matrix x;
  std::vector<int> y;
  std::vector<std::string> classes;

  std::size_t rows() const { return x.rows(); }
  int num_classes() const { return static_cast<int>(classes.size()); }
  LabeledData SelectRows(std::span<const std::size_t> indices) const;
};

// Classes sorted lexicographically.
absl::StatusOr<LabeledData> EncodeLabels(const DataMatrix& data);
// Uses a fixed class list; a label outside it is an error.
absl::StatusOr<LabeledData> EncodeLabels(
    const DataMatrix& data, const std::vector<std::string>& classes);
// Classes named "0".."num_classes-1".
absl::StatusOr<LabeledData> MakeLabeled(Matrix x, std::vector<int> y,
                                        int num_classes);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 500;
  int batch_size = 0;  // 0 means full batch
  std::uint64_t seed = 0;
  double l2 = 1e-4;
};

TrainConfig LogRegDefaults();
TrainConfig SvmDefaults();
TrainConfig MlpDefaults();
inline constexpr double kGnbDefaultSmoothing = 1e-9;
inline constexpr int kMlpDefaultHidden = 32;

absl::Status ValidateTrainConfig(const TrainConfig& cfg);

enum class ClassifierKind { kLogReg, kGnb, kSvm };

absl::StatusOr<ClassifierKind> ParseClassifierKind(const std::string& text);
std::string ClassifierKindName(ClassifierKind kind);

struct ClassifierModel {
  ClassifierKind kind = ClassifierKind::kLogReg;
  std::vector<std::string> classes;
  std::size_t d = 0;
  // Linear models standardize inputs with these before scoring.
  std::vector<double> feature_means;
  std::vector<double> feature_scales;
  // logreg, svm: per class, d weights followed by the bias.
  std::vector<double> weights;
  // gnb: class-major d-vectors, and one log prior per class.
  std::vector<double> means;
  std::vector<double> variances;
  std::vector<double> log_priors;
  // Training objective after each epoch (not serialized). For SVM, the sum
  // over classes of the best objective reached so far.
  std::vector<double> objective_trace;

  int num_classes() const { return static_cast<int>(classes.size()); }
};

absl::StatusOr<ClassifierModel> TrainLogReg(const LabeledData& data,
                                            const TrainConfig& cfg);
absl::StatusOr<ClassifierModel> TrainGnb(
    const LabeledData& data, double smoothing = kGnbDefaultSmoothing);
// Full-batch subgradient descent with step lr / (1 + lr * l2 * t); each
// one-vs-rest problem returns its lowest-objective iterate.
absl::StatusOr<ClassifierModel> TrainSvm(const LabeledData& data,
                                         const TrainConfig& cfg);
// Dispatches on kind; GNB ignores cfg.
absl::StatusOr<ClassifierModel> TrainClassifier(ClassifierKind kind,
                                                const LabeledData& data,
                                                const TrainConfig& cfg);

// Per-row class scores: probabilities for logreg and GNB, decision values
// for SVM.
absl::StatusOr<Matrix> PredictScores(const ClassifierModel& model,
                                     const Matrix& rows);
// Argmax of the scores; ties go to the lower class index.
absl::StatusOr<std::vector<int>> Predict(const ClassifierModel& model,
                                         const Matrix& rows);

// Mean softmax cross-entropy plus (l2 / 2)|w|^2 (biases excluded) in the
// ClassifierModel weight layout. Writes the gradient when `grad` is non-empty.
double LogRegLossAndGradient(std::span<const double> weights, const Matrix& x,
                             const std::vector<int>& y, int num_classes,
                             double l2, std::span<double> grad);

// Mean hinge loss plus (l2 / 2)|w|^2 for the one-vs-rest problem of
// `positive_class`. `weights` is d weights followed by the bias.
double SvmObjective(std::span<const double> weights, const Matrix& x,
                    const std::vector<int>& y, int positive_class, double l2);
void SvmSubgradient(std::span<const double> weights, const Matrix& x,
                    const std::vector<int>& y, int positive_class, double l2,
                    std::span<double> grad);

enum class Activation { kRelu };

// Feed-forward network. For every layer, an out x in row-major weight block
// followed by out biases.
struct ModelParams {
  std::vector<std::size_t> shape;
  std::vector<double> weights;
  Activation activation = Activation::kRelu;

  std::size_t inputs() const { return shape.front(); }
  std::size_t outputs() const { return shape.back(); }
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

std::size_t ParamCount(std::span<const std::size_t> shape);

// He-normal weights, zero biases.
absl::StatusOr<ModelParams> MlpInit(std::vector<std::size_t> shape,
                                    std::uint64_t seed);

// Mean softmax cross-entropy plus (l2 / 2)|W|^2 over weights (not biases).
// Writes the gradient into `grad` when it is non-empty.
absl::StatusOr<double> MlpLossAndGradient(const ModelParams& params,
                                          const Matrix& x,
                                          const std::vector<int>& y, double l2,
                                          std::span<double> grad);

absl::StatusOr<Matrix> MlpPredictScores(const ModelParams& params,
                                        const Matrix& rows);
absl::StatusOr<std::vector<int>> MlpPredict(const ModelParams& params,
                                            const Matrix& rows);

struct LocalTrainResult {
  ModelParams params;
  std::vector<double> epoch_losses;  // full-data loss after each epoch
};

// Mini-batch SGD. Epoch e shuffles with DeriveSeed(cfg.seed, epoch_offset + e)
// so that consecutive calls with advancing offsets replay one long run.
absl::StatusOr<LocalTrainResult> MlpTrainLocal(const ModelParams& params,
                                               const LabeledData& data,
                                               const TrainConfig& cfg,
                                               int epoch_offset = 0);

absl::StatusOr<double> Accuracy(const ClassifierModel& model,
                                const LabeledData& data);
absl::StatusOr<double> MlpAccuracy(const ModelParams& params,
                                   const LabeledData& data);
absl::StatusOr<double> AccuracyOf(const std::vector<int>& predicted,
                                  const std::vector<int>& truth);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Per class, round(test_fraction * class size) rows go to test, keeping at
// least one training row. Both lists are ascending.
absl::StatusOr<SplitIndices> StratifiedSplit(const std::vector<int>& y,
                                             double test_fraction,
                                             std::uint64_t seed);

nlohmann::json ClassifierModelToJson(const ClassifierModel& model);
absl::StatusOr<ClassifierModel> ClassifierModelFromJson(const nlohmann::json& j);
nlohmann::json ModelParamsToJson(const ModelParams& params);
absl::StatusOr<ModelParams> ModelParamsFromJson(const nlohmann::json& j);

}  // namespace agridp

#endif  // AGRIDP_MODELS_H_
