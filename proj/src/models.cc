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

#include "agridp/models.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "agridp/rng.h"

namespace agridp {

LabeledData LabeledData::SelectRows(
    std::span<const std::size_t> indices) const {
  LabeledData out;
  out.x = x.SelectRows(indices);
  out.classes = classes;
  out.y.reserve(indices.size());
  for (std::size_t i : indices) out.y.push_back(y[i]);
  return out;
}

absl::StatusOr<LabeledData> EncodeLabels(const DataMatrix& data) {
  if (!data.has_labels()) return absl::InvalidArgumentError("data has no labels");
  std::vector<std::string> classes = data.labels();
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return EncodeLabels(data, classes);
}

absl::StatusOr<LabeledData> EncodeLabels(
    const DataMatrix& data, const std::vector<std::string>& classes) {
  if (!data.has_labels()) return absl::InvalidArgumentError("data has no labels");
  std::map<std::string, int> index;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    index[classes[c]] = static_cast<int>(c);
  }
  LabeledData out;
  out.x = data.values();
  out.classes = classes;
  out.y.reserve(data.rows());
  for (const auto& label : data.labels()) {
    auto it = index.find(label);
    if (it == index.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("label '", label, "' is not a known class"));
    }
    out.y.push_back(it->second);
  }
  return out;
}

absl::StatusOr<LabeledData> MakeLabeled(Matrix x, std::vector<int> y,
                                        int num_classes) {
  if (x.rows() != y.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "row count ", x.rows(), " does not match label count ", y.size()));
  }
  for (int label : y) {
    if (label < 0 || label >= num_classes) {
      return absl::InvalidArgumentError(absl::StrCat("label ", label, " out of range"));
    }
  }
  LabeledData out{std::move(x), std::move(y), {}};
  for (int c = 0; c < num_classes; ++c) out.classes.push_back(std::to_string(c));
  return out;
}

TrainConfig LogRegDefaults() { return {1.0, 1000, 0, 0, 1e-4}; }
TrainConfig SvmDefaults() { return {8.0, 1000, 0, 0, 1e-4}; }
TrainConfig MlpDefaults() { return {0.01, 5, 32, 0, 0.0}; }

absl::Status ValidateTrainConfig(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0) || !std::isfinite(cfg.learning_rate)) {
    return absl::InvalidArgumentError("learning rate must be positive");
  }
  if (cfg.epochs < 0) return absl::InvalidArgumentError("epochs must be >= 0");
  if (cfg.batch_size < 0) {
    return absl::InvalidArgumentError("batch size must be >= 0");
  }
  if (!(cfg.l2 >= 0) || !std::isfinite(cfg.l2)) {
    return absl::InvalidArgumentError("l2 must be non-negative");
  }
  return absl::OkStatus();
}

absl::StatusOr<ClassifierKind> ParseClassifierKind(const std::string& text) {
  if (text == "logreg") return ClassifierKind::kLogReg;
  if (text == "gnb") return ClassifierKind::kGnb;
  if (text == "svm") return ClassifierKind::kSvm;
  return absl::InvalidArgumentError(
      absl::StrCat("classifier must be logreg, gnb or svm, got '", text, "'"));
}

std::string ClassifierKindName(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kLogReg:
      return "logreg";
    case ClassifierKind::kGnb:
      return "gnb";
    case ClassifierKind::kSvm:
      return "svm";
  }
  return "unknown";
}

namespace {

int ArgMax(std::span<const double> v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

// In-place softmax; returns log-sum-exp of the input.
double Softmax(std::span<double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return top + std::log(sum);
}

absl::Status CheckTrainable(const LabeledData& data) {
  if (data.rows() == 0) return absl::InvalidArgumentError("empty training data");
  if (data.x.rows() != data.y.size()) {
    return absl::InvalidArgumentError("labels and rows are misaligned");
  }
  std::vector<int> seen(data.num_classes(), 0);
  for (int label : data.y) {
    if (label < 0 || label >= data.num_classes()) {
      return absl::InvalidArgumentError(absl::StrCat("label ", label, " out of range"));
    }
    seen[label] = 1;
  }
  if (std::accumulate(seen.begin(), seen.end(), 0) < 2) {
    return absl::InvalidArgumentError("training data contains a single class");
  }
  return absl::OkStatus();
}

// Population moments per column; zero-variance columns get scale 1.
void FitScaling(const Matrix& x, ClassifierModel& model) {
  model.feature_means = x.ColumnMeans();
  model.feature_scales.assign(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double d = x(r, c) - model.feature_means[c];
      model.feature_scales[c] += d * d;
    }
  }
  for (double& s : model.feature_scales) {
    s = std::sqrt(s / static_cast<double>(x.rows()));
    if (!(s > 1e-12)) s = 1.0;
  }
}

Matrix Scale(const ClassifierModel& model, const Matrix& x) {
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      out(r, c) = (out(r, c) - model.feature_means[c]) / model.feature_scales[c];
    }
  }
  return out;
}

double Dot(std::span<const double> w, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
  return s;
}

}  // namespace

double LogRegLossAndGradient(std::span<const double> weights, const Matrix& x,
                             const std::vector<int>& y, int num_classes,
                             double l2, std::span<double> grad) {
  const std::size_t d = x.cols();
  const std::size_t stride = d + 1;
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> z(num_classes);
  double loss = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.Row(r);
    for (int c = 0; c < num_classes; ++c) {
      z[c] = Dot(weights.subspan(c * stride, d), row) + weights[c * stride + d];
    }
    const double target = z[y[r]];
    loss += (Softmax(z) - target) * inv_n;
    if (grad.empty()) continue;
    for (int c = 0; c < num_classes; ++c) {
      const double delta = (z[c] - (c == y[r] ? 1.0 : 0.0)) * inv_n;
      for (std::size_t j = 0; j < d; ++j) grad[c * stride + j] += delta * row[j];
      grad[c * stride + d] += delta;
    }
  }
  for (int c = 0; c < num_classes; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      const double w = weights[c * stride + j];
      loss += 0.5 * l2 * w * w;
      if (!grad.empty()) grad[c * stride + j] += l2 * w;
    }
  }
  return loss;
}

absl::StatusOr<ClassifierModel> TrainLogReg(const LabeledData& data,
                                            const TrainConfig& cfg) {
  if (auto st = ValidateTrainConfig(cfg); !st.ok()) return st;
  if (auto st = CheckTrainable(data); !st.ok()) return st;
  ClassifierModel model;
  model.kind = ClassifierKind::kLogReg;
  model.classes = data.classes;
  model.d = data.x.cols();
  FitScaling(data.x, model);
  const Matrix x = Scale(model, data.x);
  const int classes = data.num_classes();
  model.weights.assign(classes * (model.d + 1), 0.0);
  Rng rng(cfg.seed);
  for (double& w : model.weights) w = 0.01 * rng.Normal();
  std::vector<double> grad(model.weights.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    LogRegLossAndGradient(model.weights, x, data.y, classes, cfg.l2, grad);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      model.weights[i] -= cfg.learning_rate * grad[i];
    }
    model.objective_trace.push_back(
        LogRegLossAndGradient(model.weights, x, data.y, classes, cfg.l2, {}));
  }
  return model;
}

absl::StatusOr<ClassifierModel> TrainGnb(const LabeledData& data,
                                         double smoothing) {
  if (!(smoothing > 0)) return absl::InvalidArgumentError("smoothing must be positive");
  if (auto st = CheckTrainable(data); !st.ok()) return st;
  const int classes = data.num_classes();
  const std::size_t d = data.x.cols();
  std::vector<std::size_t> counts(classes, 0);
  for (int label : data.y) ++counts[label];
  for (int c = 0; c < classes; ++c) {
    if (counts[c] < 2) {
      return absl::InvalidArgumentError(absl::StrCat(
          "class '", data.classes[c], "' has ", counts[c],
          " samples; naive Bayes needs at least 2"));
    }
  }
  ClassifierModel model;
  model.kind = ClassifierKind::kGnb;
  model.classes = data.classes;
  model.d = d;
  model.means.assign(classes * d, 0.0);
  model.variances.assign(classes * d, 0.0);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) model.means[data.y[r] * d + j] += data.x(r, j);
  }
  for (int c = 0; c < classes; ++c) {
    for (std::size_t j = 0; j < d; ++j) model.means[c * d + j] /= counts[c];
  }
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = data.x(r, j) - model.means[data.y[r] * d + j];
      model.variances[data.y[r] * d + j] += diff * diff;
    }
  }
  for (int c = 0; c < classes; ++c) {
    for (std::size_t j = 0; j < d; ++j) model.variances[c * d + j] /= counts[c];
  }
  // Floor relative to the widest feature, over all rows.
  ClassifierModel overall;
  FitScaling(data.x, overall);
  double max_var = 0.0;
  for (double s : overall.feature_scales) max_var = std::max(max_var, s * s);
  const double floor = std::max(smoothing * max_var,
                                std::numeric_limits<double>::min());
  for (double& v : model.variances) v = std::max(v, floor);
  for (int c = 0; c < classes; ++c) {
    model.log_priors.push_back(std::log(static_cast<double>(counts[c]) /
                                        static_cast<double>(data.rows())));
  }
  return model;
}

double SvmObjective(std::span<const double> weights, const Matrix& x,
                    const std::vector<int>& y, int positive_class, double l2) {
  const std::size_t d = x.cols();
  double hinge = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double t = y[r] == positive_class ? 1.0 : -1.0;
    const double margin = t * (Dot(weights, x.Row(r)) + weights[d]);
    hinge += std::max(0.0, 1.0 - margin);
  }
  double norm = 0.0;
  for (std::size_t j = 0; j < d; ++j) norm += weights[j] * weights[j];
  return hinge / static_cast<double>(x.rows()) + 0.5 * l2 * norm;
}

void SvmSubgradient(std::span<const double> weights, const Matrix& x,
                    const std::vector<int>& y, int positive_class, double l2,
                    std::span<double> grad) {
  const std::size_t d = x.cols();
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  std::fill(grad.begin(), grad.end(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double t = y[r] == positive_class ? 1.0 : -1.0;
    auto row = x.Row(r);
    if (t * (Dot(weights, row) + weights[d]) >= 1.0) continue;
    for (std::size_t j = 0; j < d; ++j) grad[j] -= t * row[j] * inv_n;
    grad[d] -= t * inv_n;
  }
  for (std::size_t j = 0; j < d; ++j) grad[j] += l2 * weights[j];
}

absl::StatusOr<ClassifierModel> TrainSvm(const LabeledData& data,
                                         const TrainConfig& cfg) {
  if (auto st = ValidateTrainConfig(cfg); !st.ok()) return st;
  if (auto st = CheckTrainable(data); !st.ok()) return st;
  ClassifierModel model;
  model.kind = ClassifierKind::kSvm;
  model.classes = data.classes;
  model.d = data.x.cols();
  FitScaling(data.x, model);
  const Matrix x = Scale(model, data.x);
  const std::size_t stride = model.d + 1;
  const int classes = data.num_classes();
  model.weights.assign(classes * stride, 0.0);
  model.objective_trace.assign(cfg.epochs, 0.0);
  std::vector<double> grad(stride), w(stride);
  for (int c = 0; c < classes; ++c) {
    // Subgradient steps are not descent steps, so keep the best iterate.
    std::fill(w.begin(), w.end(), 0.0);
    std::span<double> best(model.weights.data() + c * stride, stride);
    double best_objective = SvmObjective(w, x, data.y, c, cfg.l2);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const double step = cfg.learning_rate / (1.0 + cfg.learning_rate * cfg.l2 * epoch);
      SvmSubgradient(w, x, data.y, c, cfg.l2, grad);
      for (std::size_t j = 0; j < stride; ++j) w[j] -= step * grad[j];
      const double objective = SvmObjective(w, x, data.y, c, cfg.l2);
      if (objective < best_objective) {
        best_objective = objective;
        std::copy(w.begin(), w.end(), best.begin());
      }
      model.objective_trace[epoch] += best_objective;
    }
  }
  return model;
}

absl::StatusOr<ClassifierModel> TrainClassifier(ClassifierKind kind,
                                                const LabeledData& data,
                                                const TrainConfig& cfg) {
  switch (kind) {
    case ClassifierKind::kLogReg:
      return TrainLogReg(data, cfg);
    case ClassifierKind::kGnb:
      return TrainGnb(data);
    case ClassifierKind::kSvm:
      return TrainSvm(data, cfg);
  }
  return absl::InvalidArgumentError("unknown classifier kind");
}

absl::StatusOr<Matrix> PredictScores(const ClassifierModel& model,
                                     const Matrix& rows) {
  if (rows.rows() > 0 && rows.cols() != model.d) {
    return absl::InvalidArgumentError(absl::StrCat(
        "rows have ", rows.cols(), " features, model expects ", model.d));
  }
  const int classes = model.num_classes();
  const std::size_t d = model.d;
  Matrix scores(rows.rows(), classes);
  if (model.kind == ClassifierKind::kGnb) {
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      auto out = scores.Row(r);
      for (int c = 0; c < classes; ++c) {
        double ll = model.log_priors[c];
        for (std::size_t j = 0; j < d; ++j) {
          const double var = model.variances[c * d + j];
          const double diff = rows(r, j) - model.means[c * d + j];
          ll -= 0.5 * (std::log(2.0 * std::numbers::pi * var) + diff * diff / var);
        }
        out[c] = ll;
      }
      Softmax(out);
    }
    return scores;
  }
  const Matrix x = Scale(model, rows);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto out = scores.Row(r);
    for (int c = 0; c < classes; ++c) {
      std::span<const double> w(model.weights.data() + c * (d + 1), d + 1);
      out[c] = Dot(w, x.Row(r)) + w[d];
    }
    if (model.kind == ClassifierKind::kLogReg) Softmax(out);
  }
  return scores;
}

absl::StatusOr<std::vector<int>> Predict(const ClassifierModel& model,
                                         const Matrix& rows) {
  auto scores = PredictScores(model, rows);
  if (!scores.ok()) return scores.status();
  std::vector<int> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) out[r] = ArgMax(scores->Row(r));
  return out;
}

std::size_t ParamCount(std::span<const std::size_t> shape) {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < shape.size(); ++l) {
    total += (shape[l] + 1) * shape[l + 1];
  }
  return total;
}

namespace {

absl::Status CheckShape(const ModelParams& params) {
  if (params.shape.size() < 2) {
    return absl::InvalidArgumentError("network needs at least input and output layers");
  }
  for (std::size_t s : params.shape) {
    if (s == 0) return absl::InvalidArgumentError("layer sizes must be positive");
  }
  if (params.weights.size() != ParamCount(params.shape)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "network has ", params.weights.size(), " weights, shape needs ",
        ParamCount(params.shape)));
  }
  return absl::OkStatus();
}

// Activations of every layer for one input row. The last layer holds the
// softmax output.
void Forward(const ModelParams& params, std::span<const double> input,
             std::vector<std::vector<double>>& acts) {
  const auto& shape = params.shape;
  acts.resize(shape.size());
  acts[0].assign(input.begin(), input.end());
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < shape.size(); ++l) {
    const std::size_t in = shape[l], out = shape[l + 1];
    const double* w = params.weights.data() + offset;
    const double* b = w + in * out;
    acts[l + 1].assign(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double z = b[o];
      for (std::size_t i = 0; i < in; ++i) z += w[o * in + i] * acts[l][i];
      acts[l + 1][o] = z;
    }
    if (l + 2 < shape.size()) {
      for (double& v : acts[l + 1]) v = std::max(v, 0.0);
    } else {
      Softmax(acts[l + 1]);
    }
    offset += (in + 1) * out;
  }
}

double LossOnRows(const ModelParams& params, const Matrix& x,
                  const std::vector<int>& y, std::span<const std::size_t> rows,
                  double l2, std::span<double> grad) {
  const auto& shape = params.shape;
  const std::size_t layers = shape.size() - 1;
  std::vector<std::size_t> offsets(layers, 0);
  for (std::size_t l = 1; l < layers; ++l) {
    offsets[l] = offsets[l - 1] + (shape[l - 1] + 1) * shape[l];
  }
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, prev_delta;
  double loss = 0.0;
  for (std::size_t r : rows) {
    Forward(params, x.Row(r), acts);
    loss -= std::log(std::max(acts[layers][y[r]], 1e-300)) * inv_n;
    if (grad.empty()) continue;
    delta = acts[layers];
    delta[y[r]] -= 1.0;
    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = shape[l], out = shape[l + 1];
      const double* w = params.weights.data() + offsets[l];
      double* gw = grad.data() + offsets[l];
      double* gb = gw + in * out;
      for (std::size_t o = 0; o < out; ++o) {
        const double g = delta[o] * inv_n;
        for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += g * acts[l][i];
        gb[o] += g;
      }
      if (l == 0) break;
      prev_delta.assign(in, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t i = 0; i < in; ++i) prev_delta[i] += w[o * in + i] * delta[o];
      }
      // ReLU derivative, taken as 0 at the kink.
      for (std::size_t i = 0; i < in; ++i) {
        if (acts[l][i] <= 0.0) prev_delta[i] = 0.0;
      }
      delta.swap(prev_delta);
    }
  }
  if (l2 > 0) {
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t count = shape[l] * shape[l + 1];
      for (std::size_t i = 0; i < count; ++i) {
        const double w = params.weights[offsets[l] + i];
        loss += 0.5 * l2 * w * w;
        if (!grad.empty()) grad[offsets[l] + i] += l2 * w;
      }
    }
  }
  return loss;
}

absl::Status CheckMlpData(const ModelParams& params, const Matrix& x,
                          const std::vector<int>& y) {
  if (auto st = CheckShape(params); !st.ok()) return st;
  if (x.rows() == 0) return absl::InvalidArgumentError("empty data");
  if (x.cols() != params.inputs()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "data has ", x.cols(), " features, network expects ", params.inputs()));
  }
  if (y.size() != x.rows()) return absl::InvalidArgumentError("labels misaligned");
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= params.outputs()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "label ", label, " outside the network's ", params.outputs(), " outputs"));
    }
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<ModelParams> MlpInit(std::vector<std::size_t> shape,
                                    std::uint64_t seed) {
  ModelParams params;
  params.shape = std::move(shape);
  params.weights.assign(ParamCount(params.shape), 0.0);
  if (auto st = CheckShape(params); !st.ok()) return st;
  Rng rng(seed);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < params.shape.size(); ++l) {
    const std::size_t in = params.shape[l], out = params.shape[l + 1];
    const double sd = std::sqrt(2.0 / static_cast<double>(in));
    for (std::size_t i = 0; i < in * out; ++i) {
      params.weights[offset + i] = sd * rng.Normal();
    }
    offset += (in + 1) * out;
  }
  return params;
}

absl::StatusOr<double> MlpLossAndGradient(const ModelParams& params,
                                          const Matrix& x,
                                          const std::vector<int>& y, double l2,
                                          std::span<double> grad) {
  if (auto st = CheckMlpData(params, x, y); !st.ok()) return st;
  if (!grad.empty() && grad.size() != params.weights.size()) {
    return absl::InvalidArgumentError("gradient buffer has the wrong size");
  }
  std::vector<std::size_t> all(x.rows());
  std::iota(all.begin(), all.end(), 0);
  return LossOnRows(params, x, y, all, l2, grad);
}

absl::StatusOr<Matrix> MlpPredictScores(const ModelParams& params,
                                        const Matrix& rows) {
  if (auto st = CheckShape(params); !st.ok()) return st;
  if (rows.rows() > 0 && rows.cols() != params.inputs()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "rows have ", rows.cols(), " features, network expects ", params.inputs()));
  }
  Matrix scores(rows.rows(), params.outputs());
  std::vector<std::vector<double>> acts;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    Forward(params, rows.Row(r), acts);
    std::copy(acts.back().begin(), acts.back().end(), scores.Row(r).begin());
  }
  return scores;
}

absl::StatusOr<std::vector<int>> MlpPredict(const ModelParams& params,
                                            const Matrix& rows) {
  auto scores = MlpPredictScores(params, rows);
  if (!scores.ok()) return scores.status();
  std::vector<int> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) out[r] = ArgMax(scores->Row(r));
  return out;
}

absl::StatusOr<LocalTrainResult> MlpTrainLocal(const ModelParams& params,
                                               const LabeledData& data,
                                               const TrainConfig& cfg,
                                               int epoch_offset) {
  if (auto st = ValidateTrainConfig(cfg); !st.ok()) return st;
  if (auto st = CheckMlpData(params, data.x, data.y); !st.ok()) return st;
  LocalTrainResult result{params, {}};
  const std::size_t n = data.rows();
  const std::size_t batch =
      cfg.batch_size == 0 ? n : std::min<std::size_t>(cfg.batch_size, n);
  std::vector<std::size_t> order(n), all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<double> grad(params.weights.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order = all;
    Rng rng(DeriveSeed(cfg.seed, static_cast<std::uint64_t>(epoch_offset + epoch)));
    rng.Shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += batch) {
      std::span<const std::size_t> rows(order.data() + start,
                                        std::min(batch, n - start));
      LossOnRows(result.params, data.x, data.y, rows, cfg.l2, grad);
      for (std::size_t i = 0; i < grad.size(); ++i) {
        result.params.weights[i] -= cfg.learning_rate * grad[i];
      }
    }
    result.epoch_losses.push_back(
        LossOnRows(result.params, data.x, data.y, all, cfg.l2, {}));
  }
  return result;
}

absl::StatusOr<double> AccuracyOf(const std::vector<int>& predicted,
                                  const std::vector<int>& truth) {
  if (truth.empty()) return absl::InvalidArgumentError("accuracy of empty data");
  if (predicted.size() != truth.size()) {
    return absl::InvalidArgumentError("prediction count does not match labels");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

absl::StatusOr<double> Accuracy(const ClassifierModel& model,
                                const LabeledData& data) {
  if (data.rows() == 0) return absl::InvalidArgumentError("accuracy of empty data");
  auto predicted = Predict(model, data.x);
  if (!predicted.ok()) return predicted.status();
  return AccuracyOf(*predicted, data.y);
}

absl::StatusOr<double> MlpAccuracy(const ModelParams& params,
                                   const LabeledData& data) {
  if (data.rows() == 0) return absl::InvalidArgumentError("accuracy of empty data");
  auto predicted = MlpPredict(params, data.x);
  if (!predicted.ok()) return predicted.status();
  return AccuracyOf(*predicted, data.y);
}

absl::StatusOr<SplitIndices> StratifiedSplit(const std::vector<int>& y,
                                             double test_fraction,
                                             std::uint64_t seed) {
  if (!(test_fraction > 0 && test_fraction < 1)) {
    return absl::InvalidArgumentError("test fraction must be in (0, 1)");
  }
  if (y.empty()) return absl::InvalidArgumentError("cannot split empty data");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  SplitIndices split;
  for (auto& [label, members] : by_class) {
    Rng rng(DeriveSeed(seed, static_cast<std::uint64_t>(label)));
    rng.Shuffle(std::span<std::size_t>(members));
    std::size_t n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    n_test = std::min(n_test, members.size() - 1);
    split.test.insert(split.test.end(), members.begin(), members.begin() + n_test);
    split.train.insert(split.train.end(), members.begin() + n_test, members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

nlohmann::json ClassifierModelToJson(const ClassifierModel& model) {
  return {{"version", 1},
          {"kind", ClassifierKindName(model.kind)},
          {"classes", model.classes},
          {"d", model.d},
          {"feature_means", model.feature_means},
          {"feature_scales", model.feature_scales},
          {"weights", model.weights},
          {"means", model.means},
          {"variances", model.variances},
          {"log_priors", model.log_priors}};
}

absl::StatusOr<ClassifierModel> ClassifierModelFromJson(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1) {
      return absl::InvalidArgumentError("unsupported classifier version");
    }
    ClassifierModel model;
    auto kind = ParseClassifierKind(j.at("kind").get<std::string>());
    if (!kind.ok()) return kind.status();
    model.kind = *kind;
    model.classes = j.at("classes").get<std::vector<std::string>>();
    model.d = j.at("d").get<std::size_t>();
    model.feature_means = j.at("feature_means").get<std::vector<double>>();
    model.feature_scales = j.at("feature_scales").get<std::vector<double>>();
    model.weights = j.at("weights").get<std::vector<double>>();
    model.means = j.at("means").get<std::vector<double>>();
    model.variances = j.at("variances").get<std::vector<double>>();
    model.log_priors = j.at("log_priors").get<std::vector<double>>();
    const std::size_t c = model.classes.size();
    const bool ok =
        model.kind == ClassifierKind::kGnb
            ? model.means.size() == c * model.d &&
                  model.variances.size() == c * model.d &&
                  model.log_priors.size() == c
            : model.weights.size() == c * (model.d + 1) &&
                  model.feature_means.size() == model.d &&
                  model.feature_scales.size() == model.d;
    if (!ok) return absl::InvalidArgumentError("classifier parameter sizes are inconsistent");
    return model;
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("bad classifier JSON: ", e.what()));
  }
}

nlohmann::json ModelParamsToJson(const ModelParams& params) {
  return {{"version", 1},
          {"shape", params.shape},
          {"activation", "relu"},
          {"weights", params.weights}};
}

absl::StatusOr<ModelParams> ModelParamsFromJson(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1 || j.at("activation") != "relu") {
      return absl::InvalidArgumentError("unsupported network version or activation");
    }
    ModelParams params;
    params.shape = j.at("shape").get<std::vector<std::size_t>>();
    params.weights = j.at("weights").get<std::vector<double>>();
    if (auto st = CheckShape(params); !st.ok()) return st;
    return params;
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("bad network JSON: ", e.what()));
  }
}

}  // namespace agridp
