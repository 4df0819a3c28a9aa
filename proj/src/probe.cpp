// Copyright 2026  The lprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "lprobe/probe.hpp"

#include <cmath>
#include <deque>
#include <sstream>

#include "lprobe/error.hpp"
#include "lprobe/util.hpp"

namespace lprobe {

namespace {

constexpr double kMinScale = 1e-12;
constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;
constexpr std::size_t kLbfgsMemory = 10;

double Sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// log(1 + exp(s)) without overflow.
double Softplus(double s) {
  return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

// Objective over packed parameters theta = [w; b].
class LogisticLoss {
 public:
  LogisticLoss(const FeatureMatrix &z, std::span<const int> y, double l2)
      : z_(z), y_(y.size()), l2_(l2) {
    for (std::size_t i = 0; i < y.size(); ++i) y_[static_cast<Eigen::Index>(i)] = y[i];
  }

  Eigen::Index dim() const { return z_.cols(); }

  double Value(const Eigen::VectorXd &theta) const {
    const Eigen::VectorXd s = Scores(theta);
    double f = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) f += Softplus(s[i]) - y_[i] * s[i];
    const auto w = theta.head(dim());
    return f + 0.5 * l2_ * w.squaredNorm();
  }

  double ValueAndGradient(const Eigen::VectorXd &theta, Eigen::VectorXd &grad,
                          Eigen::VectorXd *curvature = nullptr) const {
    const Eigen::VectorXd s = Scores(theta);
    Eigen::VectorXd residual(s.size());
    double f = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      f += Softplus(s[i]) - y_[i] * s[i];
      const double p = Sigmoid(s[i]);
      residual[i] = p - y_[i];
      if (curvature != nullptr) (*curvature)[i] = p * (1.0 - p);
    }
    const auto w = theta.head(dim());
    grad.resize(dim() + 1);
    grad.head(dim()) = z_.transpose() * residual + l2_ * w;
    grad[dim()] = residual.sum();
    return f + 0.5 * l2_ * w.squaredNorm();
  }

  Eigen::MatrixXd Hessian(const Eigen::VectorXd &curvature) const {
    const Eigen::Index d = dim();
    Eigen::MatrixXd h(d + 1, d + 1);
    const FeatureMatrix weighted = curvature.asDiagonal() * z_;
    h.topLeftCorner(d, d) = z_.transpose() * weighted;
    h.topLeftCorner(d, d).diagonal().array() += l2_;
    const Eigen::VectorXd cross = z_.transpose() * curvature;
    h.topRightCorner(d, 1) = cross;
    h.bottomLeftCorner(1, d) = cross.transpose();
    h(d, d) = curvature.sum();
    return h;
  }

 private:
  Eigen::VectorXd Scores(const Eigen::VectorXd &theta) const {
    return (z_ * theta.head(dim())).array() + theta[dim()];
  }

  const FeatureMatrix &z_;
  Eigen::VectorXd y_;
  double l2_;
};

Eigen::VectorXd NewtonDirection(const Eigen::MatrixXd &hessian, const Eigen::VectorXd &grad) {
  Eigen::MatrixXd h = hessian;
  double damping = 0.0;
  const double base = 1e-12 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
  for (int attempt = 0; attempt < 12; ++attempt) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        (ldlt.vectorD().array() > 0).all()) {
      Eigen::VectorXd dir = -ldlt.solve(grad);
      if (dir.allFinite() && dir.dot(grad) < 0) return dir;
    }
    const double next = damping == 0.0 ? base : damping * 100.0;
    h.diagonal().array() += next - damping;
    damping = next;
  }
  return -grad;
}

struct LineSearchResult {
  bool accepted = false;
  double value = 0.0;
};

LineSearchResult Backtrack(const LogisticLoss &loss, Eigen::VectorXd &theta, double value,
                           const Eigen::VectorXd &grad, const Eigen::VectorXd &dir) {
  const double slope = grad.dot(dir);
  double step = 1.0;
  for (int i = 0; i < kMaxBacktracks; ++i) {
    Eigen::VectorXd candidate = theta + step * dir;
    const double f = loss.Value(candidate);
    if (std::isfinite(f) && f <= value + kArmijo * step * slope) {
      theta = std::move(candidate);
      return {true, f};
    }
    step *= 0.5;
  }
  return {false, value};
}

void Standardize(const FeatureMatrix &x, bool enabled, Eigen::VectorXd &means,
                 Eigen::VectorXd &scales) {
  const Eigen::Index d = x.cols();
  means = Eigen::VectorXd::Zero(d);
  scales = Eigen::VectorXd::Ones(d);
  if (!enabled) return;
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < d; ++j) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) sum += x(i, j);
    const double mean = sum / n;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) ss += (x(i, j) - mean) * (x(i, j) - mean);
    const double sd = std::sqrt(ss / n);
    means[j] = mean;
    scales[j] = sd > kMinScale ? sd : 1.0;
  }
}

FeatureMatrix ApplyStandardization(const FeatureMatrix &x, const Eigen::VectorXd &means,
                                   const Eigen::VectorXd &scales) {
  FeatureMatrix z(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) z(i, j) = (x(i, j) - means[j]) / scales[j];
  return z;
}

}  // namespace

std::string TrainConfig::Fingerprint() const {
  std::ostringstream out;
  out << "l2=" << FormatDouble(l2_strength) << ";max_iter=" << max_iterations
      << ";tol=" << FormatDouble(convergence_tol) << ";standardize=" << (standardize ? 1 : 0)
      << ";seed=" << seed;
  return out.str();
}

double LogisticObjective(const FeatureMatrix &standardized, std::span<const int> labels,
                         const Eigen::VectorXd &weights, double bias, double l2_strength) {
  LogisticLoss loss(standardized, labels, l2_strength);
  Eigen::VectorXd theta(weights.size() + 1);
  theta << weights, bias;
  return loss.Value(theta);
}

ProbeModel FitLogistic(const FeatureMatrix &features, std::span<const int> labels,
                       const TrainConfig &config) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (static_cast<std::size_t>(n) != labels.size())
    Fail(ErrorCode::kInput, "feature rows and labels differ in length");
  if (n < 2 || d < 1) Fail(ErrorCode::kInput, "need at least two samples and one feature");
  if (!features.allFinite()) Fail(ErrorCode::kInput, "non-finite feature value");
  if (config.l2_strength < 0 || config.max_iterations < 1 || !(config.convergence_tol > 0))
    Fail(ErrorCode::kArgument, "invalid training configuration");
  int positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) Fail(ErrorCode::kInput, "labels must be 0 or 1");
    positives += y;
  }
  if (positives == 0 || positives == n)
    Fail(ErrorCode::kDegenerateData, "training labels contain a single class");

  ProbeModel model;
  Standardize(features, config.standardize, model.feature_means, model.feature_scales);
  const FeatureMatrix z = config.standardize
                              ? ApplyStandardization(features, model.feature_means,
                                                     model.feature_scales)
                              : features;
  LogisticLoss loss(z, labels, config.l2_strength);
  const bool use_newton = d + 1 <= config.newton_max_params;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd grad;
  Eigen::VectorXd curvature(n);
  double value = loss.ValueAndGradient(theta, grad, use_newton ? &curvature : nullptr);
  model.objective_trace.push_back(value);

  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> history;  // (s, y)
  int iter = 0;
  while (true) {
    model.gradient_max_norm = grad.cwiseAbs().maxCoeff();
    if (model.gradient_max_norm <= config.convergence_tol) {
      model.converged = true;
      break;
    }
    if (iter >= config.max_iterations) break;
    ++iter;

    Eigen::VectorXd dir;
    if (use_newton) {
      dir = NewtonDirection(loss.Hessian(curvature), grad);
    } else {
      // L-BFGS two-loop recursion.
      Eigen::VectorXd q = grad;
      std::vector<double> alpha(history.size());
      for (std::size_t i = history.size(); i-- > 0;) {
        const auto &[s, yv] = history[i];
        alpha[i] = s.dot(q) / yv.dot(s);
        q -= alpha[i] * yv;
      }
      if (!history.empty()) {
        const auto &[s, yv] = history.back();
        q *= s.dot(yv) / yv.dot(yv);
      }
      for (std::size_t i = 0; i < history.size(); ++i) {
        const auto &[s, yv] = history[i];
        const double beta = yv.dot(q) / yv.dot(s);
        q += (alpha[i] - beta) * s;
      }
      dir = -q;
      if (!(dir.dot(grad) < 0)) {
        history.clear();
        dir = -grad;
      }
    }

    const Eigen::VectorXd previous_theta = theta;
    const Eigen::VectorXd previous_grad = grad;
    LineSearchResult step = Backtrack(loss, theta, value, grad, dir);
    if (!step.accepted && !use_newton && !history.empty()) {
      history.clear();
      dir = -grad;
      step = Backtrack(loss, theta, value, grad, dir);
    }
    if (!step.accepted) break;  // no further decrease representable
    value = loss.ValueAndGradient(theta, grad, use_newton ? &curvature : nullptr);
    model.objective_trace.push_back(value);
    if (!use_newton) {
      Eigen::VectorXd s = theta - previous_theta;
      Eigen::VectorXd yv = grad - previous_grad;
      if (s.dot(yv) > 1e-12 * s.norm() * yv.norm()) {
        history.emplace_back(std::move(s), std::move(yv));
        if (history.size() > kLbfgsMemory) history.pop_front();
      }
    }
  }
  model.iterations = iter;
  model.weights = theta.head(d);
  model.bias = theta[d];
  if (!model.weights.allFinite() || !std::isfinite(model.bias))
    Fail(ErrorCode::kInternal, "optimizer produced non-finite parameters");
  return model;
}

std::vector<int> PredictionMatrix::HardLabels() const {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    out[static_cast<std::size_t>(i)] = probs(i, 1) > probs(i, 0) ? 1 : 0;
  return out;
}

PredictionMatrix PredictProba(const ProbeModel &model, const FeatureMatrix &features) {
  if (features.cols() != model.dim())
    Fail(ErrorCode::kInput, "feature dimension " + std::to_string(features.cols()) +
                                " does not match model dimension " +
                                std::to_string(model.dim()));
  PredictionMatrix out;
  out.probs.resize(features.rows(), 2);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    double s = model.bias;
    for (Eigen::Index j = 0; j < features.cols(); ++j)
      s += model.weights[j] * ((features(i, j) - model.feature_means[j]) / model.feature_scales[j]);
    const double p = Sigmoid(s);
    out.probs(i, 1) = p;
    out.probs(i, 0) = 1.0 - p;
  }
  return out;
}

std::optional<double> ConfidenceScore(const PredictionMatrix &predictions,
                                      std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size() ||
      truth.size() != static_cast<std::size_t>(predictions.rows()))
    Fail(ErrorCode::kInput, "confidence inputs differ in length");
  double sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] != predicted[i]) continue;
    const auto row = static_cast<Eigen::Index>(i);
    sum += std::max(predictions.probs(row, 0), predictions.probs(row, 1));
    ++correct;
  }
  if (correct == 0) return std::nullopt;
  return sum / static_cast<double>(correct);
}

double SelectionScore(double acc_trained, double acc_untrained) {
  return acc_trained * (1.0 + (0.5 - acc_untrained) / 0.5);
}

FeatureMatrix StackFeatures(std::span<const PooledVector> vectors) {
  if (vectors.empty()) return FeatureMatrix(0, 0);
  const std::size_t d = vectors.front().values.size();
  FeatureMatrix x(static_cast<Eigen::Index>(vectors.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].values.size() != d)
      Fail(ErrorCode::kInput, "pooled vectors differ in dimension");
    for (std::size_t j = 0; j < d; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vectors[i].values[j];
  }
  return x;
}

CrossValidationRun CrossValidateDetailed(const FeatureMatrix &features,
                                         std::span<const Sample> samples,
                                         const FoldAssignment &folds, const TrainConfig &config) {
  if (static_cast<std::size_t>(features.rows()) != samples.size())
    Fail(ErrorCode::kInput, "feature rows and samples differ in length");
  const int k = folds.k();
  std::vector<int> fold_of_row(samples.size());
  std::vector<std::vector<std::size_t>> test_rows(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    fold_of_row[i] = folds.FoldOf(samples[i].pair_id);
    test_rows[static_cast<std::size_t>(fold_of_row[i])].push_back(i);
  }
  for (int f = 0; f < k; ++f)
    if (test_rows[static_cast<std::size_t>(f)].empty())
      Fail(ErrorCode::kFold, "fold " + std::to_string(f) + " has no samples");

  CrossValidationRun run;
  ProbeResult &result = run.result;
  result.n_samples = samples.size();
  result.k_folds = k;
  result.config = config.Fingerprint();

  std::vector<double> fold_accuracy;
  std::vector<double> pooled_probs;
  std::vector<int> pooled_truth;
  std::size_t pooled_correct = 0, pooled_total = 0;

  for (int f = 0; f < k; ++f) {
    FoldOutcome outcome;
    outcome.fold = f;
    outcome.test_rows = test_rows[static_cast<std::size_t>(f)];
    std::vector<std::size_t> train_rows;
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (fold_of_row[i] != f) train_rows.push_back(i);

    FeatureMatrix train_x(static_cast<Eigen::Index>(train_rows.size()), features.cols());
    std::vector<int> train_y(train_rows.size());
    for (std::size_t r = 0; r < train_rows.size(); ++r) {
      train_x.row(static_cast<Eigen::Index>(r)) =
          features.row(static_cast<Eigen::Index>(train_rows[r]));
      train_y[r] = samples[train_rows[r]].label;
    }
    FeatureMatrix test_x(static_cast<Eigen::Index>(outcome.test_rows.size()), features.cols());
    std::vector<int> test_y(outcome.test_rows.size());
    for (std::size_t r = 0; r < outcome.test_rows.size(); ++r) {
      test_x.row(static_cast<Eigen::Index>(r)) =
          features.row(static_cast<Eigen::Index>(outcome.test_rows[r]));
      test_y[r] = samples[outcome.test_rows[r]].label;
    }

    try {
      outcome.model = FitLogistic(train_x, train_y, config);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kDegenerateData && e.code() != ErrorCode::kInput) throw;
      outcome.failed = true;
      outcome.message = e.what();
      ++result.failed_folds;
      run.folds.push_back(std::move(outcome));
      continue;
    }
    if (!outcome.model->converged) ++result.nonconverged_folds;

    const PredictionMatrix p = PredictProba(*outcome.model, test_x);
    const std::vector<int> predicted = p.HardLabels();
    std::size_t correct = 0;
    for (std::size_t r = 0; r < predicted.size(); ++r) {
      if (predicted[r] == test_y[r]) ++correct;
      pooled_probs.push_back(p.probs(static_cast<Eigen::Index>(r), 1));
      pooled_truth.push_back(test_y[r]);
    }
    outcome.accuracy = static_cast<double>(correct) / static_cast<double>(predicted.size());
    fold_accuracy.push_back(outcome.accuracy);
    pooled_correct += correct;
    pooled_total += predicted.size();
    run.folds.push_back(std::move(outcome));
  }

  if (fold_accuracy.empty()) {
    result.ok = false;
    result.accuracy_mean = std::nan("");
    result.accuracy_stderr = std::nan("");
    result.pooled_accuracy = std::nan("");
    result.note = "all folds failed";
    return run;
  }
  const double m = static_cast<double>(fold_accuracy.size());
  double sum = 0.0;
  for (double a : fold_accuracy) sum += a;
  result.accuracy_mean = sum / m;
  if (fold_accuracy.size() > 1) {
    double ss = 0.0;
    for (double a : fold_accuracy) ss += (a - result.accuracy_mean) * (a - result.accuracy_mean);
    result.accuracy_stderr = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
  }
  result.pooled_accuracy = static_cast<double>(pooled_correct) / static_cast<double>(pooled_total);

  PredictionMatrix pooled;
  pooled.probs.resize(static_cast<Eigen::Index>(pooled_probs.size()), 2);
  for (std::size_t i = 0; i < pooled_probs.size(); ++i) {
    pooled.probs(static_cast<Eigen::Index>(i), 1) = pooled_probs[i];
    pooled.probs(static_cast<Eigen::Index>(i), 0) = 1.0 - pooled_probs[i];
  }
  result.confidence = ConfidenceScore(pooled, pooled_truth, pooled.HardLabels());
  if (result.failed_folds > 0) {
    result.note = std::to_string(result.failed_folds) + " failed fold(s) excluded";
  }
  return run;
}

ProbeResult CrossValidate(const FeatureMatrix &features, std::span<const Sample> samples,
                          const FoldAssignment &folds, const TrainConfig &config) {
  return CrossValidateDetailed(features, samples, folds, config).result;
}

}  // namespace lprobe
