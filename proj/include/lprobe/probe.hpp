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

#ifndef LPROBE_PROBE_HPP_
#define LPROBE_PROBE_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lprobe/corpus.hpp"
#include "lprobe/pooling.hpp"

namespace lprobe {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TrainConfig {
  // Objective: sum of per-sample log-loss + l2_strength / 2 * ||w||^2 (bias
  // unpenalized), minimized on standardized features when `standardize`.
  double l2_strength = 1.0;
  int max_iterations = 500;
  double convergence_tol = 1e-6;  // on the gradient max-norm
  bool standardize = true;
  std::uint64_t seed = 0;
  // Full Newton steps up to this many parameters, L-BFGS above it.
  int newton_max_params = 513;

  // Stable text form recorded in every result row.
  std::string Fingerprint() const;
};

struct ProbeModel {
  Eigen::VectorXd weights;         // in standardized feature space
  double bias = 0.0;
  Eigen::VectorXd feature_means;   // zeros when standardize=false
  Eigen::VectorXd feature_scales;  // ones when standardize=false; always > 0
  bool converged = false;
  int iterations = 0;
  double gradient_max_norm = 0.0;
  // Objective value at the start and after every accepted step.
  std::vector<double> objective_trace;

  Eigen::Index dim() const { return weights.size(); }
};

// Throws kDegenerateData (single class), kInput (non-finite X, shape
// mismatch), kArgument (bad config). Non-convergence sets converged=false.
ProbeModel FitLogistic(const FeatureMatrix &features, std::span<const int> labels,
                       const TrainConfig &config);

// Regularized negative log-likelihood in the model's standardized space;
// exposed for optimizer checks and oracles.
double LogisticObjective(const FeatureMatrix &standardized, std::span<const int> labels,
                         const Eigen::VectorXd &weights, double bias, double l2_strength);

// n x 2; column 1 is P(acceptable).
struct PredictionMatrix {
  Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> probs;

  Eigen::Index rows() const { return probs.rows(); }
  // Row-wise argmax; exact ties go to class 0.
  std::vector<int> HardLabels() const;
};

PredictionMatrix PredictProba(const ProbeModel &model, const FeatureMatrix &features);

// Mean of max_j P(i, j) over correctly classified rows; nullopt when no row
// is correct.
std::optional<double> ConfidenceScore(const PredictionMatrix &predictions,
                                      std::span<const int> truth, std::span<const int> predicted);

// acc_trained * (1 + (0.5 - acc_untrained) / 0.5)
double SelectionScore(double acc_trained, double acc_untrained);

// One row of the design matrix: which pair it belongs to and its label.
struct Sample {
  std::string pair_id;
  int label = 0;
};

struct ProbeResult {
  std::string task;
  int layer = 0;
  Condition condition = Condition::Mean();
  bool ok = true;
  double accuracy_mean = 0.0;
  double accuracy_stderr = 0.0;
  double pooled_accuracy = 0.0;
  std::optional<double> confidence;
  std::size_t n_samples = 0;
  int k_folds = 0;
  int failed_folds = 0;
  int nonconverged_folds = 0;
  std::string config;
  std::string note;
};

struct ScoreReport {
  std::string task;
  int layer = 0;
  Condition condition = Condition::Mean();
  double acc_trained = 0.0;
  double acc_untrained = 0.0;
  double selection = 0.0;
};

struct FoldOutcome {
  int fold = 0;
  bool failed = false;
  std::string message;
  std::optional<ProbeModel> model;
  std::vector<std::size_t> test_rows;
  double accuracy = 0.0;
};

struct CrossValidationRun {
  ProbeResult result;
  std::vector<FoldOutcome> folds;
};

// Pair-grouped k-fold cross-validation. Each fold's standardization and
// weights come from its training rows only. Throws kFold when a fold has no
// test rows and kInput on shape mismatches; degenerate training folds are
// recorded as failed and excluded from the mean.
CrossValidationRun CrossValidateDetailed(const FeatureMatrix &features,
                                         std::span<const Sample> samples,
                                         const FoldAssignment &folds, const TrainConfig &config);

ProbeResult CrossValidate(const FeatureMatrix &features, std::span<const Sample> samples,
                          const FoldAssignment &folds, const TrainConfig &config);

// Stacks pooled vectors into a design matrix (rows in input order).
FeatureMatrix StackFeatures(std::span<const PooledVector> vectors);

}  // namespace lprobe

#endif  // LPROBE_PROBE_HPP_
