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

#ifndef LPROBE_ANALYSIS_HPP_
#define LPROBE_ANALYSIS_HPP_

#include <Eigen/Dense>

#include <map>
#include <span>
#include <string>
#include <vector>

#include "lprobe/corpus.hpp"
#include "lprobe/embedding_store.hpp"
#include "lprobe/pooling.hpp"
#include "lprobe/probe.hpp"

namespace lprobe {

using TaskLevels = std::map<std::string, LinguisticLevel, std::less<>>;

TaskLevels TaskLevelsOf(const CorpusManifest &manifest);

struct CurvePoint {
  double accuracy = 0.0;
  double std_error = 0.0;
};

// Accuracy by layer for one task, or the macro-average of a level's tasks.
struct LayerCurve {
  std::string key;  // task id, or level name when is_level
  bool is_level = false;
  LinguisticLevel level = LinguisticLevel::kSyntax;
  Condition condition = Condition::Mean();
  int first_layer = 0;
  std::vector<CurvePoint> points;  // points[i] is layer first_layer + i

  int last_layer() const { return first_layer + static_cast<int>(points.size()) - 1; }
};

struct CurveSet {
  std::vector<LayerCurve> tasks;   // sorted by task id
  std::vector<LayerCurve> levels;  // in LinguisticLevel order, present levels only
};

// Results must share one condition and cover the same contiguous layer
// range for every task (kGap lists the missing or failed cells otherwise).
// A level's value at a layer is the unweighted mean over its tasks; its
// stderr is sqrt(sum se^2) / n_tasks.
CurveSet BuildLayerCurves(std::span<const ProbeResult> results, const TaskLevels &levels);

struct Peak {
  std::string key;
  bool is_level = false;
  Condition condition = Condition::Mean();
  double accuracy = 0.0;
  int layer = 0;
};

// Max over the curve; ties go to the shallower layer.
Peak PeakAccuracy(const LayerCurve &curve);
std::vector<Peak> PeakAccuracy(const CurveSet &curves);

struct DeltaEmbedding {
  std::string pair_id;
  std::string task;
  LinguisticLevel level = LinguisticLevel::kSyntax;
  int layer = 0;
  Condition condition = Condition::Mean();
  std::vector<double> delta;  // acceptable minus unacceptable
};

DeltaEmbedding DeltaFromPooled(const MinimalPair &pair, LinguisticLevel level,
                               const PooledVector &pos, const PooledVector &neg);

struct DeltaSet {
  std::vector<DeltaEmbedding> deltas;
  std::size_t skipped = 0;
};

// Pairs with a member absent from the store are skipped and counted; fewer
// than 95% surviving raises kInsufficientData.
DeltaSet DeltaEmbeddings(const EmbeddingStore &store, const CorpusManifest &manifest, int layer,
                         Condition condition);

inline constexpr double kMinPairSurvival = 0.95;

struct ProjectedPoint {
  std::string pair_id;
  std::string level;
  std::string task;
  double x = 0.0;
  double y = 0.0;
};

struct Projection {
  std::vector<ProjectedPoint> points;
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // d x 2, columns ordered by eigenvalue
  Eigen::VectorXd eigenvalues;  // all, descending
  double explained_share = 0.0;  // top-2 variance share
  bool degenerate = false;       // fewer than two nonzero eigenvalues
};

// Deterministic PCA to two axes: mean-centred, components by descending
// eigenvalue, each signed so its largest-magnitude loading is positive.
// Needs at least three rows (kInsufficientData).
Projection ProjectRows(const Eigen::MatrixXd &rows);
Projection Project2d(std::span<const DeltaEmbedding> deltas);

// Mean silhouette coefficient with Euclidean distance; singleton clusters
// contribute 0.
double SilhouetteScore(const Eigen::MatrixXd &points, std::span<const int> labels);

// Externally computed coordinates (pair_id, level, task, x, y); rows must
// name distinct pairs.
std::vector<ProjectedPoint> ImportProjection(const std::string &path);
void WriteProjection(std::span<const ProjectedPoint> points, const std::string &path);

struct TemporalPoint {
  std::int64_t offset_ms = 0;
  double accuracy = 0.0;
  double std_error = 0.0;
};

struct TemporalProfile {
  std::string key;  // level name, or task id
  bool is_level = true;
  std::vector<TemporalPoint> points;  // ascending offset
  std::int64_t argmax_offset = 0;     // ties: smallest |offset|, then earlier
};

struct TemporalProfileSet {
  std::vector<TemporalProfile> tasks;
  std::vector<TemporalProfile> levels;
};

// Temporal-condition results only; every task must cover every offset seen
// in the set (kGap otherwise).
TemporalProfileSet BuildTemporalProfiles(std::span<const ProbeResult> results,
                                         const TaskLevels &levels);

std::int64_t ArgmaxOffset(std::span<const TemporalPoint> points);

// Single-token versus mean pooling: for each level, macro-averaged accuracy
// of every condition at the level's best mean-pool layer.
struct PositionComparison {
  LinguisticLevel level = LinguisticLevel::kSyntax;
  int best_mean_layer = 0;
  std::vector<std::pair<Condition, double>> accuracy;
};

std::vector<PositionComparison> ComparePositions(std::span<const ProbeResult> results,
                                                 const TaskLevels &levels);

}  // namespace lprobe

#endif  // LPROBE_ANALYSIS_HPP_
