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

#include "lprobe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "lprobe/error.hpp"
#include "lprobe/table.hpp"
#include "lprobe/util.hpp"

namespace lprobe {

TaskLevels TaskLevelsOf(const CorpusManifest &manifest) {
  TaskLevels out;
  for (const Phenomenon &p : manifest.phenomena()) out.emplace(p.id, p.level);
  return out;
}

namespace {

LinguisticLevel LevelOfTask(const TaskLevels &levels, const std::string &task) {
  auto it = levels.find(task);
  if (it == levels.end()) Fail(ErrorCode::kLookup, "task '" + task + "' has no level");
  return it->second;
}

// Macro-average over tasks: mean accuracy, stderr = sqrt(sum se^2) / n.
CurvePoint MacroAverage(std::span<const CurvePoint> points) {
  double acc = 0.0, var = 0.0;
  for (const CurvePoint &p : points) {
    acc += p.accuracy;
    var += p.std_error * p.std_error;
  }
  const double n = static_cast<double>(points.size());
  return {acc / n, std::sqrt(var) / n};
}

}  // namespace

CurveSet BuildLayerCurves(std::span<const ProbeResult> results, const TaskLevels &levels) {
  if (results.empty()) Fail(ErrorCode::kArgument, "no results to build curves from");
  const Condition condition = results.front().condition;
  std::map<std::string, std::map<int, const ProbeResult *>> by_task;
  std::set<int> layers;
  for (const ProbeResult &r : results) {
    if (r.condition != condition)
      Fail(ErrorCode::kArgument, "layer curves need a single condition, got " +
                                     condition.Label() + " and " + r.condition.Label());
    if (!by_task[r.task].emplace(r.layer, &r).second)
      Fail(ErrorCode::kArgument, "duplicate result for task '" + r.task + "' layer " +
                                     std::to_string(r.layer));
    layers.insert(r.layer);
  }
  const int first = *layers.begin();
  const int last = *layers.rbegin();
  std::string missing;
  for (const auto &[task, per_layer] : by_task) {
    for (int l = first; l <= last; ++l) {
      auto it = per_layer.find(l);
      if (it == per_layer.end() || !it->second->ok)
        missing += " (" + task + ", " + std::to_string(l) + ")";
    }
  }
  if (!missing.empty()) Fail(ErrorCode::kGap, "missing or failed layer results:" + missing);

  CurveSet out;
  std::map<LinguisticLevel, std::vector<const LayerCurve *>> level_members;
  out.tasks.reserve(by_task.size());
  for (const auto &[task, per_layer] : by_task) {
    LayerCurve curve;
    curve.key = task;
    curve.level = LevelOfTask(levels, task);
    curve.condition = condition;
    curve.first_layer = first;
    for (int l = first; l <= last; ++l) {
      const ProbeResult *r = per_layer.at(l);
      curve.points.push_back({r->accuracy_mean, r->accuracy_stderr});
    }
    out.tasks.push_back(std::move(curve));
  }
  for (const LayerCurve &c : out.tasks) level_members[c.level].push_back(&c);
  for (const auto &[level, members] : level_members) {
    LayerCurve curve;
    curve.key = std::string(LevelName(level));
    curve.is_level = true;
    curve.level = level;
    curve.condition = condition;
    curve.first_layer = first;
    for (std::size_t i = 0; i < members.front()->points.size(); ++i) {
      std::vector<CurvePoint> column;
      for (const LayerCurve *m : members) column.push_back(m->points[i]);
      curve.points.push_back(MacroAverage(column));
    }
    out.levels.push_back(std::move(curve));
  }
  return out;
}

Peak PeakAccuracy(const LayerCurve &curve) {
  if (curve.points.empty()) Fail(ErrorCode::kArgument, "peak of an empty curve");
  Peak peak;
  peak.key = curve.key;
  peak.is_level = curve.is_level;
  peak.condition = curve.condition;
  peak.accuracy = curve.points.front().accuracy;
  peak.layer = curve.first_layer;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    if (curve.points[i].accuracy > peak.accuracy) {
      peak.accuracy = curve.points[i].accuracy;
      peak.layer = curve.first_layer + static_cast<int>(i);
    }
  }
  return peak;
}

std::vector<Peak> PeakAccuracy(const CurveSet &curves) {
  std::vector<Peak> out;
  for (const LayerCurve &c : curves.tasks) out.push_back(PeakAccuracy(c));
  for (const LayerCurve &c : curves.levels) out.push_back(PeakAccuracy(c));
  return out;
}

// ---------------------------------------------------------------------------
// Delta embeddings and projection

DeltaEmbedding DeltaFromPooled(const MinimalPair &pair, LinguisticLevel level,
                               const PooledVector &pos, const PooledVector &neg) {
  if (pos.values.size() != neg.values.size())
    Fail(ErrorCode::kInput, "pair '" + pair.id + "' members differ in dimension");
  if (pos.layer != neg.layer || pos.condition != neg.condition)
    Fail(ErrorCode::kInput, "pair '" + pair.id + "' members pooled differently");
  DeltaEmbedding d;
  d.pair_id = pair.id;
  d.task = pair.phenomenon_id;
  d.level = level;
  d.layer = pos.layer;
  d.condition = pos.condition;
  d.delta.resize(pos.values.size());
  for (std::size_t j = 0; j < d.delta.size(); ++j) d.delta[j] = pos.values[j] - neg.values[j];
  for (double v : d.delta)
    if (!std::isfinite(v)) Fail(ErrorCode::kInput, "non-finite delta for '" + pair.id + "'");
  return d;
}

DeltaSet DeltaEmbeddings(const EmbeddingStore &store, const CorpusManifest &manifest, int layer,
                         Condition condition) {
  if (layer < 0 || layer >= store.header().num_layers())
    Fail(ErrorCode::kRange, "layer " + std::to_string(layer) + " not in store");
  const FrameRate rate = store.header().frame_rate[static_cast<std::size_t>(layer)];
  DeltaSet out;
  for (const MinimalPair &pair : manifest.pairs()) {
    const AlignmentSpan *pos_onset = manifest.FindAlignment(pair.pos.id);
    const AlignmentSpan *neg_onset = manifest.FindAlignment(pair.neg.id);
    const bool needs_onset = condition.kind() == Condition::Kind::kTemporal;
    if (!store.Contains(pair.pos.id) || !store.Contains(pair.neg.id) ||
        (needs_onset && (pos_onset == nullptr || neg_onset == nullptr))) {
      ++out.skipped;
      continue;
    }
    const PooledVector pos =
        PoolForCondition(store.ReadLayer(pair.pos.id, layer), condition, pos_onset, rate);
    const PooledVector neg =
        PoolForCondition(store.ReadLayer(pair.neg.id, layer), condition, neg_onset, rate);
    out.deltas.push_back(
        DeltaFromPooled(pair, manifest.FindPhenomenon(pair.phenomenon_id)->level, pos, neg));
  }
  const std::size_t total = manifest.pairs().size();
  if (total == 0 ||
      static_cast<double>(out.deltas.size()) < kMinPairSurvival * static_cast<double>(total))
    Fail(ErrorCode::kInsufficientData,
         std::to_string(out.skipped) + " of " + std::to_string(total) +
             " pairs lack embeddings; at least 95% must survive");
  return out;
}

Projection ProjectRows(const Eigen::MatrixXd &rows) {
  if (rows.rows() < 3) Fail(ErrorCode::kInsufficientData, "projection needs at least 3 vectors");
  if (!rows.allFinite()) Fail(ErrorCode::kInput, "non-finite projection input");
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = rows.cols();
  Projection out;
  out.mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - out.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) Fail(ErrorCode::kInternal, "eigendecomposition failed");
  // Eigen returns ascending order.
  out.eigenvalues = solver.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  out.components = Eigen::MatrixXd::Zero(d, 2);
  const double top = std::max(out.eigenvalues[0], 0.0);
  const double threshold = 1e-12 * std::max(1.0, top);
  int nonzero = 0;
  for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i)
    if (out.eigenvalues[i] > threshold) ++nonzero;
  out.degenerate = nonzero < 2;
  for (int c = 0; c < std::min<Eigen::Index>(2, d); ++c) {
    if (c >= nonzero) break;
    Eigen::VectorXd v = vectors.col(c);
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < d; ++j)
      if (std::abs(v[j]) > std::abs(v[arg])) arg = j;
    if (v[arg] < 0) v = -v;
    out.components.col(c) = v;
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i) total += std::max(out.eigenvalues[i], 0.0);
  double kept = 0.0;
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(2, d); ++i)
    kept += std::max(out.eigenvalues[i], 0.0);
  out.explained_share = total > 0 ? kept / total : 0.0;

  const Eigen::MatrixXd coords = centered * out.components;
  out.points.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    out.points[static_cast<std::size_t>(i)].x = coords(i, 0);
    out.points[static_cast<std::size_t>(i)].y = coords(i, 1);
  }
  return out;
}

Projection Project2d(std::span<const DeltaEmbedding> deltas) {
  if (deltas.size() < 3) Fail(ErrorCode::kInsufficientData, "projection needs at least 3 vectors");
  const std::size_t d = deltas.front().delta.size();
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(deltas.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (deltas[i].delta.size() != d) Fail(ErrorCode::kInput, "deltas differ in dimension");
    for (std::size_t j = 0; j < d; ++j)
      rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = deltas[i].delta[j];
  }
  Projection out = ProjectRows(rows);
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    out.points[i].pair_id = deltas[i].pair_id;
    out.points[i].level = std::string(LevelName(deltas[i].level));
    out.points[i].task = deltas[i].task;
  }
  return out;
}

double SilhouetteScore(const Eigen::MatrixXd &points, std::span<const int> labels) {
  const Eigen::Index n = points.rows();
  if (static_cast<std::size_t>(n) != labels.size())
    Fail(ErrorCode::kInput, "silhouette labels do not match points");
  if (n < 2) Fail(ErrorCode::kInsufficientData, "silhouette needs at least two points");
  std::map<int, double> cluster_size;
  for (int l : labels) cluster_size[l] += 1.0;
  if (cluster_size.size() < 2) Fail(ErrorCode::kInsufficientData, "silhouette needs two clusters");
  double total = 0.0;
  std::map<int, double> dist_sum;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int own = labels[static_cast<std::size_t>(i)];
    if (cluster_size[own] <= 1.0) continue;
    for (auto &[label, sum] : dist_sum) sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      dist_sum[labels[static_cast<std::size_t>(j)]] += (points.row(i) - points.row(j)).norm();
    }
    const double a = dist_sum[own] / (cluster_size[own] - 1.0);
    double b = std::numeric_limits<double>::infinity();
    for (const auto &[label, sum] : dist_sum)
      if (label != own && cluster_size[label] > 0) b = std::min(b, sum / cluster_size[label]);
    const double denom = std::max(a, b);
    total += denom > 0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

std::vector<ProjectedPoint> ImportProjection(const std::string &path) {
  const Table table = ReadTsv(path);
  const std::size_t c_pair = table.Column("pair_id"), c_level = table.Column("level"),
                    c_task = table.Column("task"), c_x = table.Column("x"),
                    c_y = table.Column("y");
  std::vector<ProjectedPoint> out;
  std::set<std::string> seen;
  for (const auto &row : table.rows) {
    ProjectedPoint p{row[c_pair], row[c_level], row[c_task], ParseDouble(row[c_x]),
                     ParseDouble(row[c_y])};
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      Fail(ErrorCode::kParse, path + ": non-finite coordinate for '" + p.pair_id + "'");
    ParseLevel(p.level);
    if (!seen.insert(p.pair_id).second)
      Fail(ErrorCode::kParse, path + ": duplicate pair '" + p.pair_id + "'");
    out.push_back(std::move(p));
  }
  return out;
}

void WriteProjection(std::span<const ProjectedPoint> points, const std::string &path) {
  Table table;
  table.columns = {"pair_id", "level", "task", "x", "y"};
  for (const ProjectedPoint &p : points)
    table.AddRow({p.pair_id, p.level, p.task, FormatDouble(p.x), FormatDouble(p.y)});
  WriteTsv(table, path);
}

// ---------------------------------------------------------------------------
// Temporal profiles

std::int64_t ArgmaxOffset(std::span<const TemporalPoint> points) {
  if (points.empty()) Fail(ErrorCode::kArgument, "empty temporal profile");
  const TemporalPoint *best = &points.front();
  for (const TemporalPoint &p : points) {
    if (p.accuracy > best->accuracy) {
      best = &p;
    } else if (p.accuracy == best->accuracy) {
      const auto a = std::llabs(p.offset_ms), b = std::llabs(best->offset_ms);
      if (a < b || (a == b && p.offset_ms < best->offset_ms)) best = &p;
    }
  }
  return best->offset_ms;
}

TemporalProfileSet BuildTemporalProfiles(std::span<const ProbeResult> results,
                                         const TaskLevels &levels) {
  std::map<std::string, std::map<std::int64_t, const ProbeResult *>> by_task;
  std::set<std::int64_t> offsets;
  for (const ProbeResult &r : results) {
    if (r.condition.kind() != Condition::Kind::kTemporal) continue;
    if (!by_task[r.task].emplace(r.condition.offset_ms(), &r).second)
      Fail(ErrorCode::kArgument, "duplicate temporal result for task '" + r.task + "'");
    offsets.insert(r.condition.offset_ms());
  }
  if (by_task.empty()) Fail(ErrorCode::kArgument, "no temporal results");
  std::string missing;
  for (const auto &[task, per_offset] : by_task)
    for (std::int64_t o : offsets) {
      auto it = per_offset.find(o);
      if (it == per_offset.end() || !it->second->ok)
        missing += " (" + task + ", t:" + std::to_string(o) + ")";
    }
  if (!missing.empty()) Fail(ErrorCode::kGap, "incomplete temporal grid:" + missing);

  TemporalProfileSet out;
  std::map<LinguisticLevel, std::vector<const TemporalProfile *>> members;
  for (const auto &[task, per_offset] : by_task) {
    TemporalProfile profile;
    profile.key = task;
    profile.is_level = false;
    for (std::int64_t o : offsets) {
      const ProbeResult *r = per_offset.at(o);
      profile.points.push_back({o, r->accuracy_mean, r->accuracy_stderr});
    }
    profile.argmax_offset = ArgmaxOffset(profile.points);
    out.tasks.push_back(std::move(profile));
  }
  for (const TemporalProfile &p : out.tasks) members[LevelOfTask(levels, p.key)].push_back(&p);
  for (const auto &[level, profiles] : members) {
    TemporalProfile profile;
    profile.key = std::string(LevelName(level));
    for (std::size_t i = 0; i < profiles.front()->points.size(); ++i) {
      std::vector<CurvePoint> column;
      for (const TemporalProfile *p : profiles)
        column.push_back({p->points[i].accuracy, p->points[i].std_error});
      const CurvePoint avg = MacroAverage(column);
      profile.points.push_back({profiles.front()->points[i].offset_ms, avg.accuracy, avg.std_error});
    }
    profile.argmax_offset = ArgmaxOffset(profile.points);
    out.levels.push_back(std::move(profile));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Positional comparison

std::vector<PositionComparison> ComparePositions(std::span<const ProbeResult> results,
                                                 const TaskLevels &levels) {
  std::vector<ProbeResult> mean_results;
  std::map<std::tuple<std::string, int, Condition>, const ProbeResult *> cells;
  std::set<Condition> conditions;
  for (const ProbeResult &r : results) {
    if (r.condition.kind() == Condition::Kind::kMean) mean_results.push_back(r);
    if (r.condition.kind() == Condition::Kind::kMean ||
        r.condition.kind() == Condition::Kind::kPosition) {
      cells[{r.task, r.layer, r.condition}] = &r;
      conditions.insert(r.condition);
    }
  }
  if (mean_results.empty()) Fail(ErrorCode::kArgument, "positional comparison needs mean results");
  const CurveSet curves = BuildLayerCurves(mean_results, levels);
  std::vector<PositionComparison> out;
  std::string missing;
  for (const LayerCurve &level_curve : curves.levels) {
    PositionComparison cmp;
    cmp.level = level_curve.level;
    cmp.best_mean_layer = PeakAccuracy(level_curve).layer;
    for (const Condition &c : conditions) {
      std::vector<CurvePoint> column;
      for (const LayerCurve &task_curve : curves.tasks) {
        if (task_curve.level != cmp.level) continue;
        auto it = cells.find({task_curve.key, cmp.best_mean_layer, c});
        if (it == cells.end() || !it->second->ok) {
          missing += " (" + task_curve.key + ", " + std::to_string(cmp.best_mean_layer) + ", " +
                     c.Label() + ")";
          continue;
        }
        column.push_back({it->second->accuracy_mean, 0.0});
      }
      if (!column.empty()) cmp.accuracy.emplace_back(c, MacroAverage(column).accuracy);
    }
    out.push_back(std::move(cmp));
  }
  if (!missing.empty()) Fail(ErrorCode::kGap, "positional results missing:" + missing);
  return out;
}

}  // namespace lprobe
