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

#include "lprobe/controls.hpp"

#include <algorithm>
#include <cmath>

#include "lprobe/error.hpp"
#include "lprobe/util.hpp"

namespace lprobe {

std::string_view ShareByName(ShareBy share_by) {
  switch (share_by) {
    case ShareBy::kPair: return "pair";
    case ShareBy::kBaseAudio: return "base_audio_id";
    case ShareBy::kNone: return "none";
  }
  return "?";
}

ShareBy ParseShareBy(std::string_view name) {
  if (name == "pair") return ShareBy::kPair;
  if (name == "base_audio_id") return ShareBy::kBaseAudio;
  if (name == "none") return ShareBy::kNone;
  Fail(ErrorCode::kArgument, "share_by must be pair, base_audio_id or none");
}

std::string_view MomentModeName(MomentMode mode) {
  return mode == MomentMode::kPerDimension ? "per_dim" : "scalar";
}

MomentMode ParseMomentMode(std::string_view name) {
  if (name == "per_dim") return MomentMode::kPerDimension;
  if (name == "scalar") return MomentMode::kScalar;
  Fail(ErrorCode::kArgument, "moment mode must be per_dim or scalar");
}

MatchedNoiseSpec EstimateNoiseSpec(std::span<const PooledVector> source, MomentMode mode,
                                   ShareBy share_by, std::uint64_t seed,
                                   std::string source_label) {
  if (source.empty()) Fail(ErrorCode::kInput, "no source vectors for moment estimation");
  const std::size_t d = source.front().values.size();
  MatchedNoiseSpec spec;
  spec.source = std::move(source_label);
  spec.seed = seed;
  spec.share_by = share_by;
  spec.mode = mode;
  spec.per_dim_mean.assign(d, 0.0);
  spec.per_dim_std.assign(d, 0.0);
  const double n = static_cast<double>(source.size());
  for (const PooledVector &v : source) {
    if (v.values.size() != d) Fail(ErrorCode::kInput, "source vectors differ in dimension");
    for (std::size_t j = 0; j < d; ++j) spec.per_dim_mean[j] += v.values[j];
  }
  for (double &m : spec.per_dim_mean) m /= n;
  for (const PooledVector &v : source)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = v.values[j] - spec.per_dim_mean[j];
      spec.per_dim_std[j] += c * c;
    }
  for (double &s : spec.per_dim_std) s = std::sqrt(s / n);

  if (mode == MomentMode::kScalar) {
    double mean = 0.0;
    for (double m : spec.per_dim_mean) mean += m;
    mean /= static_cast<double>(d);
    // Pooled variance over all coordinates = mean within-dim variance plus
    // the spread of the per-dimension means.
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = spec.per_dim_mean[j] - mean;
      var += spec.per_dim_std[j] * spec.per_dim_std[j] + c * c;
    }
    var /= static_cast<double>(d);
    spec.per_dim_mean.assign(d, mean);
    spec.per_dim_std.assign(d, std::sqrt(var));
  }
  for (double &s : spec.per_dim_std) {
    if (s < kMinNoiseStd) {
      s = kMinNoiseStd;
      ++spec.floored_dims;
    }
  }
  return spec;
}

std::vector<PooledVector> MatchedRandomFeatures(const MatchedNoiseSpec &spec,
                                                std::span<const MinimalPair *const> pairs,
                                                int layer) {
  if (spec.per_dim_mean.size() != spec.per_dim_std.size() || spec.per_dim_mean.empty())
    Fail(ErrorCode::kArgument, "noise spec moments are malformed");
  const std::size_t d = spec.per_dim_mean.size();
  auto draw = [&](const std::string &key, const std::string &utterance_id) {
    Rng rng(MixSeed(spec.seed, StableHash(key)));
    PooledVector v;
    v.utterance_id = utterance_id;
    v.layer = layer;
    v.condition = Condition::RandomControl();
    v.values.resize(d);
    for (std::size_t j = 0; j < d; ++j)
      v.values[j] = spec.per_dim_mean[j] + std::max(spec.per_dim_std[j], kMinNoiseStd) * rng.Normal();
    return v;
  };
  std::vector<PooledVector> out;
  out.reserve(2 * pairs.size());
  for (const MinimalPair *pair : pairs) {
    for (const Utterance *u : {&pair->pos, &pair->neg}) {
      std::string key;
      switch (spec.share_by) {
        case ShareBy::kPair: key = "pair:" + pair->id; break;
        case ShareBy::kBaseAudio:
          key = u->base_audio_id ? "audio:" + *u->base_audio_id : "pair:" + pair->id;
          break;
        case ShareBy::kNone: key = "utt:" + u->id; break;
      }
      out.push_back(draw(key, u->id));
    }
  }
  return out;
}

double Quantile(std::vector<double> values, double q) {
  if (values.empty()) Fail(ErrorCode::kInput, "quantile of empty data");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

ChanceBand SimulateChanceBand(std::size_t n_samples, int k_folds, int n_trials,
                              std::uint64_t seed, int dim, const TrainConfig &config) {
  if (n_trials < 20) Fail(ErrorCode::kArgument, "chance band needs at least 20 trials");
  if (dim < 1) Fail(ErrorCode::kArgument, "chance band dimension must be positive");
  const std::size_t n_pairs = n_samples / 2;
  if (n_pairs < static_cast<std::size_t>(k_folds))
    Fail(ErrorCode::kInsufficientData, "too few samples for the fold count");

  std::vector<std::string> pair_ids(n_pairs);
  std::vector<Sample> samples;
  samples.reserve(2 * n_pairs);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    pair_ids[p] = "p" + std::to_string(p);
    samples.push_back({pair_ids[p], 1});
    samples.push_back({pair_ids[p], 0});
  }
  ChanceBand band;
  for (int trial = 0; trial < n_trials; ++trial) {
    const std::uint64_t trial_seed = MixSeed(seed, static_cast<std::uint64_t>(trial));
    Rng rng(trial_seed);
    FeatureMatrix x(static_cast<Eigen::Index>(samples.size()), dim);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.Normal();
    const FoldAssignment folds = AssignFoldsForPairs(pair_ids, k_folds, MixSeed(trial_seed, 1));
    const ProbeResult r = CrossValidate(x, samples, folds, config);
    band.trial_accuracies.push_back(r.accuracy_mean);
  }
  band.lower = Quantile(band.trial_accuracies, 0.025);
  band.upper = Quantile(band.trial_accuracies, 0.975);
  return band;
}

}  // namespace lprobe
