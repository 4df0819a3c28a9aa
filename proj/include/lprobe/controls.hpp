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

#ifndef LPROBE_CONTROLS_HPP_
#define LPROBE_CONTROLS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lprobe/corpus.hpp"
#include "lprobe/pooling.hpp"
#include "lprobe/probe.hpp"

namespace lprobe {

// Which utterances receive the same random vector.
enum class ShareBy { kPair, kBaseAudio, kNone };
enum class MomentMode { kPerDimension, kScalar };

std::string_view ShareByName(ShareBy share_by);
ShareBy ParseShareBy(std::string_view name);
std::string_view MomentModeName(MomentMode mode);
MomentMode ParseMomentMode(std::string_view name);

inline constexpr double kMinNoiseStd = 1e-12;

struct MatchedNoiseSpec {
  std::string source;  // e.g. "<model>/layer=3/mean"
  std::vector<double> per_dim_mean;
  std::vector<double> per_dim_std;  // each >= kMinNoiseStd
  std::uint64_t seed = 0;
  ShareBy share_by = ShareBy::kPair;
  MomentMode mode = MomentMode::kPerDimension;
  int floored_dims = 0;  // dimensions whose std was raised to the floor
};

// Moments of the source sentence vectors (population std). Scalar mode pools
// every coordinate into one mean/std broadcast over all dimensions.
MatchedNoiseSpec EstimateNoiseSpec(std::span<const PooledVector> source, MomentMode mode,
                                   ShareBy share_by, std::uint64_t seed,
                                   std::string source_label = {});

// One vector per member of each pair (pos, then neg, in `pairs` order), with
// condition ctrl:randemb. Each sharing key draws from its own counter-seeded
// stream, so output does not depend on iteration order.
std::vector<PooledVector> MatchedRandomFeatures(const MatchedNoiseSpec &spec,
                                                std::span<const MinimalPair *const> pairs,
                                                int layer = 0);

struct ChanceBand {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> trial_accuracies;
};

// Central 95% interval of cross-validated accuracy on label-independent
// Gaussian features, by simulation over `n_trials` seeds. `n_samples` counts
// sentences (two per pair). Throws kArgument when n_trials < 20.
ChanceBand SimulateChanceBand(std::size_t n_samples, int k_folds, int n_trials,
                              std::uint64_t seed, int dim = 32, const TrainConfig &config = {});

// Linear-interpolated quantile of unsorted data, q in [0, 1].
double Quantile(std::vector<double> values, double q);

}  // namespace lprobe

#endif  // LPROBE_CONTROLS_HPP_
