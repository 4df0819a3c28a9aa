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

#ifndef LPROBE_POOLING_HPP_
#define LPROBE_POOLING_HPP_

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lprobe/corpus.hpp"
#include "lprobe/embedding_store.hpp"

namespace lprobe {

// What a sentence vector was derived from. Labels: "mean", "pos:<p>",
// "t:<offset_ms>", "ctrl:randemb".
class Condition {
 public:
  enum class Kind { kMean = 0, kPosition = 1, kTemporal = 2, kRandomControl = 3 };

  static Condition Mean() { return Condition(Kind::kMean, 0); }
  // p must be one of 0, 0.25, 0.5, 0.75, 1 (kArgument otherwise).
  static Condition Position(double p);
  static Condition PositionQuarter(int quarter);
  static Condition Temporal(std::int64_t offset_ms) { return Condition(Kind::kTemporal, offset_ms); }
  static Condition RandomControl() { return Condition(Kind::kRandomControl, 0); }
  static Condition Parse(std::string_view label);  // kArgument on bad labels

  Kind kind() const { return kind_; }
  int quarter() const { return static_cast<int>(value_); }
  std::int64_t offset_ms() const { return value_; }
  double position() const { return static_cast<double>(value_) / 4.0; }
  std::string Label() const;

  auto operator<=>(const Condition &) const = default;

 private:
  Condition(Kind kind, std::int64_t value) : kind_(kind), value_(value) {}
  Kind kind_;
  std::int64_t value_;
};

struct PooledVector {
  std::string utterance_id;
  int layer = 0;
  Condition condition = Condition::Mean();
  std::vector<double> values;
};

// Offsets (ms) around the critical-word onset; sorted, symmetric, holds 0,
// all within +-1000.
struct TemporalGrid {
  std::vector<std::int64_t> offsets_ms;

  // {+-1000, +-800, +-600, +-500, +-400, +-300, +-200, +-100, +-50, 0}
  static TemporalGrid Default();
  void Check() const;  // kArgument
};

PooledVector MeanPool(const LayerTensor &tensor);

// round_half_up(quarter / 4 * (frames - 1)), computed in integers.
std::int64_t PositionalIndex(std::int64_t frames, int quarter);
PooledVector PositionalToken(const LayerTensor &tensor, double p);

// One single-frame vector per grid offset, taken at
// FrameIndexForTime(onset + offset). Throws kAlignmentMissing if `onset` is null.
std::vector<PooledVector> TemporalSamples(const LayerTensor &tensor, const AlignmentSpan *onset,
                                          const TemporalGrid &grid, FrameRate rate);

// Sentence vector for a mean, positional or temporal condition. `onset` is
// only consulted (and required) for temporal conditions.
PooledVector PoolForCondition(const LayerTensor &tensor, Condition condition,
                              const AlignmentSpan *onset, FrameRate rate);

}  // namespace lprobe

#endif  // LPROBE_POOLING_HPP_
