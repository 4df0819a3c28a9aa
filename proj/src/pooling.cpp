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

#include "lprobe/pooling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "lprobe/error.hpp"

namespace lprobe {

namespace {

constexpr std::int64_t kMaxOffsetMs = 1000;

PooledVector Row(const LayerTensor &tensor, std::int64_t t, Condition condition) {
  PooledVector out;
  out.utterance_id = tensor.utterance_id;
  out.layer = tensor.layer;
  out.condition = condition;
  auto row = tensor.row(t);
  out.values.assign(row.begin(), row.end());
  return out;
}

void RequireFrames(const LayerTensor &tensor) {
  if (tensor.frames < 1 || tensor.dim < 1 ||
      tensor.data.size() != static_cast<std::size_t>(tensor.frames * tensor.dim))
    Fail(ErrorCode::kInput, "tensor for '" + tensor.utterance_id + "' is empty or malformed");
}

}  // namespace

Condition Condition::Position(double p) {
  for (int q = 0; q <= 4; ++q)
    if (p == static_cast<double>(q) / 4.0) return PositionQuarter(q);
  Fail(ErrorCode::kArgument, "position must be one of 0, 0.25, 0.5, 0.75, 1");
}

Condition Condition::PositionQuarter(int quarter) {
  if (quarter < 0 || quarter > 4) Fail(ErrorCode::kArgument, "position quarter out of range");
  return Condition(Kind::kPosition, quarter);
}

std::string Condition::Label() const {
  switch (kind_) {
    case Kind::kMean: return "mean";
    case Kind::kPosition: {
      static constexpr const char *kNames[] = {"0", "0.25", "0.5", "0.75", "1"};
      return std::string("pos:") + kNames[value_];
    }
    case Kind::kTemporal: return "t:" + std::to_string(value_);
    case Kind::kRandomControl: return "ctrl:randemb";
  }
  return "?";
}

Condition Condition::Parse(std::string_view label) {
  if (label == "mean") return Mean();
  if (label == "ctrl:randemb") return RandomControl();
  if (label.starts_with("pos:")) {
    std::string_view rest = label.substr(4);
    double p = 0.0;
    auto [end, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), p);
    if (ec == std::errc() && end == rest.data() + rest.size()) return Position(p);
  } else if (label.starts_with("t:")) {
    std::string_view rest = label.substr(2);
    std::int64_t ms = 0;
    auto [end, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), ms);
    if (ec == std::errc() && end == rest.data() + rest.size()) return Temporal(ms);
  }
  Fail(ErrorCode::kArgument, "bad condition label '" + std::string(label) + "'");
}

TemporalGrid TemporalGrid::Default() {
  TemporalGrid grid;
  for (std::int64_t ms : {1000, 800, 600, 500, 400, 300, 200, 100, 50}) {
    grid.offsets_ms.push_back(-ms);
    grid.offsets_ms.push_back(ms);
  }
  grid.offsets_ms.push_back(0);
  std::sort(grid.offsets_ms.begin(), grid.offsets_ms.end());
  return grid;
}

void TemporalGrid::Check() const {
  if (!std::is_sorted(offsets_ms.begin(), offsets_ms.end()) ||
      std::adjacent_find(offsets_ms.begin(), offsets_ms.end()) != offsets_ms.end())
    Fail(ErrorCode::kArgument, "temporal grid must be strictly increasing");
  if (!std::binary_search(offsets_ms.begin(), offsets_ms.end(), 0))
    Fail(ErrorCode::kArgument, "temporal grid must contain 0");
  for (std::int64_t ms : offsets_ms) {
    if (ms < -kMaxOffsetMs || ms > kMaxOffsetMs)
      Fail(ErrorCode::kArgument, "temporal offset outside +-1000 ms");
    if (!std::binary_search(offsets_ms.begin(), offsets_ms.end(), -ms))
      Fail(ErrorCode::kArgument, "temporal grid must be symmetric about 0");
  }
}

PooledVector MeanPool(const LayerTensor &tensor) {
  RequireFrames(tensor);
  PooledVector out;
  out.utterance_id = tensor.utterance_id;
  out.layer = tensor.layer;
  out.condition = Condition::Mean();
  out.values.assign(static_cast<std::size_t>(tensor.dim), 0.0);
  // Frame-ordered accumulation keeps the result independent of threading.
  for (std::int64_t t = 0; t < tensor.frames; ++t) {
    auto row = tensor.row(t);
    for (std::size_t j = 0; j < row.size(); ++j) out.values[j] += row[j];
  }
  const double frames = static_cast<double>(tensor.frames);
  for (double &v : out.values) v /= frames;
  return out;
}

std::int64_t PositionalIndex(std::int64_t frames, int quarter) {
  if (frames < 1) Fail(ErrorCode::kInput, "positional index needs at least one frame");
  if (quarter < 0 || quarter > 4) Fail(ErrorCode::kArgument, "position quarter out of range");
  // floor(q * (T - 1) / 4 + 1/2) == floor((2 q (T - 1) + 4) / 8)
  return (2 * quarter * (frames - 1) + 4) / 8;
}

PooledVector PositionalToken(const LayerTensor &tensor, double p) {
  RequireFrames(tensor);
  const Condition condition = Condition::Position(p);
  return Row(tensor, PositionalIndex(tensor.frames, condition.quarter()), condition);
}

std::vector<PooledVector> TemporalSamples(const LayerTensor &tensor, const AlignmentSpan *onset,
                                          const TemporalGrid &grid, FrameRate rate) {
  if (onset == nullptr)
    Fail(ErrorCode::kAlignmentMissing, "no alignment for '" + tensor.utterance_id + "'");
  RequireFrames(tensor);
  std::vector<PooledVector> out;
  out.reserve(grid.offsets_ms.size());
  for (std::int64_t offset : grid.offsets_ms) {
    const std::int64_t frame = FrameIndexForTime(onset->onset_ms + offset, rate, tensor.frames);
    out.push_back(Row(tensor, frame, Condition::Temporal(offset)));
  }
  return out;
}

PooledVector PoolForCondition(const LayerTensor &tensor, Condition condition,
                              const AlignmentSpan *onset, FrameRate rate) {
  switch (condition.kind()) {
    case Condition::Kind::kMean:
      return MeanPool(tensor);
    case Condition::Kind::kPosition:
      RequireFrames(tensor);
      return Row(tensor, PositionalIndex(tensor.frames, condition.quarter()), condition);
    case Condition::Kind::kTemporal: {
      if (onset == nullptr)
        Fail(ErrorCode::kAlignmentMissing, "no alignment for '" + tensor.utterance_id + "'");
      RequireFrames(tensor);
      const std::int64_t frame =
          FrameIndexForTime(onset->onset_ms + condition.offset_ms(), rate, tensor.frames);
      return Row(tensor, frame, condition);
    }
    case Condition::Kind::kRandomControl:
      break;
  }
  Fail(ErrorCode::kArgument, "condition " + condition.Label() + " is not a pooling condition");
}

}  // namespace lprobe
