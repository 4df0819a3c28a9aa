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

// Synthetic corpora and stores shared by the unit and acceptance tests.

#ifndef LPROBE_TESTS_SYNTHETIC_HPP_
#define LPROBE_TESTS_SYNTHETIC_HPP_

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lprobe/corpus.hpp"
#include "lprobe/embedding_store.hpp"
#include "lprobe/util.hpp"

namespace lprobe::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string &tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("lprobe_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;
  std::string operator/(const std::string &name) const { return (path_ / name).string(); }
  const std::filesystem::path &path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct TaskSpec {
  std::string id;
  LinguisticLevel level = LinguisticLevel::kSyntax;
  int pairs = 10;
};

inline Suite SuiteFor(LinguisticLevel level) {
  return level == LinguisticLevel::kConcept ? Suite::kComps : Suite::kBlimp;
}

// Pairs differ in one word ("walks" vs "walk") at index 2.  Durations follow
// the frame counts the store generator will use at 50 Hz.
inline CorpusManifest MakeManifest(const std::vector<TaskSpec> &tasks) {
  std::vector<Phenomenon> phenomena;
  std::vector<MinimalPair> pairs;
  for (const TaskSpec &t : tasks) {
    phenomena.push_back({t.id, t.id + " phenomenon", t.level, SuiteFor(t.level)});
    for (int i = 0; i < t.pairs; ++i) {
      MinimalPair p;
      p.id = t.id + "_p" + std::to_string(i);
      p.phenomenon_id = t.id;
      p.critical_word = "walks";
      p.critical_word_index = 2;
      p.pos = {p.id + "_a", "subject " + std::to_string(i) + " walks home", 1, std::nullopt,
               std::nullopt, p.id};
      p.neg = {p.id + "_b", "subject " + std::to_string(i) + " walk home", 0, std::nullopt,
               std::nullopt, p.id};
      pairs.push_back(std::move(p));
    }
  }
  return CorpusManifest::Create(std::move(phenomena), std::move(pairs));
}

struct StoreSpec {
  int layers = 4;
  std::int64_t dim = 32;
  std::int64_t min_frames = 20;
  std::int64_t max_frames = 60;
  // Layers whose mean-pooled vectors carry a label-aligned direction.
  std::vector<int> signal_layers = {2};
  // Amplitude of that direction relative to the unit per-utterance noise.
  double amplitude = 2.0;
  // Frame-level noise around the utterance vector.
  double frame_noise = 1.0;
  std::uint64_t seed = 1;
  std::string model_id = "synthetic";
  bool trained = true;
  FrameRate rate{50, 1};
};

inline std::int64_t FramesFor(const StoreSpec &spec, std::string_view utterance_id) {
  Rng rng(MixSeed(spec.seed, StableHash(utterance_id)));
  return spec.min_frames +
         static_cast<std::int64_t>(
             rng.Below(static_cast<std::uint64_t>(spec.max_frames - spec.min_frames + 1)));
}

inline StoreHeader MakeHeader(const StoreSpec &spec) {
  StoreHeader h;
  h.model_id = spec.model_id;
  h.hidden_dim.assign(static_cast<std::size_t>(spec.layers), spec.dim);
  h.frame_rate.assign(static_cast<std::size_t>(spec.layers), spec.rate);
  h.trained = spec.trained;
  h.layer0 = "embedding";
  return h;
}

// The label-aligned direction: a fixed unit vector.
inline std::vector<double> SignalDirection(std::int64_t dim) {
  std::vector<double> u(static_cast<std::size_t>(dim), 0.0);
  Rng rng(0x5157);
  double norm = 0.0;
  for (double &x : u) {
    x = rng.Normal();
    norm += x * x;
  }
  for (double &x : u) x /= std::sqrt(norm);
  return u;
}

// Writes every utterance of the manifest.  Frame t of utterance u at layer l is
// base_u,l + frame noise, where base_u,l = noise + (signal layers only)
// +/- amplitude * direction.
inline void WriteStore(const std::string &path, const CorpusManifest &manifest,
                       const StoreSpec &spec) {
  StoreWriter writer(path, MakeHeader(spec));
  const std::vector<double> u = SignalDirection(spec.dim);
  for (const MinimalPair &pair : manifest.pairs()) {
    for (const Utterance *utt : {&pair.pos, &pair.neg}) {
      const std::int64_t frames = FramesFor(spec, utt->id);
      Rng rng(MixSeed(spec.seed ^ 0xA5A5, StableHash(utt->id)));
      std::vector<LayerTensor> layers;
      for (int l = 0; l < spec.layers; ++l) {
        const bool signal = std::find(spec.signal_layers.begin(), spec.signal_layers.end(), l) !=
                            spec.signal_layers.end();
        const double sign = utt->label == 1 ? 1.0 : -1.0;
        std::vector<double> base(static_cast<std::size_t>(spec.dim));
        for (std::int64_t j = 0; j < spec.dim; ++j)
          base[static_cast<std::size_t>(j)] =
              rng.Normal() + (signal ? sign * spec.amplitude * u[static_cast<std::size_t>(j)] : 0.0);
        LayerTensor t;
        t.utterance_id = utt->id;
        t.layer = l;
        t.frames = frames;
        t.dim = spec.dim;
        t.data.resize(static_cast<std::size_t>(frames * spec.dim));
        for (std::int64_t f = 0; f < frames; ++f)
          for (std::int64_t j = 0; j < spec.dim; ++j)
            t.data[static_cast<std::size_t>(f * spec.dim + j)] = static_cast<float>(
                base[static_cast<std::size_t>(j)] + spec.frame_noise * rng.Normal());
        layers.push_back(std::move(t));
      }
      writer.WriteUtterance(utt->id, layers);
    }
  }
  writer.Finish();
}

// Critical-word onset at a quarter of each utterance's duration.
inline std::map<std::string, AlignmentSpan> MakeAlignments(const CorpusManifest &manifest,
                                                           const StoreSpec &spec) {
  std::map<std::string, AlignmentSpan> out;
  for (const MinimalPair &pair : manifest.pairs())
    for (const Utterance *utt : {&pair.pos, &pair.neg}) {
      const std::int64_t duration = FramesFor(spec, utt->id) * 1000 * spec.rate.den / spec.rate.num;
      out[utt->id] = {utt->id, pair.critical_word, duration / 4, duration / 4 + 200};
    }
  return out;
}

}  // namespace lprobe::testing

#endif  // LPROBE_TESTS_SYNTHETIC_HPP_
