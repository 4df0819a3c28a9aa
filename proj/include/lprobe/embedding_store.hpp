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

#ifndef LPROBE_EMBEDDING_STORE_HPP_
#define LPROBE_EMBEDDING_STORE_HPP_

#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lprobe {

// Frames per second as an exact rational, so time->frame mapping is integer
// arithmetic.
struct FrameRate {
  std::int64_t num = 50;
  std::int64_t den = 1;

  double hz() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const FrameRate &) const = default;
};

inline constexpr char kStoreMagic[8] = {'L', 'P', 'R', 'O', 'B', 'E', '0', '1'};
inline constexpr std::uint32_t kStoreVersion = 1;

struct StoreHeader {
  std::uint32_t version = kStoreVersion;
  std::string model_id;
  std::vector<std::int64_t> hidden_dim;  // one entry per layer
  std::vector<FrameRate> frame_rate;     // one entry per layer
  bool trained = true;
  // Free-form description of what layer 0 is (e.g. "post-frontend").
  std::string layer0;

  int num_layers() const { return static_cast<int>(hidden_dim.size()); }
  // Throws kFormat when the per-layer lists disagree or hold nonpositive values.
  void Check() const;
  std::string ToJson() const;
  static StoreHeader FromJson(std::string_view text);

  bool operator==(const StoreHeader &) const = default;
};

// Frame-major T x d matrix of one utterance at one layer.
struct LayerTensor {
  std::string utterance_id;
  int layer = 0;
  std::int64_t frames = 0;
  std::int64_t dim = 0;
  std::vector<float> data;

  float at(std::int64_t t, std::int64_t j) const {
    return data[static_cast<std::size_t>(t * dim + j)];
  }
  std::span<const float> row(std::int64_t t) const {
    return std::span<const float>(data).subspan(static_cast<std::size_t>(t * dim),
                                                static_cast<std::size_t>(dim));
  }
};

// floor(t_ms * rate / 1000) clamped into [0, frames - 1].
std::int64_t FrameIndexForTime(std::int64_t t_ms, FrameRate rate, std::int64_t frames);

// Single-writer, append-only. The index footer is written by Finish(); the
// destructor calls Finish() if it has not run.
class StoreWriter {
 public:
  StoreWriter(const std::string &path, StoreHeader header);
  ~StoreWriter();
  StoreWriter(const StoreWriter &) = delete;
  StoreWriter &operator=(const StoreWriter &) = delete;

  // One tensor per layer, in layer order.
  void WriteUtterance(std::string_view utterance_id, std::span<const LayerTensor> layers);
  void Finish();

  const StoreHeader &header() const { return header_; }

 private:
  struct Entry {
    std::uint64_t offset;
    std::uint64_t frames;
  };

  std::string path_;
  StoreHeader header_;
  std::ofstream out_;
  std::uint64_t position_ = 0;
  std::map<std::pair<std::string, int>, Entry> index_;
  bool finished_ = false;
};

// Read-only view of a finished store. Reads use pread, so one instance may
// serve any number of threads.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(const std::string &path);
  ~EmbeddingStore();
  EmbeddingStore(const EmbeddingStore &) = delete;
  EmbeddingStore &operator=(const EmbeddingStore &) = delete;

  const StoreHeader &header() const { return header_; }
  const std::string &path() const { return path_; }
  bool Contains(std::string_view utterance_id) const;
  std::vector<std::string> UtteranceIds() const;
  std::int64_t Frames(std::string_view utterance_id, int layer) const;
  LayerTensor ReadLayer(std::string_view utterance_id, int layer) const;

 private:
  struct Entry {
    std::uint64_t offset;
    std::uint64_t frames;
  };
  const Entry &Lookup(std::string_view utterance_id, int layer) const;

  std::string path_;
  int fd_ = -1;
  StoreHeader header_;
  // utterance id -> per-layer entries
  std::map<std::string, std::vector<Entry>, std::less<>> index_;
};

}  // namespace lprobe

#endif  // LPROBE_EMBEDDING_STORE_HPP_
