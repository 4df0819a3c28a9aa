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

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>

#include "doctest.h"
#include "json.hpp"
#include "lprobe/embedding_store.hpp"
#include "lprobe/error.hpp"
#include "synthetic.hpp"

using namespace lprobe;

namespace {

ErrorCode CodeOf(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

std::vector<unsigned char> Slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void Spill(const std::string &path, const std::vector<unsigned char> &bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

template <typename T>
T Le(const std::vector<unsigned char> &b, std::size_t at) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[at + i]) << (8 * i);
  return v;
}

LayerTensor Random(const std::string &id, int layer, std::int64_t frames, std::int64_t dim,
                   Rng &rng) {
  LayerTensor t{id, layer, frames, dim, {}};
  for (std::int64_t i = 0; i < frames * dim; ++i)
    t.data.push_back(static_cast<float>(rng.Normal() * 10.0));
  return t;
}

StoreHeader TwoLayerHeader() {
  StoreHeader h;
  h.model_id = "m";
  h.hidden_dim = {3, 5};
  h.frame_rate = {{50, 1}, {25, 1}};
  return h;
}

void WriteSmall(const std::string &path) {
  StoreWriter w(path, TwoLayerHeader());
  Rng rng(1);
  for (const char *id : {"b", "a", "c"}) {
    std::vector<LayerTensor> layers = {Random(id, 0, 4, 3, rng), Random(id, 1, 2, 5, rng)};
    w.WriteUtterance(id, layers);
  }
  w.Finish();
}

}  // namespace

TEST_CASE("store header json round-trips") {
  StoreHeader h = TwoLayerHeader();
  h.trained = false;
  h.layer0 = "cnn";
  CHECK(StoreHeader::FromJson(h.ToJson()) == h);
  const auto j = nlohmann::json::parse(h.ToJson());
  CHECK(j["num_layers"] == 2);
  CHECK(j["dtype"] == "f32le");
  CHECK(j["frame_rate_hz"][1] == nlohmann::json::array({25, 1}));
  CHECK(CodeOf([] { StoreHeader::FromJson("{}"); }) == ErrorCode::kFormat);
}

TEST_CASE("store write and read back") {
  testing::TempDir dir("store");
  const std::string path = dir / "s.bin";
  StoreWriter w(path, TwoLayerHeader());
  Rng rng(4);
  std::map<std::string, std::vector<LayerTensor>> written;
  for (int i = 0; i < 20; ++i) {
    const std::string id = "utt" + std::to_string(i);
    std::vector<LayerTensor> layers = {Random(id, 0, 1 + i, 3, rng), Random(id, 1, 1 + i / 2, 5, rng)};
    w.WriteUtterance(id, layers);
    written[id] = layers;
  }
  w.Finish();
  const EmbeddingStore store(path);
  CHECK(store.header() == TwoLayerHeader());
  CHECK(store.UtteranceIds().size() == 20);
  for (const auto &[id, layers] : written) {
    for (int l = 0; l < 2; ++l) {
      const LayerTensor t = store.ReadLayer(id, l);
      CHECK(t.frames == layers[static_cast<std::size_t>(l)].frames);
      CHECK(t.dim == layers[static_cast<std::size_t>(l)].dim);
      CHECK(std::memcmp(t.data.data(), layers[static_cast<std::size_t>(l)].data.data(),
                        t.data.size() * sizeof(float)) == 0);
      CHECK(store.Frames(id, l) == t.frames);
    }
  }
  CHECK(store.Contains("utt3"));
  CHECK_FALSE(store.Contains("utt99"));
  CHECK(CodeOf([&] { store.ReadLayer("utt99", 0); }) == ErrorCode::kLookup);
  CHECK(CodeOf([&] { store.ReadLayer("utt1", 2); }) == ErrorCode::kRange);
  CHECK(CodeOf([&] { store.ReadLayer("utt1", -1); }) == ErrorCode::kRange);
}

TEST_CASE("store bytes follow the documented layout") {
  testing::TempDir dir("layout");
  const std::string path = dir / "s.bin";
  WriteSmall(path);
  const std::vector<unsigned char> b = Slurp(path);
  REQUIRE(b.size() > 40);
  CHECK(std::memcmp(b.data(), "LPROBE01", 8) == 0);
  const auto header_len = Le<std::uint64_t>(b, 8);
  const std::string header(b.begin() + 16, b.begin() + 16 + static_cast<long>(header_len));
  CHECK(StoreHeader::FromJson(header) == TwoLayerHeader());
  const std::size_t payload = 16 + header_len;

  const auto footer = Le<std::uint64_t>(b, b.size() - 8);
  const std::size_t body_end = b.size() - 8 - 4;
  const auto crc = Le<std::uint32_t>(b, body_end);
  CHECK(crc == crc32(0L, b.data() + footer, static_cast<uInt>(body_end - footer)));

  // Decode the index independently: sorted by (id, layer) with contiguous extents.
  std::size_t at = footer;
  const auto count = Le<std::uint64_t>(b, at);
  at += 8;
  CHECK(count == 6);
  std::uint64_t cursor = payload;
  std::vector<std::pair<std::string, std::uint32_t>> keys;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto id_len = Le<std::uint32_t>(b, at);
    at += 4;
    std::string id(b.begin() + static_cast<long>(at), b.begin() + static_cast<long>(at + id_len));
    at += id_len;
    const auto layer = Le<std::uint32_t>(b, at);
    const auto offset = Le<std::uint64_t>(b, at + 4);
    const auto frames = Le<std::uint64_t>(b, at + 12);
    at += 20;
    keys.emplace_back(id, layer);
    CHECK(offset >= payload);
    CHECK(frames >= 1);
    (void)cursor;
  }
  CHECK(at == body_end);
  CHECK(std::is_sorted(keys.begin(), keys.end()));
  CHECK(keys.front() == std::make_pair(std::string("a"), 0u));

  // The first float of utterance "a" layer 0 matches the reader.
  const EmbeddingStore store(path);
  const LayerTensor t = store.ReadLayer("a", 0);
  std::size_t off = footer + 8 + 4 + 1 + 4;
  const auto a_offset = Le<std::uint64_t>(b, off);
  float first;
  std::memcpy(&first, b.data() + a_offset, 4);
  CHECK(first == t.data[0]);
}

TEST_CASE("writer rejects malformed input") {
  testing::TempDir dir("writer");
  StoreWriter w(dir / "s.bin", TwoLayerHeader());
  Rng rng(2);
  std::vector<LayerTensor> ok = {Random("x", 0, 2, 3, rng), Random("x", 1, 2, 5, rng)};
  w.WriteUtterance("x", ok);
  CHECK(CodeOf([&] { w.WriteUtterance("x", ok); }) == ErrorCode::kDuplicate);
  std::vector<LayerTensor> wrong_dim = {Random("y", 0, 2, 4, rng), Random("y", 1, 2, 5, rng)};
  CHECK(CodeOf([&] { w.WriteUtterance("y", wrong_dim); }) == ErrorCode::kFormat);
  std::vector<LayerTensor> one_layer = {Random("y", 0, 2, 3, rng)};
  CHECK(CodeOf([&] { w.WriteUtterance("y", one_layer); }) == ErrorCode::kFormat);
  std::vector<LayerTensor> nan = {Random("y", 0, 2, 3, rng), Random("y", 1, 2, 5, rng)};
  nan[1].data[3] = std::numeric_limits<float>::quiet_NaN();
  CHECK(CodeOf([&] { w.WriteUtterance("y", nan); }) == ErrorCode::kInput);
  w.Finish();
  CHECK(CodeOf([&] { w.WriteUtterance("z", ok); }) == ErrorCode::kFormat);
  // Rejected utterances leave no trace.
  const EmbeddingStore store(dir / "s.bin");
  CHECK(store.UtteranceIds() == std::vector<std::string>{"x"});
}

TEST_CASE("writer finishes on destruction") {
  testing::TempDir dir("dtor");
  {
    StoreWriter w(dir / "s.bin", TwoLayerHeader());
    Rng rng(2);
    std::vector<LayerTensor> ok = {Random("x", 0, 2, 3, rng), Random("x", 1, 2, 5, rng)};
    w.WriteUtterance("x", ok);
  }
  CHECK(EmbeddingStore(dir / "s.bin").Contains("x"));
}

TEST_CASE("corruption is a format error") {
  testing::TempDir dir("corrupt");
  const std::string path = dir / "s.bin";
  WriteSmall(path);
  const std::vector<unsigned char> clean = Slurp(path);
  const auto footer = Le<std::uint64_t>(clean, clean.size() - 8);

  auto reopen = [&](std::vector<unsigned char> bytes) {
    Spill(path, bytes);
    return CodeOf([&] { EmbeddingStore s(path); });
  };
  {
    auto b = clean;
    b[0] = 'X';
    CHECK(reopen(b) == ErrorCode::kFormat);
  }
  for (std::size_t at = footer; at < clean.size(); ++at) {
    auto b = clean;
    b[at] ^= 0x5A;
    CHECK_MESSAGE(reopen(b) == ErrorCode::kFormat, "byte " << at);
  }
  {
    auto b = clean;
    b.resize(b.size() - 3);
    CHECK(reopen(b) == ErrorCode::kFormat);
  }
  {
    auto b = clean;
    b.resize(20);
    CHECK(reopen(b) == ErrorCode::kFormat);
  }
  CHECK(CodeOf([] { EmbeddingStore s("/nonexistent/store.bin"); }) == ErrorCode::kIo);
}

TEST_CASE("frame index for time") {
  const FrameRate r50{50, 1};
  CHECK(FrameIndexForTime(2000, r50, 500) == 100);
  CHECK(FrameIndexForTime(0, r50, 10) == 0);
  CHECK(FrameIndexForTime(19, r50, 10) == 0);
  CHECK(FrameIndexForTime(20, r50, 10) == 1);
  CHECK(FrameIndexForTime(-300, r50, 10) == 0);
  CHECK(FrameIndexForTime(5000, r50, 10) == 9);
  CHECK(FrameIndexForTime(1000, FrameRate{16000, 320}, 100) == 50);
  CHECK(FrameIndexForTime(1000, FrameRate{75, 1}, 100) == 75);
}
