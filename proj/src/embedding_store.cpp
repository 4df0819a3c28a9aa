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

#include "lprobe/embedding_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>

#include "json.hpp"
#include "lprobe/error.hpp"

namespace lprobe {

using nlohmann::json;

namespace {

// Header blob and footer records are bounded to catch garbage lengths before
// allocating.
constexpr std::uint64_t kMaxHeaderBytes = 1 << 20;
constexpr std::uint32_t kMaxIdBytes = 4096;

void PutU32(std::string &buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutU64(std::string &buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t GetU32(const unsigned char *p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t GetU64(const unsigned char *p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint32_t Crc32(const std::string &bytes) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef *>(bytes.data()),
            static_cast<uInt>(bytes.size())));
}

[[noreturn]] void FormatFail(const std::string &path, const std::string &msg) {
  Fail(ErrorCode::kFormat, path + ": " + msg);
}

}  // namespace

// ---------------------------------------------------------------------------
// Header

void StoreHeader::Check() const {
  if (hidden_dim.empty()) Fail(ErrorCode::kFormat, "store header declares no layers");
  if (hidden_dim.size() != frame_rate.size())
    Fail(ErrorCode::kFormat, "hidden_dim and frame_rate_hz lengths differ");
  for (std::int64_t d : hidden_dim)
    if (d <= 0) Fail(ErrorCode::kFormat, "hidden_dim entries must be positive");
  for (const FrameRate &r : frame_rate)
    if (r.num <= 0 || r.den <= 0) Fail(ErrorCode::kFormat, "frame rates must be positive");
}

std::string StoreHeader::ToJson() const {
  json j;
  j["version"] = version;
  j["model_id"] = model_id;
  j["num_layers"] = num_layers();
  j["hidden_dim"] = hidden_dim;
  json rates = json::array();
  for (const FrameRate &r : frame_rate) rates.push_back({r.num, r.den});
  j["frame_rate_hz"] = rates;
  j["dtype"] = "f32le";
  j["trained"] = trained;
  j["layer0"] = layer0;
  return j.dump();
}

StoreHeader StoreHeader::FromJson(std::string_view text) {
  StoreHeader h;
  try {
    json j = json::parse(text);
    h.version = j.at("version").get<std::uint32_t>();
    h.model_id = j.at("model_id").get<std::string>();
    h.hidden_dim = j.at("hidden_dim").get<std::vector<std::int64_t>>();
    for (const json &r : j.at("frame_rate_hz")) {
      if (r.is_array())
        h.frame_rate.push_back({r.at(0).get<std::int64_t>(), r.at(1).get<std::int64_t>()});
      else
        h.frame_rate.push_back({r.get<std::int64_t>(), 1});
    }
    if (j.value("dtype", std::string("f32le")) != "f32le")
      Fail(ErrorCode::kFormat, "unsupported dtype");
    h.trained = j.value("trained", true);
    h.layer0 = j.value("layer0", std::string());
    if (j.contains("num_layers") && j["num_layers"].get<int>() != h.num_layers())
      Fail(ErrorCode::kFormat, "num_layers disagrees with hidden_dim");
  } catch (const json::exception &e) {
    Fail(ErrorCode::kFormat, std::string("bad store header: ") + e.what());
  }
  if (h.version != kStoreVersion)
    Fail(ErrorCode::kFormat, "unsupported store version " + std::to_string(h.version));
  h.Check();
  return h;
}

std::int64_t FrameIndexForTime(std::int64_t t_ms, FrameRate rate, std::int64_t frames) {
  if (t_ms <= 0 || frames <= 1) return 0;
  // floor(t * num / (1000 * den)); operands stay far below int64 overflow
  // for realistic times and rates.
  const std::int64_t index = (t_ms * rate.num) / (1000 * rate.den);
  return std::min(index, frames - 1);
}

// ---------------------------------------------------------------------------
// Writer

StoreWriter::StoreWriter(const std::string &path, StoreHeader header)
    : path_(path), header_(std::move(header)) {
  header_.Check();
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) Fail(ErrorCode::kIo, "cannot create store " + path);
  std::string prefix(kStoreMagic, sizeof(kStoreMagic));
  const std::string blob = header_.ToJson();
  PutU64(prefix, blob.size());
  prefix += blob;
  out_.write(prefix.data(), static_cast<std::streamsize>(prefix.size()));
  position_ = prefix.size();
}

StoreWriter::~StoreWriter() {
  if (!finished_) {
    try {
      Finish();
    } catch (...) {
    }
  }
}

void StoreWriter::WriteUtterance(std::string_view utterance_id,
                                 std::span<const LayerTensor> layers) {
  if (finished_) Fail(ErrorCode::kFormat, "store already finished");
  const std::string id(utterance_id);
  if (id.empty() || id.size() > kMaxIdBytes) Fail(ErrorCode::kFormat, "bad utterance id");
  if (index_.contains({id, 0}))
    Fail(ErrorCode::kDuplicate, "utterance '" + id + "' already stored");
  if (static_cast<int>(layers.size()) != header_.num_layers())
    Fail(ErrorCode::kFormat, "expected " + std::to_string(header_.num_layers()) +
                                 " layers for '" + id + "', got " +
                                 std::to_string(layers.size()));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerTensor &t = layers[l];
    if (t.dim != header_.hidden_dim[l])
      Fail(ErrorCode::kFormat, "layer " + std::to_string(l) + " of '" + id + "' has d=" +
                                   std::to_string(t.dim) + ", store expects " +
                                   std::to_string(header_.hidden_dim[l]));
    if (t.frames < 1) Fail(ErrorCode::kFormat, "tensor needs at least one frame");
    if (t.data.size() != static_cast<std::size_t>(t.frames * t.dim))
      Fail(ErrorCode::kFormat, "tensor data size does not match T x d");
    for (float v : t.data)
      if (!std::isfinite(v)) Fail(ErrorCode::kInput, "non-finite value in '" + id + "'");
  }
  std::string buf;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerTensor &t = layers[l];
    buf.clear();
    buf.reserve(t.data.size() * 4);
    for (float v : t.data) PutU32(buf, std::bit_cast<std::uint32_t>(v));
    out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    index_.emplace(std::make_pair(id, static_cast<int>(l)),
                   Entry{position_, static_cast<std::uint64_t>(t.frames)});
    position_ += buf.size();
  }
  if (!out_) Fail(ErrorCode::kIo, "write failed on " + path_);
}

void StoreWriter::Finish() {
  if (finished_) return;
  finished_ = true;
  std::string footer;
  PutU64(footer, index_.size());
  for (const auto &[key, entry] : index_) {
    PutU32(footer, static_cast<std::uint32_t>(key.first.size()));
    footer += key.first;
    PutU32(footer, static_cast<std::uint32_t>(key.second));
    PutU64(footer, entry.offset);
    PutU64(footer, entry.frames);
  }
  PutU32(footer, Crc32(footer));
  PutU64(footer, position_);
  out_.write(footer.data(), static_cast<std::streamsize>(footer.size()));
  out_.close();
  if (!out_) Fail(ErrorCode::kIo, "failed to finish store " + path_);
}

// ---------------------------------------------------------------------------
// Reader

namespace {

void ReadExact(int fd, std::uint64_t offset, void *dst, std::size_t size,
               const std::string &path) {
  auto *p = static_cast<char *>(dst);
  while (size > 0) {
    ssize_t n = ::pread(fd, p, size, static_cast<off_t>(offset));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) FormatFail(path, "unexpected end of file");
    p += n;
    offset += static_cast<std::uint64_t>(n);
    size -= static_cast<std::size_t>(n);
  }
}

}  // namespace

EmbeddingStore::EmbeddingStore(const std::string &path) : path_(path) {
  fd_ = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd_ < 0) Fail(ErrorCode::kIo, "cannot open store " + path);
  try {
    struct stat st {};
    if (::fstat(fd_, &st) != 0) Fail(ErrorCode::kIo, "cannot stat " + path);
    const auto file_size = static_cast<std::uint64_t>(st.st_size);
    if (file_size < sizeof(kStoreMagic) + 8 + 8 + 4 + 8) FormatFail(path, "file too short");

    unsigned char prefix[16];
    ReadExact(fd_, 0, prefix, sizeof(prefix), path);
    if (std::memcmp(prefix, kStoreMagic, sizeof(kStoreMagic)) != 0)
      FormatFail(path, "bad magic");
    const std::uint64_t header_len = GetU64(prefix + 8);
    if (header_len == 0 || header_len > kMaxHeaderBytes || 16 + header_len > file_size)
      FormatFail(path, "bad header length");
    std::string blob(header_len, '\0');
    ReadExact(fd_, 16, blob.data(), blob.size(), path);
    header_ = StoreHeader::FromJson(blob);
    const std::uint64_t payload_begin = 16 + header_len;

    unsigned char tail[8];
    ReadExact(fd_, file_size - 8, tail, 8, path);
    const std::uint64_t footer_begin = GetU64(tail);
    if (footer_begin < payload_begin || footer_begin + 8 + 4 + 8 > file_size)
      FormatFail(path, "footer offset out of range");
    std::string footer(file_size - 8 - footer_begin, '\0');
    ReadExact(fd_, footer_begin, footer.data(), footer.size(), path);
    const auto *bytes = reinterpret_cast<const unsigned char *>(footer.data());
    const std::size_t body_len = footer.size() - 4;
    if (GetU32(bytes + body_len) != Crc32(footer.substr(0, body_len)))
      FormatFail(path, "footer checksum mismatch");

    const std::uint64_t count = GetU64(bytes);
    std::size_t pos = 8;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> extents;  // offset, bytes
    std::pair<std::string, std::uint32_t> previous;
    for (std::uint64_t i = 0; i < count; ++i) {
      if (pos + 4 > body_len) FormatFail(path, "truncated index");
      const std::uint32_t id_len = GetU32(bytes + pos);
      pos += 4;
      if (id_len == 0 || id_len > kMaxIdBytes || pos + id_len + 20 > body_len)
        FormatFail(path, "bad index record");
      std::string id(footer.data() + pos, id_len);
      pos += id_len;
      const std::uint32_t layer = GetU32(bytes + pos);
      const std::uint64_t offset = GetU64(bytes + pos + 4);
      const std::uint64_t frames = GetU64(bytes + pos + 12);
      pos += 20;
      if (layer >= static_cast<std::uint32_t>(header_.num_layers()))
        FormatFail(path, "index layer out of range");
      std::pair<std::string, std::uint32_t> key{id, layer};
      if (i > 0 && !(previous < key)) FormatFail(path, "index not sorted");
      previous = key;
      if (frames == 0) FormatFail(path, "index record with zero frames");
      const std::uint64_t dim = static_cast<std::uint64_t>(header_.hidden_dim[layer]);
      if (frames > (footer_begin - payload_begin) / (4 * dim))
        FormatFail(path, "index record exceeds payload");
      extents.emplace_back(offset, frames * dim * 4);
      auto &entries = index_[id];
      if (entries.size() != layer) FormatFail(path, "index layers not contiguous");
      entries.push_back(Entry{offset, frames});
    }
    if (pos != body_len) FormatFail(path, "trailing bytes in index");
    for (const auto &[id, entries] : index_)
      if (static_cast<int>(entries.size()) != header_.num_layers())
        FormatFail(path, "utterance '" + id + "' is missing layers");
    // Matrices must tile the payload exactly.
    std::sort(extents.begin(), extents.end());
    std::uint64_t cursor = payload_begin;
    for (const auto &[offset, size] : extents) {
      if (offset != cursor) FormatFail(path, "index extents do not tile payload");
      cursor += size;
    }
    if (cursor != footer_begin) FormatFail(path, "index extents do not tile payload");
  } catch (...) {
    ::close(fd_);
    fd_ = -1;
    throw;
  }
}

EmbeddingStore::~EmbeddingStore() {
  if (fd_ >= 0) ::close(fd_);
}

bool EmbeddingStore::Contains(std::string_view utterance_id) const {
  return index_.find(utterance_id) != index_.end();
}

std::vector<std::string> EmbeddingStore::UtteranceIds() const {
  std::vector<std::string> ids;
  ids.reserve(index_.size());
  for (const auto &[id, entries] : index_) ids.push_back(id);
  return ids;
}

const EmbeddingStore::Entry &EmbeddingStore::Lookup(std::string_view utterance_id,
                                                    int layer) const {
  if (layer < 0 || layer >= header_.num_layers())
    Fail(ErrorCode::kRange, "layer " + std::to_string(layer) + " outside [0, " +
                                std::to_string(header_.num_layers()) + ")");
  auto it = index_.find(utterance_id);
  if (it == index_.end())
    Fail(ErrorCode::kLookup, "utterance '" + std::string(utterance_id) + "' not in store");
  return it->second[static_cast<std::size_t>(layer)];
}

std::int64_t EmbeddingStore::Frames(std::string_view utterance_id, int layer) const {
  return static_cast<std::int64_t>(Lookup(utterance_id, layer).frames);
}

LayerTensor EmbeddingStore::ReadLayer(std::string_view utterance_id, int layer) const {
  const Entry &entry = Lookup(utterance_id, layer);
  LayerTensor t;
  t.utterance_id = std::string(utterance_id);
  t.layer = layer;
  t.frames = static_cast<std::int64_t>(entry.frames);
  t.dim = header_.hidden_dim[static_cast<std::size_t>(layer)];
  const std::size_t count = static_cast<std::size_t>(t.frames * t.dim);
  std::vector<unsigned char> raw(count * 4);
  ReadExact(fd_, entry.offset, raw.data(), raw.size(), path_);
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    t.data[i] = std::bit_cast<float>(GetU32(raw.data() + 4 * i));
  return t;
}

}  // namespace lprobe
