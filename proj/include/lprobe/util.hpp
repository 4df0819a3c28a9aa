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

#ifndef LPROBE_UTIL_HPP_
#define LPROBE_UTIL_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace lprobe {

// Stable 64-bit FNV-1a; used to derive per-task seeds from string ids, so it
// must never change between releases.
std::uint64_t StableHash(std::string_view text);

// splitmix64 finalizer. Combines a base seed with a counter into an
// independent stream seed.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t counter);

// Portable random source. std::normal_distribution and std::shuffle are
// implementation-defined, so every draw here is built directly on the
// mt19937_64 output sequence, which the standard pins bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  // Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t Below(std::uint64_t bound);
  // Standard normal via Box-Muller; the spare value is cached.
  double Normal();

  template <typename T>
  void Shuffle(std::vector<T> &items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(Below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Shortest decimal string that round-trips to the same double.
std::string FormatDouble(double value);

std::string Sha256Hex(std::string_view data);
std::string Sha256File(const std::string &path);

std::vector<std::string> SplitString(std::string_view text, char sep);
std::string Trim(std::string_view text);

}  // namespace lprobe

#endif  // LPROBE_UTIL_HPP_
