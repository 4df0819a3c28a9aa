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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "doctest.h"
#include "lprobe/error.hpp"
#include "lprobe/table.hpp"
#include "lprobe/util.hpp"
#include "synthetic.hpp"

using namespace lprobe;

TEST_CASE("fnv1a hash matches published vectors") {
  CHECK(StableHash("") == 0xcbf29ce484222325ULL);
  CHECK(StableHash("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(StableHash("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("mixed seeds are deterministic and spread") {
  CHECK(MixSeed(7, 1) == MixSeed(7, 1));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(MixSeed(42, i));
  CHECK(seen.size() == 1000);
  CHECK(MixSeed(1, 2) != MixSeed(2, 1));
}

TEST_CASE("rng streams replay and stay in range") {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) {
    const double u = a.Uniform();
    CHECK(u == b.Uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng c(5);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) ++hits[c.Below(7)];
  for (int h : hits) CHECK(h > 800);
}

TEST_CASE("normal draws have unit moments") {
  Rng rng(3);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.Normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("shuffle permutes") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  Rng rng(11);
  rng.Shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
  CHECK_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST_CASE("doubles format shortest and round-trip") {
  CHECK(FormatDouble(0.1) == "0.1");
  CHECK(FormatDouble(1.0) == "1");
  CHECK(FormatDouble(std::nan("")) == "nan");
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.Normal() * 1e3;
    CHECK(ParseDouble(FormatDouble(x)) == x);
  }
  CHECK(std::isnan(ParseDouble("NA")));
  CHECK_THROWS_AS(ParseDouble("1.5x"), Error);
}

TEST_CASE("sha256 matches the standard vector") {
  CHECK(Sha256Hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("string helpers") {
  CHECK(SplitString("a,b,,c", ',') == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(Trim("  x y \t") == "x y");
}

TEST_CASE("tsv tables round-trip") {
  testing::TempDir dir("table");
  Table t;
  t.columns = {"a", "b"};
  t.AddRow({"1", "x"});
  t.AddRow({"2", "y"});
  WriteTsv(t, dir / "t.tsv");
  const Table back = ReadTsv(dir / "t.tsv");
  CHECK(back.columns == t.columns);
  CHECK(back.rows == t.rows);
  CHECK(back.Column("b") == 1);
  CHECK_THROWS_AS(t.AddRow({"only one"}), Error);
}
