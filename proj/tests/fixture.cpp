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

// Writes a small synthetic corpus (manifest, alignments, trained and
// untrained stores) into a directory for the command-line smoke test.

#include <iostream>

#include "lprobe/error.hpp"
#include "synthetic.hpp"

int main(int argc, char **argv) {
  if (argc != 2) {
    std::cerr << "usage: lprobe_fixture <dir>\n";
    return 2;
  }
  using namespace lprobe;
  const std::string dir = argv[1];
  try {
    const CorpusManifest m = testing::MakeManifest({{"agr", LinguisticLevel::kSyntax, 12},
                                                    {"cpt", LinguisticLevel::kConcept, 12}});
    testing::StoreSpec spec;
    spec.dim = 6;
    spec.min_frames = 8;
    spec.max_frames = 20;
    SaveManifest(m, dir + "/manifest.jsonl");
    SaveAlignments(testing::MakeAlignments(m, spec), dir + "/alignments.jsonl");
    testing::WriteStore(dir + "/trained.bin", m, spec);
    spec.signal_layers = {};
    spec.trained = false;
    testing::WriteStore(dir + "/untrained.bin", m, spec);
  } catch (const Error &e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
