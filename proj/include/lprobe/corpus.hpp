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

#ifndef LPROBE_CORPUS_HPP_
#define LPROBE_CORPUS_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lprobe {

enum class LinguisticLevel { kSyntax, kSynSemInterface, kMorphology, kConcept };
enum class Suite { kBlimp, kComps };

inline constexpr LinguisticLevel kAllLevels[] = {
    LinguisticLevel::kSyntax, LinguisticLevel::kSynSemInterface,
    LinguisticLevel::kMorphology, LinguisticLevel::kConcept};

// Serialized names: "syntax", "syntax_semantics", "morphology", "concept".
std::string_view LevelName(LinguisticLevel level);
LinguisticLevel ParseLevel(std::string_view name);  // throws kArgument
std::string_view SuiteName(Suite suite);            // "blimp" / "comps"
Suite ParseSuite(std::string_view name);

struct Phenomenon {
  std::string id;
  std::string name;
  LinguisticLevel level = LinguisticLevel::kSyntax;
  Suite suite = Suite::kBlimp;

  bool operator==(const Phenomenon &) const = default;
};

struct Utterance {
  std::string id;
  std::string text;
  int label = 1;  // 1 = acceptable, 0 = unacceptable
  std::optional<std::string> audio_ref;
  std::optional<std::int64_t> duration_ms;
  std::optional<std::string> base_audio_id;

  bool operator==(const Utterance &) const = default;
};

struct MinimalPair {
  std::string id;
  Utterance pos;
  Utterance neg;
  std::string phenomenon_id;
  std::string critical_word;
  int critical_word_index = 0;

  bool operator==(const MinimalPair &) const = default;
};

struct AlignmentSpan {
  std::string utterance_id;
  std::string word;
  std::int64_t onset_ms = 0;
  std::int64_t offset_ms = 0;

  bool operator==(const AlignmentSpan &) const = default;
};

// Immutable after construction. Create() enforces referential integrity:
// every pair's phenomenon resolves, and pair and utterance ids are unique.
class CorpusManifest {
 public:
  CorpusManifest() = default;

  static CorpusManifest Create(std::vector<Phenomenon> phenomena,
                               std::vector<MinimalPair> pairs,
                               std::map<std::string, AlignmentSpan> alignments = {});

  // Copy with the alignment map replaced; alignment keys must name utterances.
  CorpusManifest WithAlignments(std::map<std::string, AlignmentSpan> alignments) const;

  const std::vector<Phenomenon> &phenomena() const { return phenomena_; }
  const std::vector<MinimalPair> &pairs() const { return pairs_; }
  const std::map<std::string, AlignmentSpan> &alignments() const { return alignments_; }
  bool has_alignments() const { return !alignments_.empty(); }

  const Phenomenon *FindPhenomenon(std::string_view id) const;
  const Utterance *FindUtterance(std::string_view id) const;
  const AlignmentSpan *FindAlignment(std::string_view utterance_id) const;
  // Pairs of one phenomenon in manifest order.
  std::vector<const MinimalPair *> PairsOf(std::string_view phenomenon_id) const;

  bool operator==(const CorpusManifest &other) const {
    return phenomena_ == other.phenomena_ && pairs_ == other.pairs_ &&
           alignments_ == other.alignments_;
  }

 private:
  std::vector<Phenomenon> phenomena_;
  std::vector<MinimalPair> pairs_;
  std::map<std::string, AlignmentSpan> alignments_;
  std::map<std::string, std::size_t, std::less<>> phenomenon_index_;
  std::map<std::string, std::pair<std::size_t, bool>, std::less<>> utterance_index_;
};

// Line-delimited JSON. Throws kParse (with line number), kIntegrity, or
// kValidation when a pair's members do not carry labels 1/0.
CorpusManifest ParseManifest(std::istream &in, const std::string &source = "<stream>");
CorpusManifest LoadManifest(const std::string &path);
void WriteManifest(const CorpusManifest &manifest, std::ostream &out);
void SaveManifest(const CorpusManifest &manifest, const std::string &path);

std::map<std::string, AlignmentSpan> ParseAlignments(std::istream &in,
                                                     const std::string &source = "<stream>");
std::map<std::string, AlignmentSpan> LoadAlignments(const std::string &path);
void SaveAlignments(const std::map<std::string, AlignmentSpan> &alignments,
                    const std::string &path);

// Lowercased, punctuation-stripped whitespace tokens.
std::vector<std::string> NormalizedWords(std::string_view text);
std::size_t WordEditDistance(std::string_view a, std::string_view b);

enum class ViolationKind {
  kEditDistance,
  kLabel,
  kEmptyText,
  kImbalance,
  kMissingAlignment,
  kAlignmentBounds,
  kCriticalWordIndex,
  kSuiteLevel,
  kCorpusSize,
};

std::string_view ViolationKindName(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string subject;  // pair, utterance or phenomenon id
  std::string detail;

  bool operator==(const Violation &) const = default;
};

struct ValidationOptions {
  bool require_alignments = false;
  // Demand the full 67 BLiMP + 4 COMPS phenomenon inventory.
  bool expect_full_inventory = false;
};

inline constexpr int kFullBlimpPhenomena = 67;
inline constexpr int kFullCompsPhenomena = 4;

std::vector<Violation> ValidateCorpus(const CorpusManifest &manifest,
                                      const ValidationOptions &options = {});

class FoldAssignment {
 public:
  FoldAssignment(int k, std::map<std::string, int> fold_of)
      : k_(k), fold_of_(fold_of.begin(), fold_of.end()) {}

  int k() const { return k_; }
  // Throws kLookup for pairs outside the assignment.
  int FoldOf(std::string_view pair_id) const;
  bool Contains(std::string_view pair_id) const;
  const std::map<std::string, int, std::less<>> &map() const { return fold_of_; }
  std::vector<std::size_t> FoldSizes() const;

  bool operator==(const FoldAssignment &) const = default;

 private:
  int k_;
  std::map<std::string, int, std::less<>> fold_of_;
};

// Pair-grouped, size-balanced (+-1 pair) folds for one phenomenon. The
// shuffle seed mixes `seed` with a stable hash of the phenomenon id.
FoldAssignment AssignFolds(const CorpusManifest &manifest, std::string_view phenomenon_id,
                           int k, std::uint64_t seed);
// Same, for an explicit list of pair ids.
FoldAssignment AssignFoldsForPairs(std::vector<std::string> pair_ids, int k,
                                   std::uint64_t seed);

}  // namespace lprobe

#endif  // LPROBE_CORPUS_HPP_
