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

#include "lprobe/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lprobe/error.hpp"
#include "lprobe/util.hpp"

namespace lprobe {

using nlohmann::json;

std::string_view LevelName(LinguisticLevel level) {
  switch (level) {
    case LinguisticLevel::kSyntax: return "syntax";
    case LinguisticLevel::kSynSemInterface: return "syntax_semantics";
    case LinguisticLevel::kMorphology: return "morphology";
    case LinguisticLevel::kConcept: return "concept";
  }
  return "unknown";
}

LinguisticLevel ParseLevel(std::string_view name) {
  for (LinguisticLevel level : kAllLevels)
    if (LevelName(level) == name) return level;
  Fail(ErrorCode::kArgument, "unknown linguistic level '" + std::string(name) + "'");
}

std::string_view SuiteName(Suite suite) {
  return suite == Suite::kBlimp ? "blimp" : "comps";
}

Suite ParseSuite(std::string_view name) {
  if (name == "blimp") return Suite::kBlimp;
  if (name == "comps") return Suite::kComps;
  Fail(ErrorCode::kArgument, "unknown suite '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// CorpusManifest

CorpusManifest CorpusManifest::Create(std::vector<Phenomenon> phenomena,
                                      std::vector<MinimalPair> pairs,
                                      std::map<std::string, AlignmentSpan> alignments) {
  CorpusManifest m;
  m.phenomena_ = std::move(phenomena);
  m.pairs_ = std::move(pairs);
  for (std::size_t i = 0; i < m.phenomena_.size(); ++i) {
    if (!m.phenomenon_index_.emplace(m.phenomena_[i].id, i).second)
      Fail(ErrorCode::kIntegrity, "duplicate phenomenon id '" + m.phenomena_[i].id + "'");
  }
  std::set<std::string, std::less<>> pair_ids;
  for (std::size_t i = 0; i < m.pairs_.size(); ++i) {
    const MinimalPair &pair = m.pairs_[i];
    if (!pair_ids.insert(pair.id).second)
      Fail(ErrorCode::kIntegrity, "duplicate pair id '" + pair.id + "'");
    if (!m.phenomenon_index_.contains(pair.phenomenon_id))
      Fail(ErrorCode::kIntegrity, "pair '" + pair.id + "' references unknown phenomenon '" +
                                      pair.phenomenon_id + "'");
    for (bool is_pos : {true, false}) {
      const Utterance &u = is_pos ? pair.pos : pair.neg;
      if (!m.utterance_index_.emplace(u.id, std::make_pair(i, is_pos)).second)
        Fail(ErrorCode::kIntegrity, "duplicate utterance id '" + u.id + "'");
    }
  }
  return m.WithAlignments(std::move(alignments));
}

CorpusManifest CorpusManifest::WithAlignments(
    std::map<std::string, AlignmentSpan> alignments) const {
  for (const auto &[id, span] : alignments) {
    if (!utterance_index_.contains(id))
      Fail(ErrorCode::kIntegrity, "alignment for unknown utterance '" + id + "'");
    if (span.utterance_id != id)
      Fail(ErrorCode::kIntegrity, "alignment key mismatch for '" + id + "'");
  }
  CorpusManifest copy = *this;
  copy.alignments_ = std::move(alignments);
  return copy;
}

const Phenomenon *CorpusManifest::FindPhenomenon(std::string_view id) const {
  auto it = phenomenon_index_.find(id);
  return it == phenomenon_index_.end() ? nullptr : &phenomena_[it->second];
}

const Utterance *CorpusManifest::FindUtterance(std::string_view id) const {
  auto it = utterance_index_.find(id);
  if (it == utterance_index_.end()) return nullptr;
  const MinimalPair &pair = pairs_[it->second.first];
  return it->second.second ? &pair.pos : &pair.neg;
}

const AlignmentSpan *CorpusManifest::FindAlignment(std::string_view utterance_id) const {
  auto it = alignments_.find(std::string(utterance_id));
  return it == alignments_.end() ? nullptr : &it->second;
}

std::vector<const MinimalPair *> CorpusManifest::PairsOf(std::string_view phenomenon_id) const {
  std::vector<const MinimalPair *> out;
  for (const MinimalPair &pair : pairs_)
    if (pair.phenomenon_id == phenomenon_id) out.push_back(&pair);
  return out;
}

// ---------------------------------------------------------------------------
// Manifest I/O

namespace {

[[noreturn]] void ParseFail(const std::string &source, std::size_t line, const std::string &msg) {
  Fail(ErrorCode::kParse, source + ":" + std::to_string(line) + ": " + msg);
}

bool IsValidId(const std::string &id) {
  if (id.empty()) return false;
  return std::none_of(id.begin(), id.end(),
                      [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string RequireId(const json &obj, const char *key, const std::string &source,
                      std::size_t line) {
  if (!obj.contains(key) || !obj[key].is_string())
    ParseFail(source, line, std::string("missing string field '") + key + "'");
  std::string id = obj[key].get<std::string>();
  if (!IsValidId(id)) ParseFail(source, line, std::string("invalid id in '") + key + "'");
  return id;
}

std::optional<std::string> OptionalString(const json &obj, const char *key) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return obj[key].get<std::string>();
}

Utterance ParseMember(const json &obj, int default_label, const std::string &source,
                      std::size_t line) {
  if (!obj.is_object()) ParseFail(source, line, "pair member must be an object");
  Utterance u;
  u.id = RequireId(obj, "utt_id", source, line);
  if (!obj.contains("text") || !obj["text"].is_string())
    ParseFail(source, line, "member '" + u.id + "' lacks text");
  u.text = obj["text"].get<std::string>();
  u.label = obj.value("z", default_label);
  if (u.label != 0 && u.label != 1)
    ParseFail(source, line, "label z must be 0 or 1 for '" + u.id + "'");
  u.audio_ref = OptionalString(obj, "audio_ref");
  u.base_audio_id = OptionalString(obj, "base_audio_id");
  if (obj.contains("duration_ms") && !obj["duration_ms"].is_null()) {
    std::int64_t d = obj["duration_ms"].get<std::int64_t>();
    if (d < 0) ParseFail(source, line, "negative duration for '" + u.id + "'");
    u.duration_ms = d;
  }
  return u;
}

json MemberToJson(const Utterance &u) {
  json j;
  j["utt_id"] = u.id;
  j["text"] = u.text;
  j["z"] = u.label;
  if (u.audio_ref) j["audio_ref"] = *u.audio_ref;
  if (u.base_audio_id) j["base_audio_id"] = *u.base_audio_id;
  if (u.duration_ms) j["duration_ms"] = *u.duration_ms;
  return j;
}

}  // namespace

CorpusManifest ParseManifest(std::istream &in, const std::string &source) {
  std::vector<Phenomenon> declared;
  std::map<std::string, Phenomenon> implied;
  std::vector<std::string> implied_order;
  std::vector<MinimalPair> pairs;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (Trim(text).empty()) continue;
    json rec;
    try {
      rec = json::parse(text);
    } catch (const json::exception &e) {
      ParseFail(source, line, e.what());
    }
    if (!rec.is_object()) ParseFail(source, line, "record must be an object");
    try {
      const std::string kind = rec.value("record", std::string("pair"));
      if (kind == "phenomenon") {
        Phenomenon p;
        p.id = RequireId(rec, "id", source, line);
        p.name = rec.value("name", p.id);
        p.level = ParseLevel(rec.at("level").get<std::string>());
        p.suite = ParseSuite(rec.at("suite").get<std::string>());
        declared.push_back(std::move(p));
        continue;
      }
      if (kind != "pair") ParseFail(source, line, "unknown record type '" + kind + "'");

      MinimalPair pair;
      pair.id = RequireId(rec, "pair_id", source, line);
      pair.phenomenon_id = RequireId(rec, "phenomenon_id", source, line);
      if (!rec.contains("pos") || !rec.contains("neg"))
        ParseFail(source, line, "pair '" + pair.id + "' needs pos and neg members");
      pair.pos = ParseMember(rec["pos"], 1, source, line);
      pair.neg = ParseMember(rec["neg"], 0, source, line);
      pair.critical_word = rec.value("critical_word", std::string());
      pair.critical_word_index = rec.value("critical_word_index", 0);
      if (pair.critical_word_index < 0)
        ParseFail(source, line, "negative critical_word_index");
      if (pair.pos.label != 1 || pair.neg.label != 0)
        Fail(ErrorCode::kValidation, source + ":" + std::to_string(line) + ": pair '" +
                                         pair.id + "' must have z=1 (pos) and z=0 (neg) members");
      if (rec.contains("level") && rec.contains("suite")) {
        Phenomenon p{pair.phenomenon_id, rec.value("phenomenon_name", pair.phenomenon_id),
                     ParseLevel(rec["level"].get<std::string>()),
                     ParseSuite(rec["suite"].get<std::string>())};
        auto [it, inserted] = implied.emplace(p.id, p);
        if (inserted) {
          implied_order.push_back(p.id);
        } else if (it->second.level != p.level || it->second.suite != p.suite) {
          Fail(ErrorCode::kIntegrity, source + ":" + std::to_string(line) +
                                          ": inconsistent level/suite for phenomenon '" +
                                          p.id + "'");
        }
      }
      pairs.push_back(std::move(pair));
    } catch (const json::exception &e) {
      ParseFail(source, line, e.what());
    } catch (const Error &e) {
      if (e.code() == ErrorCode::kArgument) ParseFail(source, line, e.what());
      throw;
    }
  }

  // Declared phenomena are authoritative; pair-level fields must agree with
  // them. Without declarations, phenomena are implied by pair records.
  std::vector<Phenomenon> phenomena = declared;
  for (const std::string &id : implied_order) {
    const Phenomenon &p = implied.at(id);
    auto it = std::find_if(declared.begin(), declared.end(),
                           [&](const Phenomenon &d) { return d.id == id; });
    if (it == declared.end()) {
      if (!declared.empty())
        Fail(ErrorCode::kIntegrity, source + ": phenomenon '" + id + "' is not declared");
      phenomena.push_back(p);
    } else if (it->level != p.level || it->suite != p.suite) {
      Fail(ErrorCode::kIntegrity,
           source + ": pair records disagree with declaration of phenomenon '" + id + "'");
    }
  }
  return CorpusManifest::Create(std::move(phenomena), std::move(pairs));
}

CorpusManifest LoadManifest(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open manifest " + path);
  return ParseManifest(in, path);
}

void WriteManifest(const CorpusManifest &manifest, std::ostream &out) {
  for (const Phenomenon &p : manifest.phenomena()) {
    json j;
    j["record"] = "phenomenon";
    j["id"] = p.id;
    j["name"] = p.name;
    j["level"] = LevelName(p.level);
    j["suite"] = SuiteName(p.suite);
    out << j.dump() << '\n';
  }
  for (const MinimalPair &pair : manifest.pairs()) {
    const Phenomenon *p = manifest.FindPhenomenon(pair.phenomenon_id);
    json j;
    j["record"] = "pair";
    j["pair_id"] = pair.id;
    j["phenomenon_id"] = pair.phenomenon_id;
    j["level"] = LevelName(p->level);
    j["suite"] = SuiteName(p->suite);
    j["pos"] = MemberToJson(pair.pos);
    j["neg"] = MemberToJson(pair.neg);
    j["critical_word"] = pair.critical_word;
    j["critical_word_index"] = pair.critical_word_index;
    out << j.dump() << '\n';
  }
}

void SaveManifest(const CorpusManifest &manifest, const std::string &path) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write manifest " + path);
  WriteManifest(manifest, out);
}

std::map<std::string, AlignmentSpan> ParseAlignments(std::istream &in,
                                                     const std::string &source) {
  std::map<std::string, AlignmentSpan> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (Trim(text).empty()) continue;
    AlignmentSpan span;
    try {
      json rec = json::parse(text);
      span.utterance_id = RequireId(rec, "utterance_id", source, line);
      span.word = rec.value("word", std::string());
      span.onset_ms = rec.at("onset_ms").get<std::int64_t>();
      span.offset_ms = rec.at("offset_ms").get<std::int64_t>();
    } catch (const json::exception &e) {
      ParseFail(source, line, e.what());
    }
    if (span.onset_ms < 0) ParseFail(source, line, "negative onset_ms");
    if (span.offset_ms <= span.onset_ms) ParseFail(source, line, "offset_ms must exceed onset_ms");
    if (!out.emplace(span.utterance_id, span).second)
      Fail(ErrorCode::kIntegrity, source + ":" + std::to_string(line) +
                                      ": duplicate alignment for '" + span.utterance_id + "'");
  }
  return out;
}

std::map<std::string, AlignmentSpan> LoadAlignments(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open alignments " + path);
  return ParseAlignments(in, path);
}

void SaveAlignments(const std::map<std::string, AlignmentSpan> &alignments,
                    const std::string &path) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write alignments " + path);
  for (const auto &[id, span] : alignments) {
    json j;
    j["utterance_id"] = span.utterance_id;
    j["word"] = span.word;
    j["onset_ms"] = span.onset_ms;
    j["offset_ms"] = span.offset_ms;
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Validation

std::vector<std::string> NormalizedWords(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    std::string word;
    for (unsigned char c : token) {
      if (std::ispunct(c)) continue;
      word.push_back(static_cast<char>(std::tolower(c)));
    }
    if (!word.empty()) words.push_back(std::move(word));
  }
  return words;
}

std::size_t WordEditDistance(std::string_view a, std::string_view b) {
  const std::vector<std::string> x = NormalizedWords(a);
  const std::vector<std::string> y = NormalizedWords(b);
  std::vector<std::size_t> prev(y.size() + 1), cur(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      std::size_t sub = prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

std::string_view ViolationKindName(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kEditDistance: return "edit_distance";
    case ViolationKind::kLabel: return "label";
    case ViolationKind::kEmptyText: return "empty_text";
    case ViolationKind::kImbalance: return "imbalance";
    case ViolationKind::kMissingAlignment: return "missing_alignment";
    case ViolationKind::kAlignmentBounds: return "alignment_bounds";
    case ViolationKind::kCriticalWordIndex: return "critical_word_index";
    case ViolationKind::kSuiteLevel: return "suite_level";
    case ViolationKind::kCorpusSize: return "corpus_size";
  }
  return "unknown";
}

std::vector<Violation> ValidateCorpus(const CorpusManifest &manifest,
                                      const ValidationOptions &options) {
  std::vector<Violation> out;
  int blimp = 0, comps = 0;
  for (const Phenomenon &p : manifest.phenomena()) {
    (p.suite == Suite::kBlimp ? blimp : comps) += 1;
    const bool conceptual = p.level == LinguisticLevel::kConcept;
    if ((p.suite == Suite::kComps) != conceptual)
      out.push_back({ViolationKind::kSuiteLevel, p.id,
                     std::string(SuiteName(p.suite)) + " phenomenon at level " +
                         std::string(LevelName(p.level))});
  }
  if (options.expect_full_inventory &&
      (blimp != kFullBlimpPhenomena || comps != kFullCompsPhenomena))
    out.push_back({ViolationKind::kCorpusSize, "corpus",
                   std::to_string(blimp) + " blimp / " + std::to_string(comps) +
                       " comps phenomena"});

  std::map<std::string, std::pair<int, int>> label_counts;
  for (const Phenomenon &p : manifest.phenomena()) label_counts[p.id] = {0, 0};

  for (const MinimalPair &pair : manifest.pairs()) {
    auto &counts = label_counts[pair.phenomenon_id];
    for (const Utterance *u : {&pair.pos, &pair.neg}) {
      (u->label == 1 ? counts.first : counts.second) += 1;
      if (Trim(u->text).empty())
        out.push_back({ViolationKind::kEmptyText, u->id, "empty text"});
    }
    if (pair.pos.label != 1 || pair.neg.label != 0)
      out.push_back({ViolationKind::kLabel, pair.id,
                     "pos z=" + std::to_string(pair.pos.label) +
                         ", neg z=" + std::to_string(pair.neg.label)});
    const std::size_t dist = WordEditDistance(pair.pos.text, pair.neg.text);
    if (dist != 1)
      out.push_back({ViolationKind::kEditDistance, pair.id,
                     "word edit distance " + std::to_string(dist)});
    for (const Utterance *u : {&pair.pos, &pair.neg}) {
      const std::size_t words = NormalizedWords(u->text).size();
      if (!u->text.empty() && static_cast<std::size_t>(pair.critical_word_index) >= words)
        out.push_back({ViolationKind::kCriticalWordIndex, u->id,
                       "index " + std::to_string(pair.critical_word_index) + " beyond " +
                           std::to_string(words) + " words"});
      const AlignmentSpan *span = manifest.FindAlignment(u->id);
      if (span == nullptr) {
        if (options.require_alignments)
          out.push_back({ViolationKind::kMissingAlignment, u->id, "no critical-word alignment"});
      } else if (u->duration_ms && span->offset_ms > *u->duration_ms) {
        out.push_back({ViolationKind::kAlignmentBounds, u->id,
                       "offset " + std::to_string(span->offset_ms) + " ms beyond duration " +
                           std::to_string(*u->duration_ms) + " ms"});
      }
    }
  }
  for (const auto &[id, counts] : label_counts) {
    if (counts.first == 0 && counts.second == 0)
      out.push_back({ViolationKind::kImbalance, id, "phenomenon has no pairs"});
    else if (counts.first != counts.second)
      out.push_back({ViolationKind::kImbalance, id,
                     std::to_string(counts.first) + " acceptable vs " +
                         std::to_string(counts.second) + " unacceptable"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Folds

int FoldAssignment::FoldOf(std::string_view pair_id) const {
  auto it = fold_of_.find(pair_id);
  if (it == fold_of_.end())
    Fail(ErrorCode::kLookup, "pair '" + std::string(pair_id) + "' has no fold");
  return it->second;
}

bool FoldAssignment::Contains(std::string_view pair_id) const {
  return fold_of_.find(pair_id) != fold_of_.end();
}

std::vector<std::size_t> FoldAssignment::FoldSizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k_), 0);
  for (const auto &[id, fold] : fold_of_) ++sizes[static_cast<std::size_t>(fold)];
  return sizes;
}

FoldAssignment AssignFoldsForPairs(std::vector<std::string> pair_ids, int k,
                                   std::uint64_t seed) {
  if (k < 2) Fail(ErrorCode::kArgument, "fold count must be at least 2");
  if (pair_ids.size() < static_cast<std::size_t>(k))
    Fail(ErrorCode::kInsufficientData, std::to_string(pair_ids.size()) +
                                           " pairs cannot fill " + std::to_string(k) + " folds");
  std::sort(pair_ids.begin(), pair_ids.end());
  Rng rng(seed);
  rng.Shuffle(pair_ids);
  std::map<std::string, int> fold_of;
  for (std::size_t i = 0; i < pair_ids.size(); ++i)
    fold_of.emplace(pair_ids[i], static_cast<int>(i % static_cast<std::size_t>(k)));
  return FoldAssignment(k, std::move(fold_of));
}

FoldAssignment AssignFolds(const CorpusManifest &manifest, std::string_view phenomenon_id,
                           int k, std::uint64_t seed) {
  if (manifest.FindPhenomenon(phenomenon_id) == nullptr)
    Fail(ErrorCode::kLookup, "unknown phenomenon '" + std::string(phenomenon_id) + "'");
  std::vector<std::string> ids;
  for (const MinimalPair *pair : manifest.PairsOf(phenomenon_id)) ids.push_back(pair->id);
  return AssignFoldsForPairs(std::move(ids), k, MixSeed(seed, StableHash(phenomenon_id)));
}

}  // namespace lprobe
