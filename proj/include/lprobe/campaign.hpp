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

#ifndef LPROBE_CAMPAIGN_HPP_
#define LPROBE_CAMPAIGN_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lprobe/analysis.hpp"
#include "lprobe/controls.hpp"
#include "lprobe/corpus.hpp"
#include "lprobe/pooling.hpp"
#include "lprobe/probe.hpp"
#include "lprobe/table.hpp"

namespace lprobe {

// Condition groups a campaign can request.
inline constexpr std::string_view kGroupMean = "mean";
inline constexpr std::string_view kGroupPositions = "positions";
inline constexpr std::string_view kGroupTemporal = "temporal";
inline constexpr std::string_view kGroupRandomControl = "ctrl:randemb";

struct CampaignConfig {
  std::string manifest_path;
  std::string alignments_path;       // required for temporal
  std::string store_path;
  std::string untrained_store_path;  // optional; enables selection scores
  std::vector<std::string> tasks;    // phenomenon ids or level names; empty = all
  int first_layer = 0;
  int last_layer = -1;               // -1 = last layer of the store
  std::vector<std::string> conditions = {std::string(kGroupMean)};
  int k_folds = 5;
  TrainConfig train;
  TemporalGrid grid = TemporalGrid::Default();
  ShareBy share_by = ShareBy::kPair;
  MomentMode moment_mode = MomentMode::kPerDimension;
  std::string output_dir;
  std::uint64_t seed = 0;
  // Execution only; excluded from the config hash and from all outputs.
  int jobs = 0;  // 0 = hardware concurrency

  // Canonical JSON (sorted keys, no jobs field).
  std::string ToJson() const;
  // Unknown keys are rejected (kArgument).
  static CampaignConfig FromJson(std::string_view text);
};

struct CampaignSummary {
  std::string output_dir;
  std::size_t result_rows = 0;
  std::size_t failed_probes = 0;
  std::size_t score_rows = 0;
  std::size_t skipped_pairs = 0;
  std::string run_hash;
};

struct ResultRow {
  std::string model;
  bool trained = true;
  std::string level;
  ProbeResult result;
  std::optional<double> selection;
};

inline constexpr const char *kResultsFile = "results.tsv";
inline constexpr const char *kScoresFile = "scores.tsv";
inline constexpr const char *kRunManifestFile = "run.json";

// Validates inputs, probes every (task, layer, condition) cell, and writes
// results.tsv, scores.tsv (when an untrained store is given) and run.json.
// Validation problems throw before any probe runs; per-probe failures are
// recorded as failed rows.
CampaignSummary RunCampaign(const CampaignConfig &config);

// Results-table (de)serialization.
Table ResultsToTable(std::span<const ResultRow> rows);
std::vector<ResultRow> ResultsFromTable(const Table &table);
std::vector<ResultRow> LoadResults(const std::string &path);

// Joins trained and untrained rows on (task, layer, condition).
std::vector<ScoreReport> JoinScores(std::span<const ResultRow> trained,
                                    std::span<const ResultRow> untrained);
Table ScoresToTable(std::span<const ScoreReport> scores, const TaskLevels &levels,
                    std::string_view model);

// Joins two campaign directories (or two results tables) into scores.tsv.
std::size_t ScoreDirectories(const std::string &trained, const std::string &untrained,
                             const std::string &output_dir);

struct ReportSummary {
  std::vector<std::string> files;
  std::size_t models = 0;
};

// Emits curves, peaks, temporal profiles, positional comparison, and
// selection tables for every model found in the campaign directories.
// Throws kGap naming missing cells when a campaign is incomplete.
ReportSummary Report(const std::vector<std::string> &campaign_dirs, const std::string &output_dir);

struct ProjectConfig {
  std::string manifest_path;
  std::string alignments_path;
  std::string store_path;
  int layer = 0;
  std::string condition = "mean";
  std::string import_path;  // externally computed coordinates instead of PCA
  std::string output_dir;

  static ProjectConfig FromJson(std::string_view text);
};

struct ProjectSummary {
  std::size_t points = 0;
  std::size_t skipped = 0;
  double explained_share = 0.0;
  double silhouette_by_level = 0.0;
  bool degenerate = false;
};

ProjectSummary RunProjection(const ProjectConfig &config);

}  // namespace lprobe

#endif  // LPROBE_CAMPAIGN_HPP_
