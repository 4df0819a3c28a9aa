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

#include "lprobe/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "lprobe/embedding_store.hpp"
#include "lprobe/error.hpp"
#include "lprobe/util.hpp"

namespace lprobe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char *kToolVersion = "lprobe 0.1.0";
constexpr std::size_t kMaxListedCells = 50;

std::string Sanitize(std::string text) {
  for (char &c : text)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  return text;
}

std::string OptionalCell(const std::optional<double> &v) { return v ? FormatDouble(*v) : "NA"; }

std::optional<double> ParseOptional(const std::string &cell) {
  if (cell == "NA") return std::nullopt;
  return ParseDouble(cell);
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads; the first exception
// is rethrown after every worker has joined.
void ParallelFor(std::size_t count, int jobs, const std::function<void(std::size_t)> &fn) {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      std::min<std::size_t>(count, jobs > 0 ? static_cast<std::size_t>(jobs) : hw);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread &t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<Condition> ExpandConditions(const std::vector<std::string> &groups,
                                        const TemporalGrid &grid) {
  std::set<Condition> out;
  for (const std::string &g : groups) {
    if (g == kGroupMean) {
      out.insert(Condition::Mean());
    } else if (g == kGroupPositions) {
      for (int q = 0; q <= 4; ++q) out.insert(Condition::PositionQuarter(q));
    } else if (g == kGroupTemporal) {
      for (std::int64_t ms : grid.offsets_ms) out.insert(Condition::Temporal(ms));
    } else if (g == kGroupRandomControl) {
      out.insert(Condition::RandomControl());
    } else {
      out.insert(Condition::Parse(g));  // single labels such as "pos:0.5"
    }
  }
  if (out.empty()) Fail(ErrorCode::kArgument, "no probing conditions requested");
  return {out.begin(), out.end()};
}

bool IsTemporal(const Condition &c) { return c.kind() == Condition::Kind::kTemporal; }
bool IsControl(const Condition &c) { return c.kind() == Condition::Kind::kRandomControl; }

struct TaskPlan {
  std::string task;
  LinguisticLevel level = LinguisticLevel::kSyntax;
  std::vector<const MinimalPair *> pairs;          // members present in every store
  std::vector<const MinimalPair *> aligned_pairs;  // ... and both members aligned
  std::optional<FoldAssignment> folds;
  std::optional<FoldAssignment> aligned_folds;
  std::size_t skipped = 0;
  std::size_t skipped_temporal = 0;
};

struct Unit {
  const EmbeddingStore *store = nullptr;
  const TaskPlan *plan = nullptr;
  int layer = 0;
};

std::uint64_t ProbeSeed(std::uint64_t seed, const std::string &task, int layer,
                        const Condition &c) {
  return MixSeed(seed, StableHash(task + "|" + std::to_string(layer) + "|" + c.Label()));
}

ProbeResult FailedResult(const std::string &task, int layer, const Condition &c,
                         const TrainConfig &cfg, const std::string &why) {
  ProbeResult r;
  r.task = task;
  r.layer = layer;
  r.condition = c;
  r.ok = false;
  r.accuracy_mean = r.accuracy_stderr = r.pooled_accuracy = std::nan("");
  r.config = cfg.Fingerprint();
  r.note = Sanitize(why);
  return r;
}

std::vector<ProbeResult> RunUnit(const Unit &unit, const std::vector<Condition> &conditions,
                                 const CampaignConfig &config, const CorpusManifest &manifest) {
  const TaskPlan &plan = *unit.plan;
  const EmbeddingStore &store = *unit.store;
  const FrameRate rate = store.header().frame_rate[static_cast<std::size_t>(unit.layer)];
  const bool want_control = std::any_of(conditions.begin(), conditions.end(), IsControl);
  std::set<std::string, std::less<>> aligned;
  for (const MinimalPair *p : plan.aligned_pairs) aligned.insert(p->id);

  // Pool every requested condition per utterance, then release the tensor.
  std::map<Condition, std::vector<PooledVector>> pooled;
  std::vector<PooledVector> control_source;
  std::vector<Sample> samples, aligned_samples;
  for (const MinimalPair *pair : plan.pairs) {
    const bool has_alignment = aligned.contains(pair->id);
    for (const Utterance *u : {&pair->pos, &pair->neg}) {
      const LayerTensor tensor = store.ReadLayer(u->id, unit.layer);
      const AlignmentSpan *onset = manifest.FindAlignment(u->id);
      for (const Condition &c : conditions) {
        if (IsControl(c) || (IsTemporal(c) && !has_alignment)) continue;
        pooled[c].push_back(PoolForCondition(tensor, c, onset, rate));
      }
      if (want_control) control_source.push_back(MeanPool(tensor));
      samples.push_back({pair->id, u->label});
      if (has_alignment) aligned_samples.push_back({pair->id, u->label});
    }
  }

  std::vector<ProbeResult> out;
  for (const Condition &c : conditions) {
    TrainConfig cfg = config.train;
    cfg.seed = ProbeSeed(config.seed, plan.task, unit.layer, c);
    try {
      ProbeResult r;
      std::string note;
      if (IsControl(c)) {
        const MatchedNoiseSpec spec = EstimateNoiseSpec(
            control_source, config.moment_mode, config.share_by, cfg.seed,
            store.header().model_id + "/layer=" + std::to_string(unit.layer) + "/mean");
        const std::vector<PooledVector> noise =
            MatchedRandomFeatures(spec, plan.pairs, unit.layer);
        r = CrossValidate(StackFeatures(noise), samples, *plan.folds, cfg);
        if (spec.floored_dims > 0)
          note = std::to_string(spec.floored_dims) + " zero-variance dims floored";
      } else if (IsTemporal(c)) {
        if (!plan.aligned_folds) Fail(ErrorCode::kAlignmentMissing, "no aligned pairs");
        r = CrossValidate(StackFeatures(pooled[c]), aligned_samples, *plan.aligned_folds, cfg);
      } else {
        r = CrossValidate(StackFeatures(pooled[c]), samples, *plan.folds, cfg);
      }
      r.task = plan.task;
      r.layer = unit.layer;
      r.condition = c;
      if (!note.empty()) r.note = r.note.empty() ? note : r.note + "; " + note;
      r.note = Sanitize(r.note);
      out.push_back(std::move(r));
    } catch (const Error &e) {
      out.push_back(FailedResult(plan.task, unit.layer, c, cfg, e.what()));
    }
  }
  return out;
}

bool RowLess(const ResultRow &a, const ResultRow &b) {
  return std::make_tuple(a.model, !a.trained, a.result.task, a.result.layer, a.result.condition) <
         std::make_tuple(b.model, !b.trained, b.result.task, b.result.layer, b.result.condition);
}

std::string ReadFileText(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<std::string> SelectTasks(const CorpusManifest &manifest,
                                     const std::vector<std::string> &filter) {
  std::set<std::string> chosen;
  if (filter.empty()) {
    for (const Phenomenon &p : manifest.phenomena()) chosen.insert(p.id);
  }
  for (const std::string &item : filter) {
    bool is_level = false;
    for (LinguisticLevel level : kAllLevels) {
      if (LevelName(level) != item) continue;
      is_level = true;
      for (const Phenomenon &p : manifest.phenomena())
        if (p.level == level) chosen.insert(p.id);
    }
    if (is_level) continue;
    if (manifest.FindPhenomenon(item) == nullptr)
      Fail(ErrorCode::kArgument, "unknown task or level '" + item + "'");
    chosen.insert(item);
  }
  if (chosen.empty()) Fail(ErrorCode::kArgument, "task filter selects no phenomena");
  return {chosen.begin(), chosen.end()};
}

std::string ResultsPath(const std::string &dir_or_file) {
  if (fs::is_directory(dir_or_file)) return (fs::path(dir_or_file) / kResultsFile).string();
  return dir_or_file;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

std::string CampaignConfig::ToJson() const {
  json j;
  j["manifest"] = manifest_path;
  j["alignments"] = alignments_path;
  j["store"] = store_path;
  j["untrained_store"] = untrained_store_path;
  j["tasks"] = tasks;
  j["first_layer"] = first_layer;
  j["last_layer"] = last_layer;
  j["conditions"] = conditions;
  j["k_folds"] = k_folds;
  j["l2"] = train.l2_strength;
  j["max_iterations"] = train.max_iterations;
  j["tol"] = train.convergence_tol;
  j["standardize"] = train.standardize;
  j["grid"] = grid.offsets_ms;
  j["share_by"] = ShareByName(share_by);
  j["moment_mode"] = MomentModeName(moment_mode);
  j["output_dir"] = output_dir;
  j["seed"] = seed;
  return j.dump();
}

CampaignConfig CampaignConfig::FromJson(std::string_view text) {
  CampaignConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    Fail(ErrorCode::kArgument, std::string("bad campaign config: ") + e.what());
  }
  if (!j.is_object()) Fail(ErrorCode::kArgument, "campaign config must be an object");
  static const std::set<std::string> kKnown = {
      "manifest", "alignments", "store", "untrained_store", "tasks", "first_layer",
      "last_layer", "conditions", "k_folds", "l2", "max_iterations", "tol", "standardize",
      "grid", "share_by", "moment_mode", "output_dir", "seed", "jobs"};
  for (const auto &[key, value] : j.items())
    if (!kKnown.contains(key)) Fail(ErrorCode::kArgument, "unknown config key '" + key + "'");
  try {
    c.manifest_path = j.value("manifest", c.manifest_path);
    c.alignments_path = j.value("alignments", c.alignments_path);
    c.store_path = j.value("store", c.store_path);
    c.untrained_store_path = j.value("untrained_store", c.untrained_store_path);
    c.tasks = j.value("tasks", c.tasks);
    c.first_layer = j.value("first_layer", c.first_layer);
    c.last_layer = j.value("last_layer", c.last_layer);
    c.conditions = j.value("conditions", c.conditions);
    c.k_folds = j.value("k_folds", c.k_folds);
    c.train.l2_strength = j.value("l2", c.train.l2_strength);
    c.train.max_iterations = j.value("max_iterations", c.train.max_iterations);
    c.train.convergence_tol = j.value("tol", c.train.convergence_tol);
    c.train.standardize = j.value("standardize", c.train.standardize);
    if (j.contains("grid")) c.grid.offsets_ms = j["grid"].get<std::vector<std::int64_t>>();
    if (j.contains("share_by")) c.share_by = ParseShareBy(j["share_by"].get<std::string>());
    if (j.contains("moment_mode"))
      c.moment_mode = ParseMomentMode(j["moment_mode"].get<std::string>());
    c.output_dir = j.value("output_dir", c.output_dir);
    c.seed = j.value("seed", c.seed);
    c.jobs = j.value("jobs", c.jobs);
  } catch (const json::exception &e) {
    Fail(ErrorCode::kArgument, std::string("bad campaign config: ") + e.what());
  }
  return c;
}

ProjectConfig ProjectConfig::FromJson(std::string_view text) {
  ProjectConfig c;
  try {
    json j = json::parse(text);
    c.manifest_path = j.value("manifest", c.manifest_path);
    c.alignments_path = j.value("alignments", c.alignments_path);
    c.store_path = j.value("store", c.store_path);
    c.layer = j.value("layer", c.layer);
    c.condition = j.value("condition", c.condition);
    c.import_path = j.value("import", c.import_path);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const json::exception &e) {
    Fail(ErrorCode::kArgument, std::string("bad projection config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Results tables

Table ResultsToTable(std::span<const ResultRow> rows) {
  Table t;
  t.columns = {"model",       "trained",   "task",         "level",        "layer",
               "condition",   "status",    "n_samples",    "k_folds",      "failed_folds",
               "nonconverged_folds",       "accuracy",     "stderr",       "pooled_accuracy",
               "confidence",  "selection", "config",       "note"};
  for (const ResultRow &row : rows) {
    const ProbeResult &r = row.result;
    t.AddRow({row.model, row.trained ? "1" : "0", r.task, row.level, std::to_string(r.layer),
              r.condition.Label(), r.ok ? "ok" : "failed", std::to_string(r.n_samples),
              std::to_string(r.k_folds), std::to_string(r.failed_folds),
              std::to_string(r.nonconverged_folds), FormatDouble(r.accuracy_mean),
              FormatDouble(r.accuracy_stderr), FormatDouble(r.pooled_accuracy),
              OptionalCell(r.confidence), OptionalCell(row.selection), r.config,
              r.note.empty() ? "-" : Sanitize(r.note)});
  }
  return t;
}

std::vector<ResultRow> ResultsFromTable(const Table &t) {
  const std::size_t c_model = t.Column("model"), c_trained = t.Column("trained"),
                    c_task = t.Column("task"), c_level = t.Column("level"),
                    c_layer = t.Column("layer"), c_cond = t.Column("condition"),
                    c_status = t.Column("status"), c_n = t.Column("n_samples"),
                    c_k = t.Column("k_folds"), c_failed = t.Column("failed_folds"),
                    c_nonconv = t.Column("nonconverged_folds"), c_acc = t.Column("accuracy"),
                    c_se = t.Column("stderr"), c_pooled = t.Column("pooled_accuracy"),
                    c_conf = t.Column("confidence"), c_sel = t.Column("selection"),
                    c_config = t.Column("config"), c_note = t.Column("note");
  std::vector<ResultRow> out;
  for (const auto &cells : t.rows) {
    ResultRow row;
    row.model = cells[c_model];
    row.trained = cells[c_trained] == "1";
    row.level = cells[c_level];
    ProbeResult &r = row.result;
    r.task = cells[c_task];
    r.layer = static_cast<int>(ParseInt(cells[c_layer]));
    r.condition = Condition::Parse(cells[c_cond]);
    r.ok = cells[c_status] == "ok";
    r.n_samples = static_cast<std::size_t>(ParseInt(cells[c_n]));
    r.k_folds = static_cast<int>(ParseInt(cells[c_k]));
    r.failed_folds = static_cast<int>(ParseInt(cells[c_failed]));
    r.nonconverged_folds = static_cast<int>(ParseInt(cells[c_nonconv]));
    r.accuracy_mean = ParseDouble(cells[c_acc]);
    r.accuracy_stderr = ParseDouble(cells[c_se]);
    r.pooled_accuracy = ParseDouble(cells[c_pooled]);
    r.confidence = ParseOptional(cells[c_conf]);
    row.selection = ParseOptional(cells[c_sel]);
    r.config = cells[c_config];
    r.note = cells[c_note] == "-" ? "" : cells[c_note];
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<ResultRow> LoadResults(const std::string &path) {
  return ResultsFromTable(ReadTsv(path));
}

std::vector<ScoreReport> JoinScores(std::span<const ResultRow> trained,
                                    std::span<const ResultRow> untrained) {
  std::map<std::tuple<std::string, int, Condition>, const ResultRow *> baseline;
  for (const ResultRow &row : untrained)
    if (row.result.ok)
      baseline[{row.result.task, row.result.layer, row.result.condition}] = &row;
  std::vector<ScoreReport> out;
  for (const ResultRow &row : trained) {
    if (!row.result.ok) continue;
    auto it = baseline.find({row.result.task, row.result.layer, row.result.condition});
    if (it == baseline.end()) continue;
    ScoreReport s;
    s.task = row.result.task;
    s.layer = row.result.layer;
    s.condition = row.result.condition;
    s.acc_trained = row.result.accuracy_mean;
    s.acc_untrained = it->second->result.accuracy_mean;
    s.selection = SelectionScore(s.acc_trained, s.acc_untrained);
    out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const ScoreReport &a, const ScoreReport &b) {
    return std::tie(a.task, a.layer, a.condition) < std::tie(b.task, b.layer, b.condition);
  });
  return out;
}

Table ScoresToTable(std::span<const ScoreReport> scores, const TaskLevels &levels,
                    std::string_view model) {
  Table t;
  t.columns = {"model", "task", "level", "layer", "condition", "acc_trained", "acc_untrained",
               "selection"};
  for (const ScoreReport &s : scores) {
    auto it = levels.find(s.task);
    t.AddRow({std::string(model), s.task,
              it == levels.end() ? "NA" : std::string(LevelName(it->second)),
              std::to_string(s.layer), s.condition.Label(), FormatDouble(s.acc_trained),
              FormatDouble(s.acc_untrained), FormatDouble(s.selection)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Campaign

CampaignSummary RunCampaign(const CampaignConfig &config) {
  // Pre-flight: every check that can abort happens before probing.
  if (config.output_dir.empty()) Fail(ErrorCode::kArgument, "output directory is required");
  if (config.k_folds < 2) Fail(ErrorCode::kArgument, "k_folds must be at least 2");
  const std::vector<Condition> conditions = ExpandConditions(config.conditions, config.grid);
  const bool temporal = std::any_of(conditions.begin(), conditions.end(), IsTemporal);
  if (temporal && config.alignments_path.empty())
    Fail(ErrorCode::kValidation, "temporal probing requires an alignment sidecar");
  if (temporal) config.grid.Check();

  CorpusManifest manifest = LoadManifest(config.manifest_path);
  if (!config.alignments_path.empty())
    manifest = manifest.WithAlignments(LoadAlignments(config.alignments_path));
  const std::vector<Violation> violations = ValidateCorpus(manifest);
  if (!violations.empty()) {
    std::string msg = std::to_string(violations.size()) + " corpus violation(s):";
    for (std::size_t i = 0; i < std::min<std::size_t>(violations.size(), 10); ++i)
      msg += " [" + std::string(ViolationKindName(violations[i].kind)) + " " +
             violations[i].subject + ": " + violations[i].detail + "]";
    Fail(ErrorCode::kValidation, msg);
  }

  std::vector<std::unique_ptr<EmbeddingStore>> stores;
  stores.push_back(std::make_unique<EmbeddingStore>(config.store_path));
  if (!config.untrained_store_path.empty())
    stores.push_back(std::make_unique<EmbeddingStore>(config.untrained_store_path));
  const int num_layers = stores.front()->header().num_layers();
  for (const auto &s : stores)
    if (s->header().num_layers() != num_layers)
      Fail(ErrorCode::kValidation, "trained and untrained stores differ in layer count");
  const int first = config.first_layer;
  const int last = config.last_layer < 0 ? num_layers - 1 : config.last_layer;
  if (first < 0 || first > last || last >= num_layers)
    Fail(ErrorCode::kRange, "layer range [" + std::to_string(first) + ", " +
                                std::to_string(last) + "] outside store with " +
                                std::to_string(num_layers) + " layers");

  const std::vector<std::string> tasks = SelectTasks(manifest, config.tasks);
  std::vector<TaskPlan> plans;
  plans.reserve(tasks.size());
  for (const std::string &task : tasks) {
    TaskPlan plan;
    plan.task = task;
    plan.level = manifest.FindPhenomenon(task)->level;
    const std::vector<const MinimalPair *> all = manifest.PairsOf(task);
    for (const MinimalPair *pair : all) {
      const bool stored = std::all_of(stores.begin(), stores.end(), [&](const auto &s) {
        return s->Contains(pair->pos.id) && s->Contains(pair->neg.id);
      });
      if (!stored) {
        ++plan.skipped;
        continue;
      }
      plan.pairs.push_back(pair);
      if (manifest.FindAlignment(pair->pos.id) && manifest.FindAlignment(pair->neg.id))
        plan.aligned_pairs.push_back(pair);
      else
        ++plan.skipped_temporal;
    }
    const double total = static_cast<double>(all.size());
    if (static_cast<double>(plan.pairs.size()) < kMinPairSurvival * total)
      Fail(ErrorCode::kInsufficientData, "task '" + task + "': " + std::to_string(plan.skipped) +
                                             " of " + std::to_string(all.size()) +
                                             " pairs missing from the embedding store(s)");
    const std::uint64_t fold_seed = MixSeed(config.seed, StableHash(task));
    std::vector<std::string> ids;
    for (const MinimalPair *p : plan.pairs) ids.push_back(p->id);
    plan.folds = AssignFoldsForPairs(ids, config.k_folds, fold_seed);
    if (temporal) {
      if (static_cast<double>(plan.aligned_pairs.size()) < kMinPairSurvival * total)
        Fail(ErrorCode::kAlignmentMissing,
             "task '" + task + "': " + std::to_string(plan.skipped_temporal) +
                 " pairs lack critical-word alignments");
      std::vector<std::string> aligned_ids;
      for (const MinimalPair *p : plan.aligned_pairs) aligned_ids.push_back(p->id);
      plan.aligned_folds = aligned_ids == ids
                               ? plan.folds
                               : AssignFoldsForPairs(aligned_ids, config.k_folds, fold_seed);
    }
    plans.push_back(std::move(plan));
  }

  std::vector<Unit> units;
  for (const auto &store : stores)
    for (const TaskPlan &plan : plans)
      for (int layer = first; layer <= last; ++layer) units.push_back({store.get(), &plan, layer});

  std::vector<std::vector<ProbeResult>> unit_results(units.size());
  ParallelFor(units.size(), config.jobs, [&](std::size_t i) {
    unit_results[i] = RunUnit(units[i], conditions, config, manifest);
  });

  std::vector<ResultRow> trained_rows, untrained_rows;
  CampaignSummary summary;
  summary.output_dir = config.output_dir;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const bool is_baseline = units[i].store != stores.front().get();
    for (ProbeResult &r : unit_results[i]) {
      ResultRow row;
      row.model = units[i].store->header().model_id;
      row.trained = units[i].store->header().trained;
      row.level = std::string(LevelName(units[i].plan->level));
      if (!r.ok) ++summary.failed_probes;
      row.result = std::move(r);
      (is_baseline ? untrained_rows : trained_rows).push_back(std::move(row));
    }
  }

  std::vector<ScoreReport> scores;
  if (stores.size() > 1) {
    scores = JoinScores(trained_rows, untrained_rows);
    std::map<std::tuple<std::string, int, Condition>, double> by_cell;
    for (const ScoreReport &s : scores) by_cell[{s.task, s.layer, s.condition}] = s.selection;
    for (ResultRow &row : trained_rows) {
      auto it = by_cell.find({row.result.task, row.result.layer, row.result.condition});
      if (it != by_cell.end()) row.selection = it->second;
    }
  }
  std::vector<ResultRow> rows = trained_rows;
  rows.insert(rows.end(), untrained_rows.begin(), untrained_rows.end());
  std::sort(rows.begin(), rows.end(), RowLess);

  fs::create_directories(config.output_dir);
  const fs::path out(config.output_dir);
  WriteTsv(ResultsToTable(rows), (out / kResultsFile).string());
  summary.result_rows = rows.size();
  if (stores.size() > 1) {
    WriteTsv(ScoresToTable(scores, TaskLevelsOf(manifest), stores.front()->header().model_id),
             (out / kScoresFile).string());
    summary.score_rows = scores.size();
  }

  // Run manifest.
  json run;
  run["tool"] = kToolVersion;
  run["config"] = json::parse(config.ToJson());
  run["config_hash"] = Sha256Hex(config.ToJson());
  std::string corpus_material = Sha256File(config.manifest_path);
  if (!config.alignments_path.empty()) corpus_material += Sha256File(config.alignments_path);
  run["corpus_hash"] = Sha256Hex(corpus_material);
  std::string run_material = run["config_hash"].get<std::string>() + run["corpus_hash"].get<std::string>();
  json store_info = json::array();
  for (std::size_t i = 0; i < stores.size(); ++i) {
    const StoreHeader &h = stores[i]->header();
    json s;
    s["role"] = i == 0 ? "probed" : "untrained_baseline";
    s["model_id"] = h.model_id;
    s["trained"] = h.trained;
    s["header_hash"] = Sha256Hex(h.ToJson());
    s["file_hash"] = Sha256File(stores[i]->path());
    run_material += s["header_hash"].get<std::string>() + s["file_hash"].get<std::string>();
    store_info.push_back(s);
  }
  run["stores"] = store_info;
  json cells;
  cells["tasks"] = tasks;
  cells["layers"] = {first, last};
  std::vector<std::string> labels;
  for (const Condition &c : conditions) labels.push_back(c.Label());
  cells["conditions"] = labels;
  json models = json::array();
  for (const auto &s : stores)
    models.push_back({{"model", s->header().model_id}, {"trained", s->header().trained}});
  cells["models"] = models;
  run["cells"] = cells;
  json skipped = json::object();
  for (const TaskPlan &plan : plans) {
    summary.skipped_pairs += plan.skipped;
    skipped[plan.task] = {{"store", plan.skipped},
                          {"temporal", temporal ? plan.skipped_temporal : 0}};
  }
  run["skipped_pairs"] = skipped;
  run["failed_probes"] = summary.failed_probes;
  summary.run_hash = Sha256Hex(run_material);
  run["run_hash"] = summary.run_hash;
  WriteText(run.dump(2) + "\n", (out / kRunManifestFile).string());
  return summary;
}

std::size_t ScoreDirectories(const std::string &trained, const std::string &untrained,
                             const std::string &output_dir) {
  auto pick = [](std::vector<ResultRow> rows, bool want_trained) {
    std::vector<ResultRow> chosen;
    for (const ResultRow &r : rows)
      if (r.trained == want_trained) chosen.push_back(r);
    return chosen.empty() ? rows : chosen;
  };
  const std::vector<ResultRow> a = pick(LoadResults(ResultsPath(trained)), true);
  const std::vector<ResultRow> b = pick(LoadResults(ResultsPath(untrained)), false);
  TaskLevels levels;
  for (const ResultRow &r : a) levels.emplace(r.result.task, ParseLevel(r.level));
  const std::vector<ScoreReport> scores = JoinScores(a, b);
  if (scores.empty())
    Fail(ErrorCode::kGap, "no (task, layer, condition) cells shared by the two result tables");
  fs::create_directories(output_dir);
  WriteTsv(ScoresToTable(scores, levels, a.front().model),
           (fs::path(output_dir) / kScoresFile).string());
  return scores.size();
}

// ---------------------------------------------------------------------------
// Report

namespace {

struct ModelKey {
  std::string model;
  bool trained;
  auto operator<=>(const ModelKey &) const = default;
};

std::string Missing(const std::vector<std::string> &cells) {
  std::string msg;
  for (std::size_t i = 0; i < std::min(cells.size(), kMaxListedCells); ++i) msg += " " + cells[i];
  if (cells.size() > kMaxListedCells)
    msg += " ... (" + std::to_string(cells.size()) + " in total)";
  return msg;
}

void CheckExpectedCells(const std::string &dir, const std::vector<ResultRow> &rows,
                        std::vector<std::string> &missing) {
  const fs::path run_path = fs::path(dir) / kRunManifestFile;
  if (!fs::exists(run_path)) return;
  json run;
  try {
    run = json::parse(ReadFileText(run_path.string()));
  } catch (const json::exception &e) {
    Fail(ErrorCode::kParse, run_path.string() + ": " + e.what());
  }
  std::set<std::tuple<std::string, bool, std::string, int, std::string>> present;
  for (const ResultRow &r : rows)
    present.insert({r.model, r.trained, r.result.task, r.result.layer, r.result.condition.Label()});
  const json &cells = run.at("cells");
  const int first = cells.at("layers").at(0).get<int>();
  const int last = cells.at("layers").at(1).get<int>();
  for (const json &m : cells.at("models"))
    for (const json &task : cells.at("tasks"))
      for (int layer = first; layer <= last; ++layer)
        for (const json &cond : cells.at("conditions")) {
          const std::string model = m.at("model").get<std::string>();
          const bool trained = m.at("trained").get<bool>();
          if (!present.contains({model, trained, task.get<std::string>(), layer,
                                 cond.get<std::string>()}))
            missing.push_back("(" + model + (trained ? "" : "[untrained]") + ", " +
                              task.get<std::string>() + ", " + std::to_string(layer) + ", " +
                              cond.get<std::string>() + ")");
        }
}

// Keeps the rows of tasks whose every cell succeeded; the rest are reported
// separately instead of breaking the curves.
std::vector<ProbeResult> CompleteTasks(const std::vector<ProbeResult> &results) {
  std::set<std::string> broken;
  for (const ProbeResult &r : results)
    if (!r.ok) broken.insert(r.task);
  std::vector<ProbeResult> out;
  for (const ProbeResult &r : results)
    if (!broken.contains(r.task)) out.push_back(r);
  return out;
}

void AppendCurveRows(Table &t, const ModelKey &key, const LayerCurve &curve,
                     const std::map<std::pair<std::string, int>, std::optional<double>> &conf) {
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const int layer = curve.first_layer + static_cast<int>(i);
    std::optional<double> c;
    auto it = conf.find({curve.key, layer});
    if (it != conf.end()) c = it->second;
    t.AddRow({key.model, key.trained ? "1" : "0", curve.is_level ? "level" : "task", curve.key,
              std::string(LevelName(curve.level)), curve.condition.Label(), std::to_string(layer),
              FormatDouble(curve.points[i].accuracy), FormatDouble(curve.points[i].std_error),
              OptionalCell(c)});
  }
}

}  // namespace

ReportSummary Report(const std::vector<std::string> &campaign_dirs, const std::string &output_dir) {
  if (campaign_dirs.empty()) Fail(ErrorCode::kArgument, "report needs at least one campaign directory");
  std::vector<ResultRow> rows;
  std::vector<std::string> missing;
  std::vector<std::pair<std::string, fs::path>> projections;
  for (const std::string &dir : campaign_dirs) {
    const fs::path results = fs::path(dir) / kResultsFile;
    const fs::path projection = fs::path(dir) / "projection.tsv";
    if (fs::exists(projection)) projections.emplace_back(dir, projection);
    // a projection run writes no probe results
    if (!fs::exists(results) && fs::exists(projection) && !fs::exists(fs::path(dir) / kRunManifestFile))
      continue;
    if (!fs::exists(results)) {
      missing.push_back("(" + dir + ": no " + kResultsFile + ", every cell missing)");
      continue;
    }
    std::vector<ResultRow> dir_rows = LoadResults(results.string());
    CheckExpectedCells(dir, dir_rows, missing);
    rows.insert(rows.end(), dir_rows.begin(), dir_rows.end());
  }
  if (!missing.empty()) Fail(ErrorCode::kGap, "incomplete campaign, missing cells:" + Missing(missing));
  if (rows.empty()) Fail(ErrorCode::kGap, "campaign directories hold no result rows");

  std::sort(rows.begin(), rows.end(), RowLess);
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!RowLess(rows[i - 1], rows[i]))
      Fail(ErrorCode::kArgument, "duplicate result cell (" + rows[i].model + ", " +
                                     rows[i].result.task + ", " +
                                     std::to_string(rows[i].result.layer) + ", " +
                                     rows[i].result.condition.Label() + ") across directories");

  TaskLevels levels;
  std::map<ModelKey, std::vector<ResultRow>> by_model;
  for (const ResultRow &r : rows) {
    levels.emplace(r.result.task, ParseLevel(r.level));
    by_model[{r.model, r.trained}].push_back(r);
  }

  Table curves, peaks, level_peaks, temporal, positions;
  curves.columns = {"model", "trained", "scope", "key", "level", "condition", "layer", "accuracy",
                    "stderr", "confidence"};
  peaks.columns = {"model", "trained", "task", "level", "condition", "best_accuracy", "best_layer"};
  level_peaks.columns = {"model", "trained", "level", "condition", "best_accuracy", "best_layer"};
  temporal.columns = {"model", "trained", "scope", "key", "layer", "offset_ms", "accuracy",
                      "stderr", "argmax_offset"};
  positions.columns = {"model", "trained", "level", "best_mean_layer", "condition", "accuracy"};
  Table failures;
  failures.columns = {"model", "trained", "task", "layer", "condition", "note"};

  for (const auto &[key, model_rows] : by_model) {
    std::map<Condition, std::vector<ProbeResult>> by_condition;
    std::vector<ProbeResult> temporal_results, all_results;
    for (const ResultRow &r : model_rows) {
      all_results.push_back(r.result);
      if (IsTemporal(r.result.condition))
        temporal_results.push_back(r.result);
      else
        by_condition[r.result.condition].push_back(r.result);
    }
    for (const ResultRow &r : model_rows)
      if (!r.result.ok)
        failures.AddRow({key.model, key.trained ? "1" : "0", r.result.task,
                         std::to_string(r.result.layer), r.result.condition.Label(),
                         r.result.note.empty() ? "-" : Sanitize(r.result.note)});
    for (const auto &[condition, all] : by_condition) {
      const std::vector<ProbeResult> results = CompleteTasks(all);
      if (results.empty()) continue;
      const CurveSet set = BuildLayerCurves(results, levels);
      std::map<std::pair<std::string, int>, std::optional<double>> conf;
      std::map<std::pair<std::string, int>, std::pair<double, int>> level_conf;
      for (const ProbeResult &r : results) {
        conf[{r.task, r.layer}] = r.confidence;
        if (r.confidence) {
          auto &acc = level_conf[{std::string(LevelName(levels.at(r.task))), r.layer}];
          acc.first += *r.confidence;
          acc.second += 1;
        }
      }
      for (const auto &[cell, acc] : level_conf) conf[cell] = acc.first / acc.second;
      for (const LayerCurve &c : set.tasks) AppendCurveRows(curves, key, c, conf);
      for (const LayerCurve &c : set.levels) AppendCurveRows(curves, key, c, conf);
      for (const LayerCurve &c : set.tasks) {
        const Peak p = PeakAccuracy(c);
        peaks.AddRow({key.model, key.trained ? "1" : "0", p.key, std::string(LevelName(c.level)),
                      p.condition.Label(), FormatDouble(p.accuracy), std::to_string(p.layer)});
      }
      for (const LayerCurve &c : set.levels) {
        const Peak p = PeakAccuracy(c);
        level_peaks.AddRow({key.model, key.trained ? "1" : "0", p.key, p.condition.Label(),
                            FormatDouble(p.accuracy), std::to_string(p.layer)});
      }
    }
    temporal_results = CompleteTasks(temporal_results);
    // one profile set per probed layer
    std::map<int, std::vector<ProbeResult>> temporal_by_layer;
    for (const ProbeResult &r : temporal_results) temporal_by_layer[r.layer].push_back(r);
    for (const auto &[layer, layer_results] : temporal_by_layer) {
      const TemporalProfileSet profiles = BuildTemporalProfiles(layer_results, levels);
      auto emit = [&](const TemporalProfile &p) {
        for (const TemporalPoint &pt : p.points)
          temporal.AddRow({key.model, key.trained ? "1" : "0", p.is_level ? "level" : "task",
                           p.key, std::to_string(layer), std::to_string(pt.offset_ms),
                           FormatDouble(pt.accuracy), FormatDouble(pt.std_error),
                           std::to_string(p.argmax_offset)});
      };
      for (const TemporalProfile &p : profiles.tasks) emit(p);
      for (const TemporalProfile &p : profiles.levels) emit(p);
    }
    const bool has_positions = by_condition.contains(Condition::Mean()) &&
                               std::any_of(by_condition.begin(), by_condition.end(), [](const auto &kv) {
                                 return kv.first.kind() == Condition::Kind::kPosition;
                               });
    std::vector<ProbeResult> positional;
    for (const ProbeResult &r : all_results)
      if (r.condition.kind() == Condition::Kind::kMean ||
          r.condition.kind() == Condition::Kind::kPosition)
        positional.push_back(r);
    positional = CompleteTasks(positional);
    if (has_positions && !positional.empty()) {
      for (const PositionComparison &cmp : ComparePositions(positional, levels))
        for (const auto &[condition, accuracy] : cmp.accuracy)
          positions.AddRow({key.model, key.trained ? "1" : "0", std::string(LevelName(cmp.level)),
                            std::to_string(cmp.best_mean_layer), condition.Label(),
                            FormatDouble(accuracy)});
    }
  }

  ReportSummary summary;
  summary.models = by_model.size();
  fs::create_directories(output_dir);
  const fs::path out(output_dir);
  auto write = [&](const Table &t, const char *name) {
    if (t.rows.empty()) return;
    WriteTsv(t, (out / name).string());
    summary.files.push_back((out / name).string());
  };
  write(curves, "curves.tsv");
  write(peaks, "peaks.tsv");
  write(level_peaks, "level_peaks.tsv");
  write(temporal, "temporal.tsv");
  write(positions, "positions.tsv");
  write(failures, "failures.tsv");

  // Selection scores for every model probed both trained and untrained.
  Table selection;
  selection.columns = {"model", "scope", "key", "level", "layer", "condition", "acc_trained",
                       "acc_untrained", "selection"};
  for (const auto &[key, model_rows] : by_model) {
    if (!key.trained) continue;
    auto base = by_model.find({key.model, false});
    if (base == by_model.end()) continue;
    const std::vector<ScoreReport> scores = JoinScores(model_rows, base->second);
    std::map<std::tuple<std::string, int, Condition>, std::vector<const ScoreReport *>> per_level;
    for (const ScoreReport &s : scores) {
      const std::string level(LevelName(levels.at(s.task)));
      selection.AddRow({key.model, "task", s.task, level, std::to_string(s.layer),
                        s.condition.Label(), FormatDouble(s.acc_trained),
                        FormatDouble(s.acc_untrained), FormatDouble(s.selection)});
      per_level[{level, s.layer, s.condition}].push_back(&s);
    }
    for (const auto &[cell, members] : per_level) {
      double trained = 0, untrained = 0, sel = 0;
      for (const ScoreReport *s : members) {
        trained += s->acc_trained;
        untrained += s->acc_untrained;
        sel += s->selection;
      }
      const double n = static_cast<double>(members.size());
      selection.AddRow({key.model, "level", std::get<0>(cell), std::get<0>(cell),
                        std::to_string(std::get<1>(cell)), std::get<2>(cell).Label(),
                        FormatDouble(trained / n), FormatDouble(untrained / n),
                        FormatDouble(sel / n)});
    }
  }
  write(selection, "selection.tsv");

  if (!projections.empty()) {
    Table merged;
    merged.columns = {"campaign", "pair_id", "level", "task", "x", "y"};
    for (const auto &[dir, path] : projections)
      for (const ProjectedPoint &p : ImportProjection(path.string()))
        merged.AddRow({fs::path(dir).filename().string(), p.pair_id, p.level, p.task,
                       FormatDouble(p.x), FormatDouble(p.y)});
    write(merged, "projections.tsv");
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Projection

ProjectSummary RunProjection(const ProjectConfig &config) {
  if (config.output_dir.empty()) Fail(ErrorCode::kArgument, "output directory is required");
  CorpusManifest manifest = LoadManifest(config.manifest_path);
  if (!config.alignments_path.empty())
    manifest = manifest.WithAlignments(LoadAlignments(config.alignments_path));

  ProjectSummary summary;
  std::vector<ProjectedPoint> points;
  json info;
  if (!config.import_path.empty()) {
    points = ImportProjection(config.import_path);
    std::map<std::string, const MinimalPair *> pairs;
    for (const MinimalPair &p : manifest.pairs()) pairs.emplace(p.id, &p);
    for (const ProjectedPoint &p : points)
      if (!pairs.contains(p.pair_id))
        Fail(ErrorCode::kLookup, "imported point for unknown pair '" + p.pair_id + "'");
    info["source"] = "import";
  } else {
    const EmbeddingStore store(config.store_path);
    const DeltaSet deltas =
        DeltaEmbeddings(store, manifest, config.layer, Condition::Parse(config.condition));
    const Projection projection = Project2d(deltas.deltas);
    points = projection.points;
    summary.skipped = deltas.skipped;
    summary.explained_share = projection.explained_share;
    summary.degenerate = projection.degenerate;
    info["source"] = "pca";
    info["model_id"] = store.header().model_id;
    info["trained"] = store.header().trained;
    info["layer"] = config.layer;
    info["condition"] = config.condition;
    info["explained_share"] = projection.explained_share;
    info["degenerate"] = projection.degenerate;
    info["skipped_pairs"] = deltas.skipped;
  }
  summary.points = points.size();

  Eigen::MatrixXd coords(static_cast<Eigen::Index>(points.size()), 2);
  std::vector<int> labels;
  for (std::size_t i = 0; i < points.size(); ++i) {
    coords(static_cast<Eigen::Index>(i), 0) = points[i].x;
    coords(static_cast<Eigen::Index>(i), 1) = points[i].y;
    labels.push_back(static_cast<int>(ParseLevel(points[i].level)));
  }
  const std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() >= 2 && points.size() >= 3) {
    summary.silhouette_by_level = SilhouetteScore(coords, labels);
    info["silhouette_by_level"] = summary.silhouette_by_level;
  } else {
    summary.silhouette_by_level = std::nan("");
    info["silhouette_by_level"] = nullptr;
  }
  info["points"] = points.size();
  fs::create_directories(config.output_dir);
  WriteProjection(points, (fs::path(config.output_dir) / "projection.tsv").string());
  WriteText(info.dump(2) + "\n", (fs::path(config.output_dir) / "projection.json").string());
  return summary;
}

}  // namespace lprobe
