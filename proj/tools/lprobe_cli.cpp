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

// Command-line front end.  Links only the C interface.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lprobe/lprobe.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitViolations = 3;

// Output root and parallelism are the only settings read from the environment.
const char *kEnvOutputRoot = "LPROBE_OUTPUT_ROOT";
const char *kEnvJobs = "LPROBE_JOBS";

struct CampaignFlags {
  std::string config;
  std::string manifest, alignments, store, untrained_store;
  std::vector<std::string> tasks, conditions;
  int first_layer = 0;
  int last_layer = -1;
  int k_folds = 5;
  double l2 = 1.0;
  int max_iterations = 500;
  double tol = 1e-6;
  bool no_standardize = false;
  std::vector<std::int64_t> grid;
  std::string share_by = "pair";
  std::string moment_mode = "per_dim";
  std::string out;
  std::uint64_t seed = 0;
  int jobs = -1;
};

std::string ReadFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string ResolveOutput(const std::string &out, const std::string &fallback) {
  const std::string chosen = out.empty() ? fallback : out;
  const char *root = std::getenv(kEnvOutputRoot);
  if (root == nullptr || *root == '\0' || fs::path(chosen).is_absolute()) return chosen;
  return (fs::path(root) / chosen).string();
}

int DefaultJobs() {
  const char *env = std::getenv(kEnvJobs);
  if (env == nullptr || *env == '\0') return 0;
  return std::atoi(env);
}

// Status check: prints the error and returns the status as the exit code.
int Check(int status) {
  if (status != LPROBE_OK)
    std::cerr << "lprobe: error [" << lprobe_status_name(status) << "]: " << lprobe_last_error()
              << "\n";
  return status;
}

std::string TakeString(char *text) {
  std::string out = text != nullptr ? text : "";
  lprobe_free_string(text);
  return out;
}

void AddCampaignFlags(CLI::App *cmd, CampaignFlags &f, bool conditions) {
  cmd->add_option("--config", f.config, "JSON config; its keys override flags");
  cmd->add_option("--manifest", f.manifest, "Corpus manifest (JSONL)");
  cmd->add_option("--alignments", f.alignments, "Critical-word alignment sidecar (JSONL)");
  cmd->add_option("--store", f.store, "Embedding store of the probed model");
  cmd->add_option("--untrained-store", f.untrained_store,
                  "Store of the randomly initialized model (enables selection scores)");
  cmd->add_option("--tasks", f.tasks, "Phenomenon ids or level names")->delimiter(',');
  cmd->add_option("--first-layer", f.first_layer, "First probed layer");
  cmd->add_option("--last-layer", f.last_layer, "Last probed layer (-1: last in store)");
  if (conditions)
    cmd->add_option("--conditions", f.conditions,
                    "Condition groups or labels (mean, positions, temporal, ctrl:randemb, pos:0.5, t:-200)")
        ->delimiter(',');
  cmd->add_option("--k-folds", f.k_folds, "Cross-validation folds");
  cmd->add_option("--l2", f.l2, "L2 regularization strength");
  cmd->add_option("--max-iterations", f.max_iterations, "Optimizer iteration cap");
  cmd->add_option("--tol", f.tol, "Gradient max-norm tolerance");
  cmd->add_flag("--no-standardize", f.no_standardize, "Disable feature standardization");
  cmd->add_option("--grid", f.grid, "Temporal offsets in ms")->delimiter(',');
  cmd->add_option("--share-by", f.share_by, "Noise sharing key: pair, base_audio_id, none");
  cmd->add_option("--moment-mode", f.moment_mode, "Noise moments: per_dim or scalar");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--seed", f.seed, "Campaign seed");
  cmd->add_option("--jobs", f.jobs, "Parallel probe units (0: all cores)");
}

json CampaignJson(const CampaignFlags &f, const std::vector<std::string> &groups,
                  const std::string &name) {
  json j;
  j["manifest"] = f.manifest;
  j["alignments"] = f.alignments;
  j["store"] = f.store;
  j["untrained_store"] = f.untrained_store;
  j["tasks"] = f.tasks;
  j["first_layer"] = f.first_layer;
  j["last_layer"] = f.last_layer;
  j["conditions"] = groups;
  j["k_folds"] = f.k_folds;
  j["l2"] = f.l2;
  j["max_iterations"] = f.max_iterations;
  j["tol"] = f.tol;
  j["standardize"] = !f.no_standardize;
  if (!f.grid.empty()) j["grid"] = f.grid;
  j["share_by"] = f.share_by;
  j["moment_mode"] = f.moment_mode;
  j["output_dir"] = f.out;
  j["seed"] = f.seed;
  j["jobs"] = f.jobs >= 0 ? f.jobs : DefaultJobs();
  if (!f.config.empty()) j.merge_patch(json::parse(ReadFile(f.config)));
  j["output_dir"] = ResolveOutput(j["output_dir"].get<std::string>(), name);
  return j;
}

int RunCampaign(const CampaignFlags &f, std::vector<std::string> groups, const std::string &name) {
  if (!f.conditions.empty()) groups = f.conditions;
  const json config = CampaignJson(f, groups, name);
  char *summary = nullptr;
  const int status = Check(lprobe_run_campaign(config.dump().c_str(), &summary));
  if (status != LPROBE_OK) return status;
  const json s = json::parse(TakeString(summary));
  std::cout << "wrote " << s["result_rows"] << " result rows (" << s["failed_probes"]
            << " failed, " << s["score_rows"] << " scores) to " << s["output_dir"].get<std::string>()
            << "\nrun hash " << s["run_hash"].get<std::string>() << "\n";
  return LPROBE_OK;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Layer-wise linear probing of speech model representations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lprobe_version()));

  // validate
  std::string v_manifest, v_alignments;
  bool v_require = false, v_full = false, v_json = false;
  CLI::App *validate = app.add_subcommand("validate", "Check a corpus manifest and alignments");
  validate->add_option("--manifest", v_manifest, "Corpus manifest (JSONL)")->required();
  validate->add_option("--alignments", v_alignments, "Alignment sidecar (JSONL)");
  validate->add_flag("--require-alignments", v_require, "Every utterance must be aligned");
  validate->add_flag("--full-inventory", v_full, "Expect the complete phenomenon inventory");
  validate->add_flag("--json", v_json, "Print the report as JSON");

  // probing campaigns
  CampaignFlags probe_flags, pos_flags, temporal_flags, ctrl_flags;
  CLI::App *probe = app.add_subcommand("probe", "Layer-wise probing of pooled representations");
  AddCampaignFlags(probe, probe_flags, true);
  CLI::App *positions =
      app.add_subcommand("probe-positions", "Probing of single frames at relative positions");
  AddCampaignFlags(positions, pos_flags, false);
  CLI::App *temporal =
      app.add_subcommand("probe-temporal", "Probing around the critical-word onset");
  AddCampaignFlags(temporal, temporal_flags, false);
  CLI::App *control =
      app.add_subcommand("control-randemb", "Probing of moment-matched random vectors");
  AddCampaignFlags(control, ctrl_flags, false);

  // score
  std::string s_trained, s_untrained, s_out;
  CLI::App *score = app.add_subcommand("score", "Join trained and untrained results into selection scores");
  score->add_option("--trained", s_trained, "Campaign directory or results table")->required();
  score->add_option("--untrained", s_untrained, "Campaign directory or results table")->required();
  score->add_option("--out", s_out, "Output directory");

  // report
  std::vector<std::string> r_dirs;
  std::string r_out;
  CLI::App *report = app.add_subcommand("report", "Derive curves, peaks and profiles from campaigns");
  report->add_option("dirs", r_dirs, "Campaign directories")->required();
  report->add_option("--out", r_out, "Output directory");

  // project
  std::string p_config, p_manifest, p_alignments, p_store, p_condition = "mean", p_import, p_out;
  int p_layer = 0;
  CLI::App *project = app.add_subcommand("project", "2-D projection of pair difference vectors");
  project->add_option("--config", p_config, "JSON config; its keys override flags");
  project->add_option("--manifest", p_manifest, "Corpus manifest (JSONL)");
  project->add_option("--alignments", p_alignments, "Alignment sidecar (JSONL)");
  project->add_option("--store", p_store, "Embedding store");
  project->add_option("--layer", p_layer, "Layer");
  project->add_option("--condition", p_condition, "Pooling condition label");
  project->add_option("--import", p_import, "Externally computed coordinates (TSV)");
  project->add_option("--out", p_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      char *text = nullptr;
      const int status = Check(lprobe_validate(v_manifest.c_str(),
                                               v_alignments.empty() ? nullptr : v_alignments.c_str(),
                                               v_require ? 1 : 0, v_full ? 1 : 0, &text));
      if (status != LPROBE_OK) return status;
      const json r = json::parse(TakeString(text));
      if (v_json) {
        std::cout << r.dump(2) << "\n";
      } else {
        std::cout << r["phenomena"] << " phenomena, " << r["pairs"] << " pairs, "
                  << r["alignments"] << " alignments, " << r["violations"].size()
                  << " violations\n";
        for (const json &v : r["violations"])
          std::cout << v["kind"].get<std::string>() << "\t" << v["subject"].get<std::string>()
                    << "\t" << v["detail"].get<std::string>() << "\n";
      }
      return r["violations"].empty() ? 0 : kExitViolations;
    }
    if (*probe) return RunCampaign(probe_flags, {"mean"}, "probe");
    if (*positions) return RunCampaign(pos_flags, {"mean", "positions"}, "probe-positions");
    if (*temporal) return RunCampaign(temporal_flags, {"temporal"}, "probe-temporal");
    if (*control) return RunCampaign(ctrl_flags, {"mean", "ctrl:randemb"}, "control-randemb");
    if (*score) {
      char *text = nullptr;
      const std::string out = ResolveOutput(s_out, "score");
      const int status =
          Check(lprobe_score(s_trained.c_str(), s_untrained.c_str(), out.c_str(), &text));
      if (status != LPROBE_OK) return status;
      const json s = json::parse(TakeString(text));
      std::cout << "wrote " << s["score_rows"] << " score rows to " << out << "\n";
      return 0;
    }
    if (*report) {
      char *text = nullptr;
      const std::string out = ResolveOutput(r_out, "report");
      const int status = Check(lprobe_report(json(r_dirs).dump().c_str(), out.c_str(), &text));
      if (status != LPROBE_OK) return status;
      const json s = json::parse(TakeString(text));
      for (const json &f : s["files"]) std::cout << f.get<std::string>() << "\n";
      return 0;
    }
    if (*project) {
      json config = {{"manifest", p_manifest}, {"alignments", p_alignments}, {"store", p_store},
                     {"layer", p_layer},       {"condition", p_condition},   {"import", p_import},
                     {"output_dir", p_out}};
      if (!p_config.empty()) config.merge_patch(json::parse(ReadFile(p_config)));
      config["output_dir"] = ResolveOutput(config["output_dir"].get<std::string>(), "project");
      char *text = nullptr;
      const int status = Check(lprobe_project(config.dump().c_str(), &text));
      if (status != LPROBE_OK) return status;
      std::cout << json::parse(TakeString(text)).dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception &e) {
    std::cerr << "lprobe: error: " << e.what() << "\n";
    return LPROBE_ERR_ARGUMENT;
  }
  return 0;
}
