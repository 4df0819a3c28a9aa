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

#include "lprobe/lprobe.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "lprobe/campaign.hpp"
#include "lprobe/controls.hpp"
#include "lprobe/corpus.hpp"
#include "lprobe/embedding_store.hpp"
#include "lprobe/error.hpp"
#include "lprobe/pooling.hpp"
#include "lprobe/probe.hpp"

struct lprobe_store_writer {
  std::unique_ptr<lprobe::StoreWriter> impl;
};

struct lprobe_store {
  std::unique_ptr<lprobe::EmbeddingStore> impl;
};

namespace {

using nlohmann::json;
using lprobe::ErrorCode;

thread_local std::string g_last_error;

template <typename Fn>
int Guard(Fn &&fn) {
  try {
    fn();
    g_last_error.clear();
    return LPROBE_OK;
  } catch (const lprobe::Error &e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const json::exception &e) {
    g_last_error = e.what();
    return LPROBE_ERR_ARGUMENT;
  } catch (const std::bad_alloc &) {
    g_last_error = "out of memory";
    return LPROBE_ERR_INTERNAL;
  } catch (const std::exception &e) {
    g_last_error = e.what();
    return LPROBE_ERR_INTERNAL;
  }
}

void Require(const void *ptr, const char *name) {
  if (ptr == nullptr) lprobe::Fail(ErrorCode::kArgument, std::string(name) + " is null");
}

char *CopyString(const std::string &text) {
  char *out = static_cast<char *>(std::malloc(text.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

void Emit(const json &value, char **out) {
  if (out != nullptr) *out = CopyString(value.dump());
}

}  // namespace

extern "C" {

const char *lprobe_version(void) { return "0.1.0"; }

const char *lprobe_status_name(int status) {
  if (status == LPROBE_OK) return "ok";
  if (status < LPROBE_ERR_IO || status > LPROBE_ERR_INTERNAL) return "unknown";
  return lprobe::ErrorCodeName(static_cast<ErrorCode>(status));
}

const char *lprobe_last_error(void) { return g_last_error.c_str(); }

void lprobe_free_string(char *text) { std::free(text); }

int lprobe_store_writer_create(const char *path, const char *header_json,
                               lprobe_store_writer **out) {
  return Guard([&] {
    Require(path, "path");
    Require(header_json, "header_json");
    Require(out, "out");
    auto writer = std::make_unique<lprobe_store_writer>();
    writer->impl = std::make_unique<lprobe::StoreWriter>(
        path, lprobe::StoreHeader::FromJson(header_json));
    *out = writer.release();
  });
}

int lprobe_store_writer_add(lprobe_store_writer *writer, const char *utterance_id,
                            int num_layers, const int64_t *frames, const float *const *data) {
  return Guard([&] {
    Require(writer, "writer");
    Require(utterance_id, "utterance_id");
    Require(frames, "frames");
    Require(data, "data");
    const lprobe::StoreHeader &header = writer->impl->header();
    if (num_layers != header.num_layers())
      lprobe::Fail(ErrorCode::kFormat, "expected " + std::to_string(header.num_layers()) +
                                           " layers, got " + std::to_string(num_layers));
    std::vector<lprobe::LayerTensor> layers(static_cast<std::size_t>(num_layers));
    for (int l = 0; l < num_layers; ++l) {
      lprobe::LayerTensor &t = layers[static_cast<std::size_t>(l)];
      t.utterance_id = utterance_id;
      t.layer = l;
      t.frames = frames[l];
      t.dim = header.hidden_dim[static_cast<std::size_t>(l)];
      if (t.frames < 1) lprobe::Fail(ErrorCode::kFormat, "layer with no frames");
      Require(data[l], "layer data");
      t.data.assign(data[l], data[l] + t.frames * t.dim);
    }
    writer->impl->WriteUtterance(utterance_id, layers);
  });
}

int lprobe_store_writer_finish(lprobe_store_writer *writer) {
  return Guard([&] {
    Require(writer, "writer");
    writer->impl->Finish();
  });
}

void lprobe_store_writer_free(lprobe_store_writer *writer) {
  if (writer == nullptr) return;
  Guard([&] { writer->impl->Finish(); });
  delete writer;
}

int lprobe_store_open(const char *path, lprobe_store **out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    auto store = std::make_unique<lprobe_store>();
    store->impl = std::make_unique<lprobe::EmbeddingStore>(path);
    *out = store.release();
  });
}

void lprobe_store_close(lprobe_store *store) { delete store; }

int lprobe_store_header_json(const lprobe_store *store, char **out_json) {
  return Guard([&] {
    Require(store, "store");
    Require(out_json, "out_json");
    *out_json = CopyString(store->impl->header().ToJson());
  });
}

int lprobe_store_utterance_ids(const lprobe_store *store, char **out_json) {
  return Guard([&] {
    Require(store, "store");
    Require(out_json, "out_json");
    Emit(json(store->impl->UtteranceIds()), out_json);
  });
}

int lprobe_store_shape(const lprobe_store *store, const char *utterance_id, int layer,
                       int64_t *frames, int64_t *dim) {
  return Guard([&] {
    Require(store, "store");
    Require(utterance_id, "utterance_id");
    const std::int64_t f = store->impl->Frames(utterance_id, layer);
    if (frames != nullptr) *frames = f;
    if (dim != nullptr) *dim = store->impl->header().hidden_dim[static_cast<std::size_t>(layer)];
  });
}

int lprobe_store_read_layer(const lprobe_store *store, const char *utterance_id, int layer,
                            float *buffer, size_t capacity) {
  return Guard([&] {
    Require(store, "store");
    Require(utterance_id, "utterance_id");
    Require(buffer, "buffer");
    const lprobe::LayerTensor t = store->impl->ReadLayer(utterance_id, layer);
    if (t.data.size() > capacity)
      lprobe::Fail(ErrorCode::kArgument, "buffer holds " + std::to_string(capacity) +
                                             " floats, tensor needs " +
                                             std::to_string(t.data.size()));
    std::memcpy(buffer, t.data.data(), t.data.size() * sizeof(float));
  });
}

int lprobe_frame_index_for_time(int64_t t_ms, int64_t rate_num, int64_t rate_den, int64_t frames,
                                int64_t *out) {
  return Guard([&] {
    Require(out, "out");
    *out = lprobe::FrameIndexForTime(t_ms, lprobe::FrameRate{rate_num, rate_den}, frames);
  });
}

int lprobe_pool(const lprobe_store *store, const char *utterance_id, int layer,
                const char *condition, int has_onset, int64_t onset_ms, double *buffer,
                size_t capacity, size_t *dim) {
  return Guard([&] {
    Require(store, "store");
    Require(utterance_id, "utterance_id");
    Require(condition, "condition");
    const lprobe::Condition c = lprobe::Condition::Parse(condition);
    const lprobe::LayerTensor t = store->impl->ReadLayer(utterance_id, layer);
    lprobe::AlignmentSpan span{utterance_id, "", onset_ms, onset_ms};
    const lprobe::PooledVector v = lprobe::PoolForCondition(
        t, c, has_onset ? &span : nullptr,
        store->impl->header().frame_rate[static_cast<std::size_t>(layer)]);
    if (dim != nullptr) *dim = v.values.size();
    if (buffer == nullptr) return;
    if (v.values.size() > capacity) lprobe::Fail(ErrorCode::kArgument, "buffer too small");
    std::memcpy(buffer, v.values.data(), v.values.size() * sizeof(double));
  });
}

int lprobe_validate(const char *manifest_path, const char *alignments_path,
                    int require_alignments, int expect_full_inventory, char **out_report) {
  return Guard([&] {
    Require(manifest_path, "manifest_path");
    lprobe::CorpusManifest manifest = lprobe::LoadManifest(manifest_path);
    if (alignments_path != nullptr && *alignments_path != '\0')
      manifest = manifest.WithAlignments(lprobe::LoadAlignments(alignments_path));
    lprobe::ValidationOptions options;
    options.require_alignments = require_alignments != 0;
    options.expect_full_inventory = expect_full_inventory != 0;
    json violations = json::array();
    for (const lprobe::Violation &v : lprobe::ValidateCorpus(manifest, options))
      violations.push_back({{"kind", lprobe::ViolationKindName(v.kind)},
                            {"subject", v.subject},
                            {"detail", v.detail}});
    json report;
    report["phenomena"] = manifest.phenomena().size();
    report["pairs"] = manifest.pairs().size();
    report["alignments"] = manifest.alignments().size();
    report["violations"] = violations;
    Emit(report, out_report);
  });
}

int lprobe_run_campaign(const char *config_json, char **out_summary) {
  return Guard([&] {
    Require(config_json, "config_json");
    const lprobe::CampaignSummary s =
        lprobe::RunCampaign(lprobe::CampaignConfig::FromJson(config_json));
    Emit({{"output_dir", s.output_dir},
          {"result_rows", s.result_rows},
          {"failed_probes", s.failed_probes},
          {"score_rows", s.score_rows},
          {"skipped_pairs", s.skipped_pairs},
          {"run_hash", s.run_hash}},
         out_summary);
  });
}

int lprobe_score(const char *trained, const char *untrained, const char *output_dir,
                 char **out_summary) {
  return Guard([&] {
    Require(trained, "trained");
    Require(untrained, "untrained");
    Require(output_dir, "output_dir");
    const std::size_t rows = lprobe::ScoreDirectories(trained, untrained, output_dir);
    Emit({{"output_dir", output_dir}, {"score_rows", rows}}, out_summary);
  });
}

int lprobe_report(const char *dirs_json, const char *output_dir, char **out_summary) {
  return Guard([&] {
    Require(dirs_json, "dirs_json");
    Require(output_dir, "output_dir");
    const auto dirs = json::parse(dirs_json).get<std::vector<std::string>>();
    const lprobe::ReportSummary s = lprobe::Report(dirs, output_dir);
    Emit({{"output_dir", output_dir}, {"models", s.models}, {"files", s.files}}, out_summary);
  });
}

int lprobe_project(const char *config_json, char **out_summary) {
  return Guard([&] {
    Require(config_json, "config_json");
    const lprobe::ProjectConfig config = lprobe::ProjectConfig::FromJson(config_json);
    const lprobe::ProjectSummary s = lprobe::RunProjection(config);
    json summary = {{"output_dir", config.output_dir},
                    {"points", s.points},
                    {"skipped", s.skipped},
                    {"explained_share", s.explained_share},
                    {"degenerate", s.degenerate}};
    if (std::isnan(s.silhouette_by_level))
      summary["silhouette_by_level"] = nullptr;
    else
      summary["silhouette_by_level"] = s.silhouette_by_level;
    Emit(summary, out_summary);
  });
}

int lprobe_selection_score(double acc_trained, double acc_untrained, double *out) {
  return Guard([&] {
    Require(out, "out");
    *out = lprobe::SelectionScore(acc_trained, acc_untrained);
  });
}

int lprobe_confidence_score(const double *probs, const int *truth, size_t n, double *out,
                            int *defined) {
  return Guard([&] {
    Require(out, "out");
    Require(defined, "defined");
    if (n > 0) {
      Require(probs, "probs");
      Require(truth, "truth");
    }
    lprobe::PredictionMatrix m;
    m.probs.resize(static_cast<Eigen::Index>(n), 2);
    for (size_t i = 0; i < n; ++i) {
      m.probs(static_cast<Eigen::Index>(i), 0) = probs[2 * i];
      m.probs(static_cast<Eigen::Index>(i), 1) = probs[2 * i + 1];
    }
    const std::vector<int> predicted = m.HardLabels();
    const std::optional<double> c =
        lprobe::ConfidenceScore(m, std::span<const int>(truth, n), predicted);
    *defined = c.has_value() ? 1 : 0;
    *out = c.value_or(0.0);
  });
}

int lprobe_chance_band(size_t n_samples, int k_folds, int n_trials, uint64_t seed, double *lower,
                       double *upper) {
  return Guard([&] {
    Require(lower, "lower");
    Require(upper, "upper");
    const lprobe::ChanceBand band = lprobe::SimulateChanceBand(n_samples, k_folds, n_trials, seed);
    *lower = band.lower;
    *upper = band.upper;
  });
}

}  // extern "C"
