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

// Acceptance checks.  Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <thread>

#include "lprobe/analysis.hpp"
#include "lprobe/campaign.hpp"
#include "lprobe/controls.hpp"
#include "lprobe/error.hpp"
#include "lprobe/pooling.hpp"
#include "lprobe/probe.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace lprobe;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void Expect(bool ok, const std::string &what) {
    if (!ok) {
      if (!pass) detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

int failures = 0;

void Report(int id, const std::string &name, const std::function<void(Outcome &)> &body) {
  Outcome o;
  try {
    body(o);
  } catch (const std::exception &e) {
    o.pass = false;
    o.detail << "exception: " << e.what();
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << ")";
  const std::string detail = o.detail.str();
  if (!detail.empty()) std::cout << ": " << detail;
  std::cout << std::endl;
}

std::string Slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<const MinimalPair *> Pointers(const CorpusManifest &m) {
  std::vector<const MinimalPair *> out;
  for (const MinimalPair &p : m.pairs()) out.push_back(&p);
  return out;
}

// 200 pairs, d = 32, T in [20, 60], 4 layers; only layer 2 carries the label
// direction, with amplitude 2 against unit noise (power ratio 4:1).
testing::StoreSpec PlantedSpec() {
  testing::StoreSpec spec;
  spec.layers = 4;
  spec.dim = 32;
  spec.min_frames = 20;
  spec.max_frames = 60;
  spec.signal_layers = {2};
  spec.amplitude = 2.0;
  spec.frame_noise = 1.0;
  spec.seed = 2026;
  return spec;
}

void PlantedSignal(Outcome &o) {
  testing::TempDir dir("acc1");
  const CorpusManifest m = testing::MakeManifest({{"planted", LinguisticLevel::kSyntax, 200}});
  SaveManifest(m, dir / "m.jsonl");
  testing::WriteStore(dir / "s.bin", m, PlantedSpec());
  CampaignConfig c;
  c.manifest_path = dir / "m.jsonl";
  c.store_path = dir / "s.bin";
  c.output_dir = dir / "out";
  c.seed = 11;
  c.jobs = 1;
  const auto start = std::chrono::steady_clock::now();
  RunCampaign(c);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::vector<ProbeResult> results;
  for (const ResultRow &r : LoadResults(dir / "out/results.tsv")) results.push_back(r.result);
  const CurveSet curves = BuildLayerCurves(results, TaskLevelsOf(m));
  const Peak peak = PeakAccuracy(curves.tasks.at(0));
  const ChanceBand band = SimulateChanceBand(400, 5, 40, 3, 32);
  double worst_off = 0.0;
  for (const ProbeResult &r : results)
    if (r.layer != 2) worst_off = std::max(worst_off, r.accuracy_mean);
  o.detail << "peak layer " << peak.layer << " acc " << peak.accuracy << ", max off-layer acc "
           << worst_off << " vs band upper " << band.upper << ", " << seconds << " s";
  o.Expect(peak.layer == 2, "peak not at layer 2");
  o.Expect(peak.accuracy >= 0.95, "peak accuracy below 0.95");
  o.Expect(worst_off <= band.upper + 0.05, "off-layer accuracy above chance band + 0.05");
  o.Expect(seconds < 60.0, "runtime over 60 s");
}

void RandomControl(Outcome &o) {
  testing::TempDir dir("acc2");
  const CorpusManifest m = testing::MakeManifest({{"ctrl", LinguisticLevel::kSyntax, 200}});
  testing::WriteStore(dir / "s.bin", m, PlantedSpec());
  const EmbeddingStore store(dir / "s.bin");
  std::vector<PooledVector> source;
  std::vector<Sample> samples;
  for (const MinimalPair &p : m.pairs())
    for (const Utterance *u : {&p.pos, &p.neg}) {
      source.push_back(MeanPool(store.ReadLayer(u->id, 2)));
      samples.push_back({p.id, u->label});
    }
  const ChanceBand band = SimulateChanceBand(400, 5, 40, 5, 32);
  double total = 0.0;
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MatchedNoiseSpec spec =
        EstimateNoiseSpec(source, MomentMode::kPerDimension, ShareBy::kPair, seed);
    const FeatureMatrix x = StackFeatures(MatchedRandomFeatures(spec, Pointers(m), 2));
    const ProbeResult r = CrossValidate(x, samples, AssignFolds(m, "ctrl", 5, seed), TrainConfig{});
    total += r.accuracy_mean;
    if (r.accuracy_mean >= band.lower && r.accuracy_mean <= band.upper) ++inside;
  }
  const double mean = total / 20.0;
  o.detail << "mean accuracy " << mean << " over 20 seeds, band [" << band.lower << ", "
           << band.upper << "], " << inside << "/20 seeds inside";
  o.Expect(mean >= band.lower && mean <= band.upper, "mean accuracy outside chance band");
}

void OracleEquivalence(Outcome &o) {
  Rng rng(31337);
  int label_matches = 0, label_total = 0;
  double worst = 0.0;
  for (int instance = 0; instance < 25; ++instance) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.Below(7));  // 2..8
    std::vector<std::array<double, 2>> rows(n);
    std::vector<int> labels(n);
    FeatureMatrix x(static_cast<Eigen::Index>(n), 2);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = i < 2 ? static_cast<int>(i) : static_cast<int>(rng.Below(2));
      for (std::size_t j = 0; j < 2; ++j) {
        rows[i][j] = rng.Normal() * 2.0 + (j == 0 ? 1.5 * labels[i] : 0.0);
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
    }
    const testing::GridFit oracle = testing::GridSearchLogistic(rows, labels, 1.0);
    const ProbeModel model = FitLogistic(x, labels, TrainConfig{});
    const PredictionMatrix p = PredictProba(model, x);
    const std::vector<int> hard = p.HardLabels();
    for (std::size_t i = 0; i < n; ++i) {
      ++label_total;
      if (hard[i] == (oracle.p1[i] > 0.5 ? 1 : 0)) ++label_matches;
      worst = std::max(worst, std::abs(p.probs(static_cast<Eigen::Index>(i), 1) - oracle.p1[i]));
    }
  }
  o.detail << label_matches << "/" << label_total << " hard labels match, max |dp| " << worst;
  o.Expect(label_matches == label_total, "hard label mismatch");
  o.Expect(worst <= 0.02, "probability gap above 0.02");
}

void ScoreIdentities(Outcome &o) {
  int exact = 0;
  for (int i = 0; i <= 10; ++i)
    if (SelectionScore(i / 10.0, 0.5) == i / 10.0) ++exact;
  o.Expect(exact == 11, "selection(a, 0.5) != a");
  o.Expect(SelectionScore(0.8, 0.4) == 0.96, "selection(0.8, 0.4) != 0.96");
  // 0.8 * 0.8 has no exact binary representation as 0.64; the correctly rounded
  // product of the binary inputs lies one ulp above the double nearest 0.64.
  const double s = SelectionScore(0.8, 0.6);
  const bool within_ulp = s == 0.64 || s == std::nextafter(0.64, 1.0) || s == std::nextafter(0.64, 0.0);
  o.Expect(within_ulp, "selection(0.8, 0.6) not within one ulp of 0.64");

  PredictionMatrix p;
  p.probs.resize(3, 2);
  p.probs << 0.1, 0.9, 0.3, 0.7, 0.6, 0.4;
  // rows 0 and 1 correct with max-probabilities 0.9 and 0.7; row 2 wrong
  const std::optional<double> c = ConfidenceScore(p, std::vector<int>{1, 1, 1}, p.HardLabels());
  o.Expect(c.has_value() && *c == 0.8, "confidence {0.9, 0.7} != 0.8");
  PredictionMatrix q;
  q.probs.resize(2, 2);
  q.probs << 0.25, 0.75, 0.5, 0.5;
  const std::optional<double> d = ConfidenceScore(q, std::vector<int>{1, 0}, q.HardLabels());
  o.Expect(d.has_value() && *d == 0.625, "confidence {0.75, 0.5} != 0.625");
  const std::optional<double> none = ConfidenceScore(q, std::vector<int>{0, 1}, q.HardLabels());
  o.Expect(!none.has_value(), "confidence defined with no correct rows");
  o.detail << "11/11 grid identities exact: " << (exact == 11 ? "yes" : "no")
           << ", selection(0.8,0.6) = " << FormatDouble(s);
}

void PoolingLaws(Outcome &o) {
  Rng rng(77);
  double worst_perm = 0.0, worst_lin = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::int64_t frames = 1 + static_cast<std::int64_t>(rng.Below(80));
    const std::int64_t dim = 1 + static_cast<std::int64_t>(rng.Below(16));
    // Values on a dyadic grid keep a*X + b*Y exact in float32 storage, so the
    // comparison isolates the pooling arithmetic.
    auto grid_value = [&] { return static_cast<float>(static_cast<int>(rng.Below(8193)) - 4096) / 1024.0f; };
    LayerTensor x{"x", 0, frames, dim, {}}, y{"y", 0, frames, dim, {}};
    for (std::int64_t k = 0; k < frames * dim; ++k) {
      x.data.push_back(grid_value());
      y.data.push_back(grid_value());
    }
    const float a = static_cast<float>(static_cast<int>(rng.Below(17)) - 8);
    const float b = static_cast<float>(static_cast<int>(rng.Below(17)) - 8) / 4.0f;
    LayerTensor z{"z", 0, frames, dim, {}};
    for (std::size_t k = 0; k < x.data.size(); ++k) z.data.push_back(a * x.data[k] + b * y.data[k]);
    std::vector<std::int64_t> order(static_cast<std::size_t>(frames));
    for (std::int64_t t = 0; t < frames; ++t) order[static_cast<std::size_t>(t)] = t;
    rng.Shuffle(order);
    LayerTensor perm{"p", 0, frames, dim, {}};
    for (std::int64_t t : order)
      for (std::int64_t j = 0; j < dim; ++j) perm.data.push_back(x.at(t, j));
    const PooledVector mx = MeanPool(x), my = MeanPool(y), mz = MeanPool(z), mp = MeanPool(perm);
    for (std::size_t j = 0; j < static_cast<std::size_t>(dim); ++j) {
      worst_perm = std::max(worst_perm, std::abs(mx.values[j] - mp.values[j]));
      worst_lin = std::max(worst_lin, std::abs(mz.values[j] - (a * mx.values[j] + b * my.values[j])));
    }
  }
  o.Expect(worst_perm <= 1e-9, "permutation invariance above 1e-9");
  o.Expect(worst_lin <= 1e-9, "linearity above 1e-9");

  const int table[7][5] = {{0, 0, 0, 0, 0}, {0, 0, 1, 1, 1}, {0, 1, 1, 2, 2}, {0, 1, 2, 2, 3},
                           {0, 1, 2, 3, 4}, {0, 1, 3, 4, 5}, {0, 2, 3, 5, 6}};
  int table_ok = 0;
  for (int T = 1; T <= 7; ++T)
    for (int q = 0; q <= 4; ++q)
      if (PositionalIndex(T, q) == table[T - 1][q]) ++table_ok;
  o.Expect(table_ok == 35, "positional table mismatch");

  LayerTensor t{"t", 0, 300, 1, {}};
  for (int f = 0; f < 300; ++f) t.data.push_back(static_cast<float>(f));
  const AlignmentSpan onset{"t", "w", 2000, 2100};
  const auto samples = TemporalSamples(t, &onset, TemporalGrid::Default(), {50, 1});
  auto at_offset = [](const std::vector<PooledVector> &v, std::int64_t ms) {
    for (const PooledVector &s : v)
      if (s.condition.offset_ms() == ms) return s.values[0];
    return -1.0;
  };
  const double onset_frame = at_offset(samples, 0);
  const bool onset_ok = onset_frame == 100.0;
  LayerTensor short_t{"s", 0, 10, 1, {}};
  for (int f = 0; f < 10; ++f) short_t.data.push_back(static_cast<float>(f));
  const AlignmentSpan late{"s", "w", 150, 180};
  const auto clamped = TemporalSamples(short_t, &late, TemporalGrid::Default(), {50, 1});
  const bool clamp_ok = at_offset(clamped, -1000) == 0.0 && at_offset(clamped, 1000) == 9.0;
  o.Expect(onset_ok, "onset 2000 ms at 50 Hz not frame 100");
  o.Expect(clamp_ok, "edge clamping failed");
  o.detail << "1000 tensors: max perm gap " << worst_perm << ", max linearity gap " << worst_lin
           << "; table " << table_ok << "/35; onset frame " << samples[9].values[0];
}

bool BitEqual(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

void NoLeakage(Outcome &o) {
  Rng rng(5);
  const std::size_t pairs = 100;
  const Eigen::Index d = 8;
  std::vector<Sample> samples;
  std::vector<std::string> ids;
  FeatureMatrix x(static_cast<Eigen::Index>(2 * pairs), d);
  for (std::size_t p = 0; p < pairs; ++p) {
    ids.push_back("p" + std::to_string(p));
    for (int label : {1, 0}) {
      const Eigen::Index row = static_cast<Eigen::Index>(samples.size());
      samples.push_back({ids.back(), label});
      for (Eigen::Index j = 0; j < d; ++j) x(row, j) = rng.Normal() + (j == 0 ? label : 0);
    }
  }
  const FoldAssignment folds = AssignFoldsForPairs(ids, 5, 9);
  const CrossValidationRun clean = CrossValidateDetailed(x, samples, folds, TrainConfig{});
  int checked = 0, identical = 0;
  for (const FoldOutcome &fold : clean.folds) {
    for (std::size_t pick : {std::size_t{0}, fold.test_rows.size() - 1}) {
      FeatureMatrix poisoned = x;
      poisoned(static_cast<Eigen::Index>(fold.test_rows[pick]), 0) = 1e6;
      poisoned(static_cast<Eigen::Index>(fold.test_rows[pick]), d - 1) = -1e6;
      const CrossValidationRun run = CrossValidateDetailed(poisoned, samples, folds, TrainConfig{});
      const ProbeModel &a = *clean.folds[static_cast<std::size_t>(fold.fold)].model;
      const ProbeModel &b = *run.folds[static_cast<std::size_t>(fold.fold)].model;
      ++checked;
      if (BitEqual(a.feature_means, b.feature_means) && BitEqual(a.feature_scales, b.feature_scales) &&
          BitEqual(a.weights, b.weights) && std::memcmp(&a.bias, &b.bias, sizeof(double)) == 0)
        ++identical;
    }
  }
  o.detail << identical << "/" << checked << " poisoned test folds left train statistics and weights bit-identical";
  o.Expect(identical == checked, "training state changed by a test-fold outlier");
}

void StoreRoundTrip(Outcome &o) {
  testing::TempDir dir("acc7");
  const std::string path = dir / "s.bin";
  StoreHeader h;
  h.model_id = "roundtrip";
  h.hidden_dim = {7, 16, 3, 33};
  h.frame_rate = {{50, 1}, {50, 1}, {75, 1}, {16000, 320}};
  Rng rng(123);
  std::map<std::string, std::vector<LayerTensor>> written;
  {
    StoreWriter w(path, h);
    for (int u = 0; u < 125; ++u) {
      const std::string id = "utt" + std::to_string(rng.Below(1000000)) + "_" + std::to_string(u);
      std::vector<LayerTensor> layers;
      for (int l = 0; l < 4; ++l) {
        LayerTensor t{id, l, 1 + static_cast<std::int64_t>(rng.Below(40)), h.hidden_dim[static_cast<std::size_t>(l)], {}};
        for (std::int64_t k = 0; k < t.frames * t.dim; ++k) {
          // random bit patterns, restricted to finite values
          std::uint32_t bits;
          float v;
          do {
            bits = static_cast<std::uint32_t>(rng.Below(1ULL << 32));
            std::memcpy(&v, &bits, 4);
          } while (!std::isfinite(v));
          t.data.push_back(v);
        }
        layers.push_back(std::move(t));
      }
      w.WriteUtterance(id, layers);
      written[id] = std::move(layers);
    }
    w.Finish();
  }
  int tensors = 0, identical = 0;
  {
    const EmbeddingStore store(path);
    for (const auto &[id, layers] : written)
      for (const LayerTensor &t : layers) {
        ++tensors;
        const LayerTensor r = store.ReadLayer(id, t.layer);
        if (r.frames == t.frames && r.dim == t.dim &&
            std::memcmp(r.data.data(), t.data.data(), t.data.size() * 4) == 0)
          ++identical;
      }
  }
  o.Expect(tensors == 500 && identical == 500, "tensor mismatch after round-trip");

  std::string bytes = Slurp(path);
  std::uint64_t footer = 0;
  std::memcpy(&footer, bytes.data() + bytes.size() - 8, 8);
  int corruptions = 0, detected = 0;
  Rng pick(9);
  for (int trial = 0; trial < 64; ++trial) {
    std::string bad = bytes;
    const std::size_t at = footer + pick.Below(bytes.size() - footer);
    bad[at] = static_cast<char>(bad[at] ^ (1 + pick.Below(255)));
    std::ofstream(path, std::ios::binary | std::ios::trunc) << bad;
    ++corruptions;
    try {
      EmbeddingStore s(path);
    } catch (const Error &e) {
      if (e.code() == ErrorCode::kFormat) ++detected;
    }
  }
  o.Expect(detected == corruptions, "corrupted footer not reported as a format error");
  o.detail << identical << "/" << tensors << " tensors bit-identical; " << detected << "/"
           << corruptions << " footer corruptions raised format errors";
}

void Determinism(Outcome &o) {
  testing::TempDir dir("acc8");
  const CorpusManifest m = testing::MakeManifest({{"s1", LinguisticLevel::kSyntax, 30},
                                                  {"s2", LinguisticLevel::kMorphology, 30},
                                                  {"c1", LinguisticLevel::kConcept, 30}});
  testing::StoreSpec spec = PlantedSpec();
  spec.dim = 12;
  SaveManifest(m, dir / "m.jsonl");
  SaveAlignments(testing::MakeAlignments(m, spec), dir / "a.jsonl");
  testing::WriteStore(dir / "t.bin", m, spec);
  spec.signal_layers = {};
  spec.trained = false;
  testing::WriteStore(dir / "u.bin", m, spec);
  CampaignConfig c;
  c.manifest_path = dir / "m.jsonl";
  c.alignments_path = dir / "a.jsonl";
  c.store_path = dir / "t.bin";
  c.untrained_store_path = dir / "u.bin";
  c.conditions = {"mean", "positions", "temporal", "ctrl:randemb"};
  c.output_dir = dir / "out";
  c.seed = 99;
  c.jobs = 1;
  RunCampaign(c);
  const std::vector<std::string> files = {"results.tsv", "scores.tsv", "run.json"};
  std::vector<std::string> first;
  for (const std::string &f : files) first.push_back(Slurp(dir / ("out/" + f)));
  c.jobs = static_cast<int>(std::max(8u, std::thread::hardware_concurrency()));
  RunCampaign(c);
  int same = 0;
  for (std::size_t i = 0; i < files.size(); ++i)
    if (Slurp(dir / ("out/" + files[i])) == first[i]) ++same;
  o.detail << same << "/" << files.size() << " outputs byte-identical (jobs 1 vs " << c.jobs
           << ", " << std::count(first[0].begin(), first[0].end(), '\n') - 1 << " result rows)";
  o.Expect(same == static_cast<int>(files.size()), "outputs differ between runs");
}

void DeltaAndProjection(Outcome &o) {
  // antisymmetry through the store path
  testing::TempDir dir("acc9");
  const CorpusManifest m = testing::MakeManifest({{"s", LinguisticLevel::kSyntax, 30}});
  testing::StoreSpec spec = PlantedSpec();
  spec.dim = 8;
  testing::WriteStore(dir / "s.bin", m, spec);
  std::vector<MinimalPair> swapped = m.pairs();
  for (MinimalPair &p : swapped) std::swap(p.pos, p.neg);
  const CorpusManifest ms = CorpusManifest::Create(m.phenomena(), swapped);
  const EmbeddingStore store(dir / "s.bin");
  bool antisymmetric = true;
  for (Condition c : {Condition::Mean(), Condition::PositionQuarter(2)}) {
    const DeltaSet a = DeltaEmbeddings(store, m, 2, c);
    const DeltaSet b = DeltaEmbeddings(store, ms, 2, c);
    for (std::size_t i = 0; i < a.deltas.size(); ++i)
      for (std::size_t j = 0; j < a.deltas[i].delta.size(); ++j)
        if (a.deltas[i].delta[j] != -b.deltas[i].delta[j]) antisymmetric = false;
  }
  o.Expect(antisymmetric, "delta not antisymmetric");

  // rank-2 reconstruction
  Rng rng(4);
  Eigen::MatrixXd coef(80, 2), basis(2, 24);
  for (Eigen::Index i = 0; i < coef.size(); ++i) coef.data()[i] = rng.Normal() * 5;
  for (Eigen::Index i = 0; i < basis.size(); ++i) basis.data()[i] = rng.Normal();
  Eigen::VectorXd shift(24);
  for (Eigen::Index i = 0; i < 24; ++i) shift[i] = rng.Normal();
  const Eigen::MatrixXd rows = (coef * basis).rowwise() + shift.transpose();
  const Projection p = ProjectRows(rows);
  Eigen::MatrixXd coords(80, 2);
  for (Eigen::Index i = 0; i < 80; ++i) {
    coords(i, 0) = p.points[static_cast<std::size_t>(i)].x;
    coords(i, 1) = p.points[static_cast<std::size_t>(i)].y;
  }
  const double recon =
      ((coords * p.components.transpose()).rowwise() + p.mean.transpose() - rows).cwiseAbs().maxCoeff();
  o.Expect(recon <= 1e-9, "rank-2 reconstruction above 1e-9");

  // three level clusters, centers 3 noise-sd along distinct axes
  const Eigen::Index d = 16;
  std::vector<DeltaEmbedding> deltas;
  std::vector<int> labels;
  const LinguisticLevel levels[] = {LinguisticLevel::kSyntax, LinguisticLevel::kMorphology,
                                    LinguisticLevel::kConcept};
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 100; ++i) {
      DeltaEmbedding e;
      e.pair_id = "k" + std::to_string(k) + "_" + std::to_string(i);
      e.level = levels[k];
      for (Eigen::Index j = 0; j < d; ++j) e.delta.push_back(rng.Normal() + (j == k ? 3.0 : 0.0));
      deltas.push_back(std::move(e));
      labels.push_back(k);
    }
  const Projection proj = Project2d(deltas);
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(deltas.size()), 2);
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    pts(static_cast<Eigen::Index>(i), 0) = proj.points[i].x;
    pts(static_cast<Eigen::Index>(i), 1) = proj.points[i].y;
  }
  const double sil = SilhouetteScore(pts, labels);
  std::vector<int> shuffled = labels;
  rng.Shuffle(shuffled);
  const double sil_shuffled = SilhouetteScore(pts, shuffled);
  o.Expect(sil >= 0.5, "cluster silhouette below 0.5");
  o.Expect(sil_shuffled <= 0.1, "shuffled silhouette above 0.1");
  o.detail << "antisymmetry exact: " << (antisymmetric ? "yes" : "no") << ", reconstruction "
           << recon << ", silhouette " << sil << " vs shuffled " << sil_shuffled;
}

}  // namespace

int main() {
  Report(1, "planted-signal oracle", PlantedSignal);
  Report(2, "random-control chance", RandomControl);
  Report(3, "probe-vs-oracle equivalence", OracleEquivalence);
  Report(4, "score identities", ScoreIdentities);
  Report(5, "pooling laws", PoolingLaws);
  Report(6, "no leakage", NoLeakage);
  Report(7, "store round-trip", StoreRoundTrip);
  Report(8, "determinism", Determinism);
  Report(9, "delta embedding and projection", DeltaAndProjection);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
