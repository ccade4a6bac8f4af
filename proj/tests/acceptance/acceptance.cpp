// Copyright 2026 The capeval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Tolerances are fixed here.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "capeval/corpus.hpp"
#include "capeval/fusion.hpp"
#include "capeval/learned.hpp"
#include "capeval/metaeval.hpp"
#include "capeval/metrics.hpp"
#include "capeval/qualitative.hpp"
#include "capeval/stats.hpp"
#include "cli.hpp"
#include "oracles.hpp"
#include "random_text.hpp"
#include "temp_dir.hpp"

using namespace capeval;

namespace {

constexpr double kMetricTolerance = 1e-9;
constexpr double kMetricSeconds = 10.0;
constexpr int kMetricInstances = 200;
constexpr std::size_t kMaxTokens = 12;
constexpr std::size_t kMaxVocab = 20;

constexpr double kStatsTolerance = 1e-6;
constexpr int kStatsTriples = 100;

constexpr double kZTolerance = 1e-9;

constexpr double kShuffleMinRelativeDrop = 0.5;
constexpr int kShuffleSeeds[] = {1, 2, 3, 4, 5};

constexpr double kFusionWeightTolerance = 1e-6;
constexpr double kFusionHeldOutRho = 0.999;
constexpr double kFusionNoiseSigma = 0.1;

constexpr double kBaselineMargin = 0.2;

constexpr double kMultiRefTolerance = 1e-12;

constexpr double kPipelineSeconds = 60.0;
constexpr int kPipelineVideos = 200;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

struct Fixture {
  SyntheticCorpus synth;
  AssessmentMatrix human;
};

Fixture make_fixture(std::uint64_t seed, int videos = 200) {
  SyntheticOptions o;
  o.seed = seed;
  o.n_videos = videos;
  Fixture f;
  f.synth = generate_synthetic(o);
  f.human = standardize(filter_annotators(f.synth.annotations).kept, AssessmentMode::SA);
  return f;
}

Outcome metric_oracles() {
  Rng rng(20240601);
  double worst = 0.0;
  double metric_time = 0.0;
  for (int i = 0; i < kMetricInstances; ++i) {
    const auto vocab = testgen::vocabulary(rng, 10 + rng.below(kMaxVocab - 10 + 1));
    const auto cand = testgen::sentence(rng, vocab, 1, kMaxTokens);
    std::vector<oracle::Tokens> rr;
    const std::size_t nrefs = 1 + rng.below(3);
    for (std::size_t k = 0; k < nrefs; ++k) rr.push_back(testgen::sentence(rng, vocab, 1, kMaxTokens));
    std::vector<std::vector<oracle::Tokens>> odocs = {rr};
    for (int d = 0; d < 3; ++d) odocs.push_back({testgen::sentence(rng, vocab, 1, kMaxTokens)});

    const TokenSequence C = from_tokens(cand);
    References R;
    for (const auto& r : rr) R.push_back(from_tokens(r));
    std::vector<References> docs;
    for (const auto& d : odocs) {
      References doc;
      for (const auto& r : d) doc.push_back(from_tokens(r));
      docs.push_back(doc);
    }

    const auto t0 = std::chrono::steady_clock::now();
    const double got[5] = {bleu_corpus({C}, {R}), sent_bleu(C, R), rouge_l(C, R),
                           CiderScorer(docs).score(C, R), meteor_lite(C, R)};
    metric_time += seconds_since(t0);
    const double want[5] = {oracle::bleu({cand}, {rr}), oracle::sent_bleu(cand, rr),
                            oracle::rouge_l(cand, rr), oracle::cider(cand, rr, odocs),
                            oracle::meteor(cand, rr)};
    for (int m = 0; m < 5; ++m) worst = std::max(worst, std::abs(got[m] - want[m]));
  }
  return {worst <= kMetricTolerance && metric_time < kMetricSeconds,
          "max |diff| = " + fmt(worst) + " over " + std::to_string(kMetricInstances) +
              " instances x 5 metrics, metric time " + fmt(metric_time, 3) + " s"};
}

Outcome stats_oracles() {
  Rng rng(777);
  double worst = 0.0;
  bool exact = true;
  int done = 0;
  while (done < kStatsTriples) {
    const double r12 = rng.uniform(-0.95, 0.95);
    const double r13 = rng.uniform(-0.95, 0.95);
    const double r23 = rng.uniform(-0.95, 0.95);
    const int n = 4 + static_cast<int>(rng.below(300));
    if (1 - r12 * r12 - r13 * r13 - r23 * r23 + 2 * r12 * r13 * r23 <= 1e-6) continue;
    ++done;
    const WilliamsResult ab = williams_test(r12, r13, r23, n);
    const WilliamsResult ba = williams_test(r12, r23, r13, n);
    const oracle::Williams o = oracle::williams(r12, r13, r23, n);
    worst = std::max({worst, std::abs(ab.t - o.t), std::abs(ab.p - o.p)});
    exact = exact && ab.t == -ba.t && ab.p + ba.p == 1.0;

    std::vector<double> x(3 + rng.below(100)), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.normal();
      y[i] = r12 * x[i] + rng.normal();
    }
    worst = std::max(worst, std::abs(pearson(x, y) - oracle::pearson(x, y)));
  }
  return {worst <= kStatsTolerance && exact,
          "max |diff| = " + fmt(worst) + " over " + std::to_string(kStatsTriples) +
              " triples; antisymmetry and complementarity " + (exact ? "exact" : "violated")};
}

Outcome standardization() {
  Rng rng(99);
  double worst = 0.0;
  bool guard = true;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RawAnnotation> rows;
    const int annotators = 1 + static_cast<int>(rng.below(8));
    for (int a = 0; a < annotators; ++a) {
      const int n = 2 + static_cast<int>(rng.below(40));
      for (int i = 0; i < n; ++i) {
        rows.push_back({"v" + std::to_string(i), "s", "w" + std::to_string(a), rng.uniform(0, 100),
                        ControlKind::System});
      }
    }
    const ZScores z = zscore_by_annotator(rows);
    std::map<std::string, std::vector<double>> per;
    for (std::size_t i = 0; i < rows.size(); ++i) per[rows[i].annotator_id].push_back(z.values[i]);
    for (const auto& [id, v] : per) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= double(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      worst = std::max({worst, std::abs(mean), std::abs(std::sqrt(ss / double(v.size() - 1)) - 1.0)});
    }
  }
  const ZScores flat = zscore_by_annotator({{"v1", "s", "w", 42, ControlKind::System},
                                            {"v2", "s", "w", 42, ControlKind::System}});
  guard = flat.values == std::vector<double>{0.0, 0.0} && flat.warnings.size() == 1;
  return {worst <= kZTolerance && guard,
          "max |mean|, |sd - 1| = " + fmt(worst) + "; zero-variance guard " + (guard ? "ok" : "broken")};
}

Outcome shuffle_finding() {
  const Fixture f = make_fixture(7);
  const auto scorer = [](const Corpus& c) { return score_all(c, {"all"}).matrices; };
  bool pass = true;
  std::ostringstream detail;
  for (int seed : kShuffleSeeds) {
    const ShuffleReport r = shuffle_experiment(f.synth.corpus, f.human, scorer, static_cast<std::uint64_t>(seed));
    const ShuffleRow* bleu = nullptr;
    const ShuffleRow* runner_up = nullptr;
    for (const auto& row : r.rows) {
      if (row.metric == kBleu4) {
        bleu = &row;
      } else if (!runner_up || row.drop > runner_up->drop) {
        runner_up = &row;
      }
    }
    const bool ok = bleu && runner_up && bleu->drop > runner_up->drop &&
                    bleu->drop > kShuffleMinRelativeDrop * bleu->rho_original;
    pass = pass && ok;
    detail << "seed " << seed << ": bleu-4 drop " << fmt(bleu ? bleu->drop : 0.0, 3) << " ("
           << fmt(bleu ? bleu->relative_drop * 100 : 0.0, 3) << "%), next " << runner_up->metric << ' '
           << fmt(runner_up->drop, 3) << (ok ? "" : " FAIL") << "; ";
  }
  return {pass, detail.str()};
}

Outcome fusion() {
  const Fixture f = make_fixture(11);
  const auto matrices = score_all(f.synth.corpus, {"bleu-4", "rouge-l", "cider", "meteor-lite"}).matrices;
  FusionData data = build_fusion_data(matrices, f.human, f.synth.corpus);
  const std::vector<double> w = {0.4, -0.3, 0.05, 0.8};
  const double b = -0.2;
  auto plant = [&](double sigma, std::uint64_t seed) {
    Rng rng(seed);
    FusionData d = data;
    for (auto& row : d.rows) {
      row.human = b;
      for (std::size_t m = 0; m < w.size(); ++m) row.human += w[m] * row.values[m];
      row.human += sigma * rng.normal();
    }
    return d;
  };

  const FusionFit exact = fit_fusion(plant(0.0, 1), 7);
  double worst = 0.0;
  double bias = b;
  for (std::size_t m = 0; m < w.size(); ++m) {
    const MetricRange& r = exact.model.normalization[m];
    worst = std::max(worst, std::abs(exact.model.weights[m] - w[m] * (r.max - r.min)));
    bias += w[m] * r.min;
  }
  worst = std::max(worst, std::abs(exact.model.bias - bias));
  double held_out = 0.0;
  for (const auto& rep : exact.test_reports) {
    if (rep.metric == kFusionMetric && rep.year == kAllYears) held_out = rep.rho;
  }

  const FusionFit noisy = fit_fusion(plant(kFusionNoiseSigma, 2), 7);
  double best_single = -1.0;
  for (double r : noisy.metric_train_rho) best_single = std::max(best_single, r);

  return {worst <= kFusionWeightTolerance && held_out >= kFusionHeldOutRho &&
              noisy.train_rho >= best_single,
          "weight error " + fmt(worst) + ", held-out rho " + fmt(held_out, 6) + " (" +
              std::to_string(exact.clamped) + " clamped); noisy train rho " + fmt(noisy.train_rho) +
              " vs best single " + fmt(best_single)};
}

Outcome trained_baseline() {
  const Fixture f = make_fixture(7);
  const YearlyBaseline a = score_leave_one_year_out(f.synth.corpus, f.human);
  const YearlyBaseline again = score_leave_one_year_out(f.synth.corpus, f.human);
  const double rho = caption_level(a.scores, f.human, true).rho;

  // Zero weights and zero bias score everything 0: the correlation is undefined, taken as 0.
  const BaselineScorer zero;
  double zero_rho = 0.0;
  try {
    zero_rho = caption_level(score_pairs(zero, f.synth.corpus), f.human, true).rho;
  } catch (const NumericError&) {
    zero_rho = 0.0;
  }
  const bool deterministic = a.scores.entries == again.scores.entries;
  return {rho - zero_rho >= kBaselineMargin && deterministic,
          "trained rho " + fmt(rho) + " vs zero-weight " + fmt(zero_rho) + ", deterministic " +
              (deterministic ? "yes" : "no")};
}

Outcome multi_reference() {
  SyntheticOptions o;
  o.n_videos = 60;
  o.n_refs = 5;
  const SyntheticCorpus s = generate_synthetic(o);
  const AssessmentMatrix human = standardize(filter_annotators(s.annotations).kept, AssessmentMode::SA);

  // M' = 1: reference-mean aggregation and single-reference mode agree exactly.
  const Corpus one = limit_references(s.corpus, 1);
  bool identity = true;
  for (const auto& m : score_all(one, {"all"}, {.per_reference = true}).matrices) {
    identity = identity && caption_level(m, human, true).rho == caption_level(m, human, false).rho;
  }

  // Five identical references: averaging equals the single-reference score.
  Corpus dup = one;
  for (auto& [video, refs] : dup.references) {
    const Reference r = refs.front();
    refs.clear();
    for (int k = 0; k < 5; ++k) refs.push_back({"r" + std::to_string(k), r.text});
  }
  const auto single = score_all(one, {"all"}).matrices;
  const auto per = score_all(dup, {"all"}, {.per_reference = true}).matrices;
  const auto pooled = score_all(dup, {"all"}).matrices;
  double worst = 0.0;
  for (std::size_t m = 0; m < single.size(); ++m) {
    const auto means = per[m].caption_means();
    for (const auto& [key, value] : single[m].entries) {
      const CellKey cell{key.video_id, key.system_id};
      worst = std::max(worst, std::abs(means.at(cell) - value));
      worst = std::max(worst, std::abs(pooled[m].entries.at(key) - value));
    }
  }
  return {identity && worst <= kMultiRefTolerance,
          std::string("M'=1 identity ") + (identity ? "exact" : "broken") +
              ", 5 identical refs max |diff| = " + fmt(worst)};
}

Outcome qualitative() {
  ScoredPair p;
  p.candidate = "a man talking";
  p.reference = "a man dancing";
  const FrequencyTable t = word_frequencies({p}, default_stopwords());
  const bool counts = t.entries == std::vector<std::pair<std::string, long>>{
                                       {"man", 2}, {"dancing", 1}, {"talking", 1}};

  Rng rng(5);
  FrequencyTable big;
  for (int i = 0; i < 100; ++i) big.entries.emplace_back("w" + std::to_string(i), 1 + static_cast<long>(rng.below(40)));
  std::stable_sort(big.entries.begin(), big.entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const auto words = layout_cloud(big);
  std::size_t overlaps = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (std::size_t j = i + 1; j < words.size(); ++j) {
      const auto& a = words[i];
      const auto& b = words[j];
      if (std::abs(a.x - b.x) < (a.width + b.width) / 2 && std::abs(a.y - b.y) < (a.height + b.height) / 2) {
        ++overlaps;
      }
    }
  }
  const bool identical = render_cloud(big) == render_cloud(big);
  return {counts && overlaps == 0 && identical,
          std::string("hand counts ") + (counts ? "exact" : "wrong") + ", " + std::to_string(overlaps) +
              " overlapping boxes among " + std::to_string(words.size()) + " words, SVG " +
              (identical ? "byte-identical" : "differs")};
}

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"capeval"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

bool run_pipeline(const std::string& d) {
  if (cli({"synth", "--videos", std::to_string(kPipelineVideos), "--seed", "7", "--out", d}) != 0) return false;
  const std::vector<std::string> corpus = {"--captions", d + "/captions.jsonl", "--references",
                                           d + "/references.jsonl", "--assessments",
                                           d + "/assessments.jsonl", "--seed", "7", "--out", d};
  const std::string scores = d + "/scores.jsonl";
  const std::vector<std::vector<std::string>> steps = {
      {"score"},
      {"correlate", "--scores", scores, "--level", "caption"},
      {"correlate", "--scores", scores, "--level", "system"},
      {"williams", "--scores", scores, "--level", "system"},
      {"fuse", "--scores", scores, "--target", "sa"},
      {"wordcloud", "--scores", scores}};
  for (auto step : steps) {
    step.insert(step.end(), corpus.begin(), corpus.end());
    if (cli(step) != 0) return false;
  }
  return true;
}

Outcome end_to_end() {
  testfs::TempDir a("acceptance_a");
  testfs::TempDir b("acceptance_b");
  const auto t0 = std::chrono::steady_clock::now();
  const bool ok_a = run_pipeline(a.path().string());
  const double elapsed = seconds_since(t0);
  const bool ok_b = run_pipeline(b.path().string());
  if (!ok_a || !ok_b) return {false, "pipeline failed"};

  std::size_t compared = 0, differing = 0;
  for (const auto& entry : std::filesystem::directory_iterator(a.path())) {
    const std::string name = entry.path().filename().string();
    if (name == "run_config.json") continue;  // echoes the output directory
    ++compared;
    if (testfs::read(entry.path().string()) != testfs::read((b.path() / name).string())) ++differing;
  }
  return {differing == 0 && compared > 0 && elapsed < kPipelineSeconds,
          std::to_string(compared) + " files compared, " + std::to_string(differing) +
              " differ; one pipeline run " + fmt(elapsed, 3) + " s"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric-oracles", metric_oracles},
      {"statistics-oracles", stats_oracles},
      {"standardization", standardization},
      {"shuffle-bleu-most-affected", shuffle_finding},
      {"fusion", fusion},
      {"trained-baseline", trained_baseline},
      {"multi-reference-identity", multi_reference},
      {"qualitative", qualitative},
      {"end-to-end-determinism", end_to_end},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
