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


#include <cmath>
#include <map>

#include "capeval/learned.hpp"
#include "capeval/metrics.hpp"
#include "doctest.h"
#include "random_text.hpp"
#include "temp_dir.hpp"

using namespace capeval;

namespace {

std::vector<std::vector<double>> random_rows(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (auto& r : rows) {
    for (auto& v : r) v = rng.normal();
  }
  return rows;
}

}  // namespace

TEST_CASE("featurize hand example") {
  const PairFeatures f = featurize(from_tokens({"a", "b"}), from_tokens({"a", "b", "c", "d"}));
  CHECK(f[0] == doctest::Approx(1.0));   // unigram precision
  CHECK(f[1] == doctest::Approx(0.5));   // unigram recall
  CHECK(f[2] == doctest::Approx(1.0));   // bigram precision
  CHECK(f[3] == doctest::Approx(1.0));   // stem precision
  CHECK(f[4] == doctest::Approx(0.5));   // length ratio
  CHECK(f[5] == doctest::Approx(0.5));   // LCS over the longer length
  CHECK(f[6] == doctest::Approx(-0.5));  // signed length difference
  CHECK(PairFeatures::names().size() == kNumPairFeatures);

  const PairFeatures empty = featurize(from_tokens({}), from_tokens({"a"}));
  for (double v : empty.values) CHECK(v == 0.0);
}

TEST_CASE("featurize properties") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto vocab = testgen::vocabulary(rng, 10);
    const TokenSequence c = from_tokens(testgen::sentence(rng, vocab, 1, 12));
    const TokenSequence r = from_tokens(testgen::sentence(rng, vocab, 1, 12));
    const PairFeatures f = featurize(c, r);
    const PairFeatures g = featurize(r, c);
    // Swapping the pair swaps precision and recall and flips the length sign.
    CHECK(f[0] == doctest::Approx(g[1]));
    CHECK(f[1] == doctest::Approx(g[0]));
    CHECK(f[5] == doctest::Approx(g[5]));
    CHECK(f[6] == doctest::Approx(-g[6]));
    CHECK(f[4] <= kLengthRatioCap);
    const PairFeatures self = featurize(c, c);
    CHECK(self[0] == 1.0);
    CHECK(self[1] == 1.0);
    CHECK(self[5] == 1.0);
    CHECK(self[6] == 0.0);
    if (c.size() >= 2) CHECK(self[2] == 1.0);
  }
}

TEST_CASE("ridge recovers a planted linear model") {
  Rng rng(12);
  const auto rows = random_rows(rng, 200, 5);
  const std::vector<double> w = {0.5, -1.0, 2.0, 0.0, 0.25};
  std::vector<double> y;
  for (const auto& r : rows) {
    double v = 0.75;
    for (std::size_t j = 0; j < w.size(); ++j) v += w[j] * r[j];
    y.push_back(v);
  }
  const RidgeFit exact = fit_ridge(rows, y, 0.0);
  for (std::size_t j = 0; j < w.size(); ++j) CHECK(exact.weights[j] == doctest::Approx(w[j]).epsilon(1e-9));
  CHECK(exact.bias == doctest::Approx(0.75).epsilon(1e-9));
  REQUIRE(exact.loss_trace.size() == 2);
  CHECK(exact.loss_trace[1] < 1e-9);
  CHECK(exact.loss_trace[1] <= exact.loss_trace[0]);
}

TEST_CASE("ridge solves the penalized normal equations") {
  Rng rng(13);
  for (double lambda : {1e-3, 0.1, 1.0}) {
    const auto rows = random_rows(rng, 60, 4);
    std::vector<double> y;
    for (const auto& r : rows) y.push_back(r[0] - r[2] + 0.3 * rng.normal());
    const RidgeFit fit = fit_ridge(rows, y, lambda);
    const double n = double(rows.size());
    std::vector<double> mean(4, 0.0);
    double ymean = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < 4; ++j) mean[j] += rows[i][j] / n;
      ymean += y[i] / n;
    }
    for (std::size_t a = 0; a < 4; ++a) {
      double lhs = lambda * fit.weights[a];
      double rhs = 0.0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        double pred = 0.0;
        for (std::size_t b = 0; b < 4; ++b) pred += (rows[i][b] - mean[b]) * fit.weights[b];
        lhs += (rows[i][a] - mean[a]) * pred / n;
        rhs += (rows[i][a] - mean[a]) * (y[i] - ymean) / n;
      }
      CHECK(std::abs(lhs - rhs) < 1e-10);
    }
    // The unpenalized intercept passes through the means.
    double at_mean = fit.bias;
    for (std::size_t j = 0; j < 4; ++j) at_mean += fit.weights[j] * mean[j];
    CHECK(at_mean == doctest::Approx(ymean).epsilon(1e-12));
  }
}

TEST_CASE("ridge edge cases") {
  Rng rng(14);
  const auto rows = random_rows(rng, 20, 3);
  const RidgeFit flat = fit_ridge(rows, std::vector<double>(20, 0.4), 0.01);
  for (double w : flat.weights) CHECK(std::abs(w) < 1e-12);
  CHECK(flat.bias == doctest::Approx(0.4));

  auto collinear = rows;
  for (auto& r : collinear) r[2] = 2.0 * r[0];
  CHECK_THROWS_AS(fit_ridge(collinear, std::vector<double>(20, 1.0), 0.0), NumericError);
  CHECK_NOTHROW(fit_ridge(collinear, std::vector<double>(20, 1.0), 0.1));
  CHECK_THROWS_AS(fit_ridge(rows, std::vector<double>(19, 1.0), 0.1), ValidationError);
  CHECK_THROWS_AS(fit_ridge(rows, std::vector<double>(20, 1.0), -1.0), ValidationError);
  CHECK_THROWS_AS(fit_ridge({{1.0, 2.0}}, {1.0}, 0.1), ValidationError);
}

TEST_CASE("trained baseline is deterministic and tracks overlap") {
  SyntheticOptions o;
  o.n_videos = 80;
  const SyntheticCorpus s = generate_synthetic(o);
  const AssessmentMatrix human =
      standardize(filter_annotators(s.annotations).kept, AssessmentMode::SA);
  const BaselineScorer a = train_on_corpus(s.corpus, human);
  const BaselineScorer b = train_on_corpus(s.corpus, human);
  CHECK(a.weights() == b.weights());
  CHECK(a.bias() == b.bias());
  CHECK(a.meta().num_pairs == s.corpus.candidates.size() * 2);
  CHECK(a.meta().loss_trace[1] < a.meta().loss_trace[0]);

  const ScoreMatrix m = score_pairs(a, s.corpus);
  CHECK(m.metric == kBaselineMetric);
  CHECK(m.per_reference());
  validate_coverage(m, s.corpus);

  const YearlyBaseline y = score_leave_one_year_out(s.corpus, human);
  CHECK(y.scorers.size() == s.corpus.years().size());
  validate_coverage(y.scores, s.corpus);
  for (const auto& [year, scorer] : y.scorers) CHECK(scorer.meta().held_out_year == year);
}

TEST_CASE("pairs.jsonl export and scores.jsonl import") {
  SyntheticOptions o;
  o.n_videos = 10;
  o.n_refs = 3;
  const SyntheticCorpus s = generate_synthetic(o);
  const AssessmentMatrix human =
      standardize(filter_annotators(s.annotations).kept, AssessmentMode::SA);
  testfs::TempDir dir("pairs");
  const std::string year = *s.corpus.years().begin();
  export_pairs(s.corpus, &human, dir.file("pairs.jsonl"), {.held_out_year = year});
  const std::string text = testfs::read(dir.file("pairs.jsonl"));
  std::size_t lines = 0, nulls = 0;
  for (char ch : text) lines += ch == '\n';
  for (std::size_t p = text.find("\"target\":null"); p != std::string::npos;
       p = text.find("\"target\":null", p + 1)) {
    ++nulls;
  }
  CHECK(lines == s.corpus.candidates.size() * 3);
  std::size_t held = 0;
  for (const auto& [key, t] : s.corpus.candidates) held += s.corpus.year_of(key.first) == year;
  CHECK(nulls >= held * 3);

  // An external trainer writes one score per pair; import checks coverage.
  const ScoreMatrix external = score_pairs(train_on_corpus(s.corpus, human), s.corpus, "bertha");
  write_scores_jsonl({external}, dir.file("scores.jsonl"));
  const ScoreMatrix back = import_external_scores(dir.file("scores.jsonl"), s.corpus);
  CHECK(back.metric == "bertha");
  CHECK(back.entries == external.entries);

  ScoreMatrix partial = external;
  partial.entries.erase(std::prev(partial.entries.end()));
  write_scores_jsonl({partial}, dir.file("partial.jsonl"));
  CHECK_THROWS_AS(import_external_scores(dir.file("partial.jsonl"), s.corpus), CoverageError);
  CHECK_THROWS_AS(import_external_scores(dir.file("scores.jsonl"), s.corpus, "other"),
                  ValidationError);
}
