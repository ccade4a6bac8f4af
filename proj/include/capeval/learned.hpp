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


#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capeval/corpus.hpp"
#include "capeval/score_matrix.hpp"
#include "capeval/textproc.hpp"

namespace capeval {

inline constexpr std::size_t kNumPairFeatures = 7;
inline constexpr double kLengthRatioCap = 4.0;
inline constexpr double kDefaultRidgeLambda = 1e-3;
inline constexpr const char* kBaselineMetric = "baseline";

/// Hand-crafted features of a (candidate, reference) pair, in this order:
///
///   0 unigram precision  clipped unigram matches / |c|
///   1 unigram recall     clipped unigram matches / |r|
///   2 bigram precision   clipped bigram matches / (|c| - 1), 0 when |c| < 2
///   3 stem-match rate    fraction of candidate tokens whose stem occurs in r
///   4 length ratio       |c| / |r|, capped at kLengthRatioCap
///   5 LCS ratio          LCS(c, r) / max(|c|, |r|)
///   6 length difference  (|c| - |r|) / max(|c|, |r|), in [-1, 1]
///
/// An empty candidate or reference gives the all-zero vector.
struct PairFeatures {
  std::array<double, kNumPairFeatures> values{};

  static const std::array<const char*, kNumPairFeatures>& names();
  double operator[](std::size_t i) const { return values[i]; }
};

PairFeatures featurize(const TokenSequence& candidate, const TokenSequence& reference);

struct RidgeFit {
  std::vector<double> weights;
  double bias = 0.0;
  /// MSE of the intercept-only model, then MSE of the fitted model.
  std::vector<double> loss_trace;
};

/// Minimizes mean((y - b - w.x)^2) + lambda |w|^2 in closed form; the
/// intercept is not penalized. lambda = 0 with a singular design raises
/// NumericError.
RidgeFit fit_ridge(const std::vector<std::vector<double>>& rows, const std::vector<double>& targets,
                   double lambda);

struct TrainingMeta {
  std::size_t num_pairs = 0;
  double ridge_lambda = kDefaultRidgeLambda;
  std::vector<double> loss_trace;
  std::string held_out_year;
};

class BaselineScorer {
 public:
  BaselineScorer() = default;
  BaselineScorer(std::array<double, kNumPairFeatures> weights, double bias, TrainingMeta meta = {})
      : weights_(weights), bias_(bias), meta_(std::move(meta)) {}

  /// w.f + b, no squashing.
  double score(const PairFeatures& features) const;
  double score(const TokenSequence& candidate, const TokenSequence& reference) const {
    return score(featurize(candidate, reference));
  }

  const std::array<double, kNumPairFeatures>& weights() const { return weights_; }
  double bias() const { return bias_; }
  const TrainingMeta& meta() const { return meta_; }

 private:
  std::array<double, kNumPairFeatures> weights_{};
  double bias_ = 0.0;
  TrainingMeta meta_;
};

struct TrainingPair {
  TokenSequence candidate;
  TokenSequence reference;
};

/// Ridge regression of the targets on the pair features. Needs at least
/// kNumPairFeatures + 1 pairs.
BaselineScorer train_baseline(const std::vector<TrainingPair>& pairs,
                              const std::vector<double>& targets,
                              double ridge_lambda = kDefaultRidgeLambda);

/// Trains on every (candidate, reference) pair of the corpus whose caption
/// has a human score; the target of a pair is its caption's score.
BaselineScorer train_on_corpus(const Corpus& corpus, const AssessmentMatrix& human,
                               double ridge_lambda = kDefaultRidgeLambda);

/// One score per (video, reference, system).
ScoreMatrix score_pairs(const BaselineScorer& scorer, const Corpus& corpus,
                        const std::string& metric = kBaselineMetric);

struct YearlyBaseline {
  ScoreMatrix scores;
  std::map<std::string, BaselineScorer> scorers;
  Warnings warnings;
};

/// Scores each year with a scorer trained on the other years (shared
/// caption strings removed from training). A single-year corpus is trained
/// and scored in-sample, with a warning.
YearlyBaseline score_leave_one_year_out(const Corpus& corpus, const AssessmentMatrix& human,
                                        double ridge_lambda = kDefaultRidgeLambda);

struct ExportOptions {
  /// Targets of this year are written as null.
  std::optional<std::string> held_out_year;
};

/// pairs.jsonl: one row per (video, reference, system) with
/// {"video_id","ref_id","system_id","candidate","reference","target","year"}.
/// target is the caption's human score, or null when unavailable.
void export_pairs(const Corpus& corpus, const AssessmentMatrix* human, const std::string& path,
                  ExportOptions options = {});

/// Loads an external scores.jsonl and checks it against the corpus. With an
/// empty `metric` the file must hold exactly one metric.
ScoreMatrix import_external_scores(const std::string& path, const Corpus& corpus,
                                   const std::string& metric = "");

}  // namespace capeval
