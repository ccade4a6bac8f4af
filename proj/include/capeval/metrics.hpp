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

#include <map>
#include <string>
#include <vector>

#include "capeval/common.hpp"
#include "capeval/corpus.hpp"
#include "capeval/score_matrix.hpp"
#include "capeval/textproc.hpp"

namespace capeval {

using References = std::vector<TokenSequence>;

// ---------------------------------------------------------------------------
// BLEU

/// Corpus BLEU: clipped n-gram counts pooled over all sentences, geometric
/// mean of the pooled precisions, brevity penalty exp(1 - r/c) when the total
/// candidate length c is below the summed closest-reference length r (ties
/// resolve to the shorter reference). Any zero pooled precision gives 0.
double bleu_corpus(const std::vector<TokenSequence>& candidates,
                   const std::vector<References>& references, int max_n = 4);

/// Floor used for a zero unigram match count in sent_bleu.
inline constexpr double kSentBleuUnigramFloor = 0.1;

/// Smoothed sentence BLEU.
///
///   p_1 = m_1 / t_1, or kSentBleuUnigramFloor / t_1 when m_1 = 0
///   p_n = (m_n + 1) / (t_n + 1) for n >= 2
///   score = BP * exp(mean_n log p_n)
///
/// m_n are clipped matches and t_n the candidate n-gram count. An empty
/// candidate scores 0; an empty reference list is an error.
double sent_bleu(const TokenSequence& candidate, const References& references, int max_n = 4);

// ---------------------------------------------------------------------------
// ROUGE-L

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// LCS F-measure (1 + b^2) P R / (R + b^2 P), maximized over references.
double rouge_l(const TokenSequence& candidate, const References& references, double beta = 1.2);

// ---------------------------------------------------------------------------
// CIDEr

/// Document frequencies of one n-gram order. A document is the reference
/// set of one video.
struct IdfTable {
  int n = 1;
  std::map<NGram, int> doc_frequency;
  int num_docs = 0;

  /// log(num_docs / max(1, df)).
  double idf(const NGram& gram) const;
};

/// Plain CIDEr (no length penalty, no clipping) with corpus-level IDF.
class CiderScorer {
 public:
  static constexpr int kMaxN = 4;

  /// One entry per video: its references.
  explicit CiderScorer(const std::vector<References>& documents);

  /// 10 * mean over n of the TF-IDF cosine, averaged over `references`.
  double score(const TokenSequence& candidate, const References& references) const;

  const IdfTable& table(int n) const { return tables_.at(static_cast<std::size_t>(n - 1)); }
  const Warnings& warnings() const { return warnings_; }

 private:
  std::vector<IdfTable> tables_;
  Warnings warnings_;
};

struct CiderResult {
  ScoreMatrix scores;
  Warnings warnings;
};

/// CIDEr of every candidate of the corpus against all of its video's
/// references, IDF fitted on the corpus reference sets.
CiderResult cider_corpus(const Corpus& corpus);

// ---------------------------------------------------------------------------
// METEOR-lite

struct MeteorAlignment {
  int matches = 0;
  int exact_matches = 0;
  int chunks = 0;
};

/// Exact-then-stem alignment: maximizes exact matches, then total matches,
/// then minimizes chunks. Exact search over reference-position subsets; the
/// search falls back to a greedy in-order alignment past kMeteorStateBudget
/// states (only reachable with long, highly repetitive sentences).
MeteorAlignment meteor_align(const std::vector<std::string>& candidate,
                             const std::vector<std::string>& reference);

inline constexpr std::size_t kMeteorStateBudget = 2'000'000;

/// F_mean = 10PR / (R + 9P), penalty = 0.5 (chunks / m)^3,
/// score = F_mean (1 - penalty), maximized over references. 0 when m = 0.
double meteor_lite(const TokenSequence& candidate, const References& references);

// ---------------------------------------------------------------------------
// Corpus scoring

inline constexpr const char* kBleu4 = "bleu-4";
inline constexpr const char* kSentBleu = "sentbleu";
inline constexpr const char* kRougeL = "rouge-l";
inline constexpr const char* kCider = "cider";
inline constexpr const char* kMeteorLite = "meteor-lite";

/// Classical metrics in report order.
const std::vector<std::string>& classical_metrics();

/// Expands "all" and validates names. Throws ValidationError on unknown names.
std::vector<std::string> resolve_metric_selection(const std::vector<std::string>& selection);

struct ScoreOptions {
  /// Score each candidate against each reference separately (one entry per
  /// reference) instead of against the whole reference set.
  bool per_reference = false;
};

struct ScoreAllResult {
  std::vector<ScoreMatrix> matrices;
  Warnings warnings;
};

/// One matrix per selected metric, entries in (video, ref, system) order.
ScoreAllResult score_all(const Corpus& corpus, const std::vector<std::string>& selection,
                         ScoreOptions options = {});

}  // namespace capeval
