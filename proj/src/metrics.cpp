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

#include "capeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

namespace capeval {
namespace {

struct NGramStats {
  std::vector<long> matches;
  std::vector<long> totals;
  long candidate_length = 0;
  long reference_length = 0;
};

// Closest reference length; ties go to the shorter reference.
long closest_reference_length(std::size_t candidate_length, const References& references) {
  long best = -1;
  long best_diff = 0;
  const long c = static_cast<long>(candidate_length);
  for (const auto& r : references) {
    const long len = static_cast<long>(r.size());
    const long diff = std::abs(len - c);
    if (best < 0 || diff < best_diff || (diff == best_diff && len < best)) {
      best = len;
      best_diff = diff;
    }
  }
  return best < 0 ? 0 : best;
}

void accumulate(const TokenSequence& candidate, const References& references, int max_n,
                NGramStats& stats) {
  for (int n = 1; n <= max_n; ++n) {
    const NGramBag cand = ngrams(candidate, n);
    std::map<NGram, int> max_ref;
    for (const auto& r : references) {
      for (const auto& [gram, c] : ngrams(r, n).counts) {
        int& slot = max_ref[gram];
        slot = std::max(slot, c);
      }
    }
    long clipped = 0;
    for (const auto& [gram, c] : cand.counts) {
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) clipped += std::min(c, it->second);
    }
    stats.matches[static_cast<std::size_t>(n - 1)] += clipped;
    stats.totals[static_cast<std::size_t>(n - 1)] += cand.total();
  }
  stats.candidate_length += static_cast<long>(candidate.size());
  stats.reference_length += closest_reference_length(candidate.size(), references);
}

double brevity_penalty(long c, long r) {
  if (c >= r) return 1.0;
  return std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
}

void require_references(const References& references, const char* metric) {
  if (references.empty()) throw ValidationError(std::string(metric) + " needs at least one reference");
}

}  // namespace

double bleu_corpus(const std::vector<TokenSequence>& candidates,
                   const std::vector<References>& references, int max_n) {
  if (candidates.size() != references.size()) {
    throw ValidationError("bleu: " + std::to_string(candidates.size()) + " candidates but " +
                          std::to_string(references.size()) + " reference lists");
  }
  if (candidates.empty()) throw ValidationError("bleu: empty corpus");
  if (max_n < 1) throw ValidationError("bleu: max_n must be >= 1");
  NGramStats stats;
  stats.matches.assign(static_cast<std::size_t>(max_n), 0);
  stats.totals.assign(static_cast<std::size_t>(max_n), 0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    require_references(references[i], "bleu");
    accumulate(candidates[i], references[i], max_n, stats);
  }
  if (stats.candidate_length == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < max_n; ++n) {
    const long m = stats.matches[static_cast<std::size_t>(n)];
    const long t = stats.totals[static_cast<std::size_t>(n)];
    if (m == 0 || t == 0) return 0.0;
    log_sum += std::log(static_cast<double>(m) / static_cast<double>(t));
  }
  return brevity_penalty(stats.candidate_length, stats.reference_length) *
         std::exp(log_sum / max_n);
}

double sent_bleu(const TokenSequence& candidate, const References& references, int max_n) {
  require_references(references, "sentbleu");
  if (max_n < 1) throw ValidationError("sentbleu: max_n must be >= 1");
  if (candidate.empty()) return 0.0;
  NGramStats stats;
  stats.matches.assign(static_cast<std::size_t>(max_n), 0);
  stats.totals.assign(static_cast<std::size_t>(max_n), 0);
  accumulate(candidate, references, max_n, stats);
  double log_sum = 0.0;
  for (int n = 0; n < max_n; ++n) {
    const double m = static_cast<double>(stats.matches[static_cast<std::size_t>(n)]);
    const double t = static_cast<double>(stats.totals[static_cast<std::size_t>(n)]);
    double p;
    if (n == 0) {
      p = m > 0 ? m / t : kSentBleuUnigramFloor / t;
    } else {
      p = (m + 1.0) / (t + 1.0);
    }
    log_sum += std::log(p);
  }
  return brevity_penalty(stats.candidate_length, stats.reference_length) *
         std::exp(log_sum / max_n);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const TokenSequence& candidate, const References& references, double beta) {
  require_references(references, "rouge-l");
  if (candidate.empty()) return 0.0;
  const double b2 = beta * beta;
  double best = 0.0;
  for (const auto& r : references) {
    if (r.empty()) continue;
    const auto lcs = static_cast<double>(lcs_length(candidate.tokens, r.tokens));
    if (lcs == 0.0) continue;
    const double p = lcs / static_cast<double>(candidate.size());
    const double rec = lcs / static_cast<double>(r.size());
    best = std::max(best, (1.0 + b2) * p * rec / (rec + b2 * p));
  }
  return best;
}

double IdfTable::idf(const NGram& gram) const {
  auto it = doc_frequency.find(gram);
  const int df = it == doc_frequency.end() ? 1 : std::max(1, it->second);
  return std::log(static_cast<double>(num_docs) / static_cast<double>(df));
}

CiderScorer::CiderScorer(const std::vector<References>& documents) {
  if (documents.empty()) throw ValidationError("cider: empty corpus");
  for (int n = 1; n <= kMaxN; ++n) {
    IdfTable table;
    table.n = n;
    table.num_docs = static_cast<int>(documents.size());
    for (const auto& refs : documents) {
      std::set<NGram> seen;
      for (const auto& r : refs) {
        for (const auto& [gram, c] : ngrams(r, n).counts) seen.insert(gram);
      }
      for (const auto& gram : seen) ++table.doc_frequency[gram];
    }
    tables_.push_back(std::move(table));
  }
  if (documents.size() == 1) {
    warnings_.push_back("cider: single-document corpus, every IDF is log(1) = 0");
  }
}

double CiderScorer::score(const TokenSequence& candidate, const References& references) const {
  require_references(references, "cider");
  double total = 0.0;
  for (const auto& r : references) {
    double per_n = 0.0;
    for (int n = 1; n <= kMaxN; ++n) {
      const IdfTable& table = tables_[static_cast<std::size_t>(n - 1)];
      std::map<NGram, double> cv;
      for (const auto& [gram, c] : ngrams(candidate, n).counts) cv[gram] = c * table.idf(gram);
      std::map<NGram, double> rv;
      for (const auto& [gram, c] : ngrams(r, n).counts) rv[gram] = c * table.idf(gram);
      double dot = 0.0;
      double cn = 0.0;
      double rn = 0.0;
      for (const auto& [gram, w] : cv) {
        cn += w * w;
        if (auto it = rv.find(gram); it != rv.end()) dot += w * it->second;
      }
      for (const auto& [gram, w] : rv) rn += w * w;
      if (cn > 0.0 && rn > 0.0) per_n += dot / (std::sqrt(cn) * std::sqrt(rn));
    }
    total += per_n / kMaxN;
  }
  return 10.0 * total / static_cast<double>(references.size());
}

namespace {

struct TokenizedCorpus {
  std::map<std::string, References> references;
  std::map<std::string, std::vector<std::string>> ref_ids;
  std::vector<std::pair<CellKey, TokenSequence>> candidates;
};

TokenizedCorpus tokenize_corpus(const Corpus& corpus) {
  TokenizedCorpus t;
  for (const auto& [video, refs] : corpus.references) {
    auto& seqs = t.references[video];
    auto& ids = t.ref_ids[video];
    for (const auto& r : refs) {
      seqs.push_back(tokenize(r.text));
      ids.push_back(r.ref_id);
    }
  }
  for (const auto& [key, text] : corpus.candidates) t.candidates.emplace_back(key, tokenize(text));
  return t;
}

std::vector<References> documents_of(const TokenizedCorpus& t) {
  std::vector<References> docs;
  for (const auto& [video, refs] : t.references) docs.push_back(refs);
  return docs;
}

}  // namespace

CiderResult cider_corpus(const Corpus& corpus) {
  if (corpus.candidates.empty()) throw ValidationError("cider: empty corpus");
  const TokenizedCorpus t = tokenize_corpus(corpus);
  CiderScorer scorer(documents_of(t));
  CiderResult result;
  result.scores.metric = kCider;
  result.warnings = scorer.warnings();
  for (const auto& [key, cand] : t.candidates) {
    result.scores.entries.emplace(ScoreKey{key.first, std::nullopt, key.second},
                                  scorer.score(cand, t.references.at(key.first)));
  }
  return result;
}

const std::vector<std::string>& classical_metrics() {
  static const std::vector<std::string> names = {kBleu4, kSentBleu, kRougeL, kCider, kMeteorLite};
  return names;
}

std::vector<std::string> resolve_metric_selection(const std::vector<std::string>& selection) {
  std::vector<std::string> out;
  auto add = [&](const std::string& name) {
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  };
  for (const auto& name : selection) {
    if (name == "all") {
      for (const auto& m : classical_metrics()) add(m);
      continue;
    }
    const auto& known = classical_metrics();
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw ValidationError("unknown metric '" + name +
                            "' (known: bleu-4, sentbleu, rouge-l, cider, meteor-lite, all)");
    }
    add(name);
  }
  if (out.empty()) throw ValidationError("empty metric selection");
  return out;
}

ScoreAllResult score_all(const Corpus& corpus, const std::vector<std::string>& selection,
                         ScoreOptions options) {
  const auto metrics = resolve_metric_selection(selection);
  const TokenizedCorpus t = tokenize_corpus(corpus);

  ScoreAllResult result;
  std::optional<CiderScorer> cider;
  if (std::find(metrics.begin(), metrics.end(), kCider) != metrics.end()) {
    if (corpus.references.empty()) throw ValidationError("cider: empty corpus");
    cider.emplace(documents_of(t));
    result.warnings = cider->warnings();
  }

  auto score_one = [&](const std::string& metric, const TokenSequence& cand,
                       const References& refs) -> double {
    if (metric == kBleu4) return bleu_corpus({cand}, {refs});
    if (metric == kSentBleu) return sent_bleu(cand, refs);
    if (metric == kRougeL) return rouge_l(cand, refs);
    if (metric == kCider) return cider->score(cand, refs);
    return meteor_lite(cand, refs);
  };

  // Pre-sized slots: one per (candidate, reference-or-all, metric).
  struct Job {
    std::size_t candidate;
    int ref;  // -1 = all references
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < t.candidates.size(); ++c) {
    const auto& video = t.candidates[c].first.first;
    const int nrefs = static_cast<int>(t.references.at(video).size());
    if (options.per_reference) {
      for (int r = 0; r < nrefs; ++r) jobs.push_back({c, r});
    } else {
      jobs.push_back({c, -1});
    }
  }
  std::vector<std::vector<double>> values(jobs.size(), std::vector<double>(metrics.size()));
  parallel_for(jobs.size(), [&](std::size_t i) {
    const auto& [key, cand] = t.candidates[jobs[i].candidate];
    const References& all = t.references.at(key.first);
    const References refs = jobs[i].ref < 0 ? all : References{all[static_cast<std::size_t>(jobs[i].ref)]};
    for (std::size_t m = 0; m < metrics.size(); ++m) values[i][m] = score_one(metrics[m], cand, refs);
  });

  for (std::size_t m = 0; m < metrics.size(); ++m) {
    ScoreMatrix matrix;
    matrix.metric = metrics[m];
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const auto& key = t.candidates[jobs[i].candidate].first;
      ScoreKey sk{key.first, std::nullopt, key.second};
      if (jobs[i].ref >= 0) {
        sk.ref_id = t.ref_ids.at(key.first)[static_cast<std::size_t>(jobs[i].ref)];
      }
      matrix.entries.emplace(std::move(sk), values[i][m]);
    }
    result.matrices.push_back(std::move(matrix));
  }
  return result;
}

}  // namespace capeval
