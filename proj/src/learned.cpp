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


#include "capeval/learned.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "capeval/metrics.hpp"
#include "json.hpp"

namespace capeval {

using json = nlohmann::json;

namespace {

long clipped_matches(const NGramBag& cand, const NGramBag& ref) {
  long m = 0;
  for (const auto& [gram, c] : cand.counts) m += std::min(c, ref.count(gram));
  return m;
}

double mse(const Eigen::VectorXd& residual) {
  return residual.size() == 0 ? 0.0 : residual.squaredNorm() / static_cast<double>(residual.size());
}

}  // namespace

const std::array<const char*, kNumPairFeatures>& PairFeatures::names() {
  static const std::array<const char*, kNumPairFeatures> n = {
      "unigram_precision", "unigram_recall", "bigram_precision", "stem_match_rate",
      "length_ratio",      "lcs_ratio",      "length_difference"};
  return n;
}

PairFeatures featurize(const TokenSequence& candidate, const TokenSequence& reference) {
  PairFeatures f;
  if (candidate.empty() || reference.empty()) return f;
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double longest = std::max(c, r);

  const long m1 = clipped_matches(ngrams(candidate, 1), ngrams(reference, 1));
  f.values[0] = static_cast<double>(m1) / c;
  f.values[1] = static_cast<double>(m1) / r;
  if (candidate.size() >= 2) {
    f.values[2] = static_cast<double>(clipped_matches(ngrams(candidate, 2), ngrams(reference, 2))) /
                  (c - 1.0);
  }
  std::set<std::string> ref_stems;
  for (const auto& t : reference.tokens) ref_stems.insert(stem(t));
  std::size_t hits = 0;
  for (const auto& t : candidate.tokens) hits += ref_stems.contains(stem(t)) ? 1 : 0;
  f.values[3] = static_cast<double>(hits) / c;
  f.values[4] = std::min(c / r, kLengthRatioCap);
  f.values[5] = static_cast<double>(lcs_length(candidate.tokens, reference.tokens)) / longest;
  f.values[6] = (c - r) / longest;
  return f;
}

RidgeFit fit_ridge(const std::vector<std::vector<double>>& rows, const std::vector<double>& targets,
                   double lambda) {
  if (rows.size() != targets.size()) {
    throw ValidationError("ridge: " + std::to_string(rows.size()) + " rows but " +
                          std::to_string(targets.size()) + " targets");
  }
  if (rows.empty()) throw ValidationError("ridge: no training rows");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("ridge: lambda must be a finite value >= 0");
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size());
  if (rows.size() < static_cast<std::size_t>(d) + 1) {
    throw ValidationError("ridge: need at least " + std::to_string(d + 1) + " rows, got " +
                          std::to_string(rows.size()));
  }
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != d) throw ValidationError("ridge: ragged rows");
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!std::isfinite(row[static_cast<std::size_t>(j)])) {
        throw ValidationError("ridge: non-finite feature value");
      }
      x(i, j) = row[static_cast<std::size_t>(j)];
    }
    y(i) = targets[static_cast<std::size_t>(i)];
    if (!std::isfinite(y(i))) throw ValidationError("ridge: non-finite target");
  }
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd gram = inv_n * (xc.transpose() * xc);
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = inv_n * (xc.transpose() * yc);

  Eigen::VectorXd w;
  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
    qr.setThreshold(1e-10);
    if (qr.rank() < d) {
      throw NumericError("ridge: singular normal matrix with lambda = 0 (rank " +
                         std::to_string(qr.rank()) + " < " + std::to_string(d) +
                         "); use ridge_lambda > 0");
    }
    w = qr.solve(yc);
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) throw NumericError("ridge: factorization failed");
    w = ldlt.solve(rhs);
  }
  if (!w.allFinite()) throw NumericError("ridge: non-finite solution");

  RidgeFit fit;
  fit.weights.assign(w.data(), w.data() + d);
  fit.bias = y_mean - x_mean.dot(w);
  fit.loss_trace = {mse(yc), mse(yc - xc * w)};
  return fit;
}

double BaselineScorer::score(const PairFeatures& features) const {
  double s = bias_;
  for (std::size_t i = 0; i < kNumPairFeatures; ++i) s += weights_[i] * features.values[i];
  return s;
}

BaselineScorer train_baseline(const std::vector<TrainingPair>& pairs,
                              const std::vector<double>& targets, double ridge_lambda) {
  if (pairs.size() != targets.size()) {
    throw ValidationError("train_baseline: " + std::to_string(pairs.size()) + " pairs but " +
                          std::to_string(targets.size()) + " targets");
  }
  std::vector<std::vector<double>> rows(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    const PairFeatures f = featurize(pairs[i].candidate, pairs[i].reference);
    rows[i].assign(f.values.begin(), f.values.end());
  });
  const RidgeFit fit = fit_ridge(rows, targets, ridge_lambda);
  std::array<double, kNumPairFeatures> w{};
  std::copy(fit.weights.begin(), fit.weights.end(), w.begin());
  TrainingMeta meta;
  meta.num_pairs = pairs.size();
  meta.ridge_lambda = ridge_lambda;
  meta.loss_trace = fit.loss_trace;
  return BaselineScorer(w, fit.bias, std::move(meta));
}

BaselineScorer train_on_corpus(const Corpus& corpus, const AssessmentMatrix& human,
                               double ridge_lambda) {
  std::vector<TrainingPair> pairs;
  std::vector<double> targets;
  for (const auto& [key, text] : corpus.candidates) {
    auto it = human.entries.find(key);
    if (it == human.entries.end()) continue;
    const TokenSequence cand = tokenize(text);
    for (const auto& r : corpus.references_of(key.first)) {
      pairs.push_back({cand, tokenize(r.text)});
      targets.push_back(it->second);
    }
  }
  return train_baseline(pairs, targets, ridge_lambda);
}

ScoreMatrix score_pairs(const BaselineScorer& scorer, const Corpus& corpus,
                        const std::string& metric) {
  std::vector<ScoreKey> keys;
  std::vector<std::pair<const std::string*, const std::string*>> texts;
  for (const auto& [cell, text] : corpus.candidates) {
    for (const auto& r : corpus.references_of(cell.first)) {
      keys.push_back({cell.first, r.ref_id, cell.second});
      texts.emplace_back(&text, &r.text);
    }
  }
  std::vector<double> values(keys.size());
  parallel_for(keys.size(), [&](std::size_t i) {
    values[i] = scorer.score(tokenize(*texts[i].first), tokenize(*texts[i].second));
  });
  ScoreMatrix m;
  m.metric = metric;
  for (std::size_t i = 0; i < keys.size(); ++i) m.entries.emplace(std::move(keys[i]), values[i]);
  return m;
}

YearlyBaseline score_leave_one_year_out(const Corpus& corpus, const AssessmentMatrix& human,
                                        double ridge_lambda) {
  YearlyBaseline out;
  out.scores.metric = kBaselineMetric;
  const auto years = corpus.years();
  if (years.size() < 2) {
    out.warnings.push_back("baseline: single-year corpus, scorer trained and scored in-sample");
    BaselineScorer s = train_on_corpus(corpus, human, ridge_lambda);
    out.scores = score_pairs(s, corpus);
    out.scorers.emplace(years.empty() ? std::string() : *years.begin(), std::move(s));
    return out;
  }
  for (const auto& year : years) {
    const YearSplit split = leave_one_year_out(corpus, human, year);
    BaselineScorer s = train_on_corpus(split.train_corpus, split.train_matrix, ridge_lambda);
    TrainingMeta meta = s.meta();
    meta.held_out_year = year;
    s = BaselineScorer(s.weights(), s.bias(), std::move(meta));
    for (auto& [key, value] : score_pairs(s, split.test_corpus).entries) {
      out.scores.entries.emplace(key, value);
    }
    if (split.excluded > 0) {
      out.warnings.push_back("baseline: " + std::to_string(split.excluded) +
                             " training captions shared with year " + year + " were excluded");
    }
    out.scorers.emplace(year, std::move(s));
  }
  return out;
}

void export_pairs(const Corpus& corpus, const AssessmentMatrix* human, const std::string& path,
                  ExportOptions options) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path);
  for (const auto& [cell, text] : corpus.candidates) {
    const std::string& year = corpus.year_of(cell.first);
    json target = nullptr;
    if (human != nullptr && year != options.held_out_year) {
      if (auto it = human->entries.find(cell); it != human->entries.end()) target = it->second;
    }
    for (const auto& r : corpus.references_of(cell.first)) {
      json row = {{"video_id", cell.first},   {"ref_id", r.ref_id}, {"system_id", cell.second},
                  {"candidate", text},        {"reference", r.text}, {"target", target},
                  {"year", year}};
      out << row.dump() << '\n';
    }
  }
  if (!out) throw Error("write failed: " + path);
}

ScoreMatrix import_external_scores(const std::string& path, const Corpus& corpus,
                                   const std::string& metric) {
  std::vector<ScoreMatrix> matrices = read_scores_jsonl(path);
  if (matrices.empty()) throw ValidationError("scores file has no rows: " + path);
  ScoreMatrix* chosen = nullptr;
  if (metric.empty()) {
    if (matrices.size() != 1) {
      throw ValidationError("scores file holds " + std::to_string(matrices.size()) +
                            " metrics; name the one to import: " + path);
    }
    chosen = &matrices.front();
  } else {
    for (auto& m : matrices) {
      if (m.metric == metric) chosen = &m;
    }
    if (chosen == nullptr) throw ValidationError("metric '" + metric + "' not found in " + path);
  }
  validate_coverage(*chosen, corpus);
  return std::move(*chosen);
}

}  // namespace capeval
