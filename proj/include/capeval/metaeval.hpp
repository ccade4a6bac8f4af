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

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capeval/corpus.hpp"
#include "capeval/score_matrix.hpp"
#include "capeval/stats.hpp"

namespace capeval {

enum class CorrelationLevel { System, Caption };

const char* to_string(CorrelationLevel level);
CorrelationLevel parse_correlation_level(const std::string& text);

/// Year label used for reports pooled over every year.
inline constexpr const char* kAllYears = "all";

struct CorrelationReport {
  CorrelationLevel level = CorrelationLevel::Caption;
  std::string metric;
  std::string year = kAllYears;
  double rho = 0.0;
  std::size_t n = 0;
  /// Scored rows without a human value (complete-case exclusion).
  std::size_t dropped = 0;
  /// False when the correlation is undefined (constant input); rho is then 0.
  bool defined = true;
};

/// Score and human vectors aligned on common keys.
struct AlignedRows {
  std::vector<std::string> labels;
  std::vector<double> scores;
  std::vector<double> human;
  std::size_t dropped = 0;
};

/// Caption rows: per (video, ref, system) for per-reference matrices with
/// multiref = false, otherwise per (video, system) with scores averaged
/// over references. The human value of a caption is shared by all its
/// references.
AlignedRows align_captions(const ScoreMatrix& scores, const AssessmentMatrix& human, bool multiref);

struct SystemLevelResult {
  /// P_t: mean metric score over the system's aligned entries.
  std::map<std::string, double> metric_means;
  /// U_t: mean human score over the same entries.
  std::map<std::string, double> human_means;
  CorrelationReport report;
};

/// Pearson of per-system means. Needs at least 3 systems.
SystemLevelResult system_level(const ScoreMatrix& scores, const AssessmentMatrix& human);

/// Pearson over caption rows (see align_captions). Constant inputs raise NumericError.
CorrelationReport caption_level(const ScoreMatrix& scores, const AssessmentMatrix& human,
                                bool multiref);

/// Entries of videos in `year` only.
ScoreMatrix restrict_to_year(const ScoreMatrix& scores, const Corpus& corpus,
                             const std::string& year);
AssessmentMatrix restrict_to_year(const AssessmentMatrix& human, const Corpus& corpus,
                                  const std::string& year);

/// Corpus keeping the first `m` references (in id order) of each video.
Corpus limit_references(const Corpus& corpus, std::size_t m);

struct CorrelateOptions {
  CorrelationLevel level = CorrelationLevel::Caption;
  bool multiref = true;
  /// Restrict to one year; empty means every year plus the pooled "all" row.
  std::string year;
};

/// One report per metric and year (plus the pooled "all" row). Caption
/// level reports with constant inputs are returned with defined = false.
std::vector<CorrelationReport> correlate(const std::vector<ScoreMatrix>& matrices,
                                         const AssessmentMatrix& human, const Corpus& corpus,
                                         const CorrelateOptions& options);

/// Metrics as rows, years as columns, then the mean over years and the mean
/// over years excluding the first one.
std::string format_year_table(const std::vector<CorrelationReport>& reports);

void write_correlation_tsv(const std::vector<CorrelationReport>& reports, const std::string& path);
void write_correlation_json(const std::vector<CorrelationReport>& reports, const std::string& path);

struct WilliamsCell {
  std::string metric_row;
  std::string metric_col;
  double t_statistic = 0.0;
  double p_value = 0.5;
  std::size_t n = 0;
};

struct WilliamsMatrix {
  std::vector<std::string> metrics;
  /// cells[i][j] tests metric i against metric j; the diagonal is empty.
  std::vector<std::vector<std::optional<WilliamsCell>>> cells;
  /// Signed correlation of each metric with the human scores.
  std::vector<double> rho;
};

/// Williams test for every ordered pair of metrics on absolute correlations
/// with the human vector. Each metric is sign-flipped to correlate
/// positively, so r12 is adjusted by the product of both signs.
WilliamsMatrix williams_matrix(const std::vector<std::pair<std::string, std::vector<double>>>& metrics,
                               const std::vector<double>& human);

/// Aligns every matrix on the keys they share with the human scores at the
/// given level (per-system means at system level) and runs williams_matrix.
WilliamsMatrix williams_from_scores(const std::vector<ScoreMatrix>& matrices,
                                    const AssessmentMatrix& human, CorrelationLevel level,
                                    bool multiref = true);

/// TSV grid of p-values, metrics as rows and columns, blank diagonal.
std::string format_williams_tsv(const WilliamsMatrix& matrix);
void write_williams_json(const WilliamsMatrix& matrix, const std::string& path);

/// Candidate captions word-shuffled with per-caption streams derived from
/// `seed`; references untouched.
Corpus shuffle_corpus(const Corpus& corpus, std::uint64_t seed);

struct ShuffleRow {
  std::string metric;
  double rho_original = 0.0;
  double rho_shuffled = 0.0;
  /// rho_original - rho_shuffled
  double drop = 0.0;
  /// drop / |rho_original|
  double relative_drop = 0.0;
};

struct ShuffleReport {
  std::uint64_t seed = 0;
  std::vector<ShuffleRow> rows;
  Warnings warnings;
};

using CorpusScorer = std::function<std::vector<ScoreMatrix>(const Corpus&)>;

/// Caption-level correlations (multiref) before and after shuffling, for
/// every matrix the scorer returns.
ShuffleReport shuffle_experiment(const Corpus& corpus, const AssessmentMatrix& human,
                                 const CorpusScorer& scorer, std::uint64_t seed);

/// Same with the classical metrics named in `selection`.
ShuffleReport shuffle_experiment(const Corpus& corpus, const AssessmentMatrix& human,
                                 const std::vector<std::string>& selection, std::uint64_t seed);

std::string format_shuffle_tsv(const ShuffleReport& report);

/// Fixed-point rendering used by every text report.
std::string format_number(double value, int decimals = 6);

}  // namespace capeval
