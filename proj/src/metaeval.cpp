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


#include "capeval/metaeval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "capeval/metrics.hpp"
#include "capeval/textproc.hpp"
#include "json.hpp"

namespace capeval {

using json = nlohmann::json;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path);
  out << text;
  if (!out) throw Error("write failed: " + path);
}

CellKey cell_of(const ScoreKey& key) { return {key.video_id, key.system_id}; }

// Rows of one matrix at a fixed granularity: per reference when
// `per_reference`, otherwise per caption (reference means).
std::map<ScoreKey, double> rows_at(const ScoreMatrix& m, bool per_reference) {
  if (per_reference) return m.entries;
  std::map<ScoreKey, double> out;
  for (const auto& [cell, value] : m.caption_means()) {
    out.emplace(ScoreKey{cell.first, std::nullopt, cell.second}, value);
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

const char* to_string(CorrelationLevel level) {
  return level == CorrelationLevel::System ? "system" : "caption";
}

CorrelationLevel parse_correlation_level(const std::string& text) {
  if (text == "system") return CorrelationLevel::System;
  if (text == "caption") return CorrelationLevel::Caption;
  throw ValidationError("unknown level '" + text + "' (expected system or caption)");
}

std::string format_number(double value, int decimals) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s(buf);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

AlignedRows align_captions(const ScoreMatrix& scores, const AssessmentMatrix& human,
                           bool multiref) {
  AlignedRows rows;
  const bool per_ref = scores.per_reference() && !multiref;
  for (const auto& [key, value] : rows_at(scores, per_ref)) {
    auto it = human.entries.find(cell_of(key));
    if (it == human.entries.end()) {
      ++rows.dropped;
      continue;
    }
    rows.labels.push_back(key.label());
    rows.scores.push_back(value);
    rows.human.push_back(it->second);
  }
  return rows;
}

SystemLevelResult system_level(const ScoreMatrix& scores, const AssessmentMatrix& human) {
  struct Acc {
    double score = 0.0;
    double human = 0.0;
    long n = 0;
  };
  std::map<std::string, Acc> acc;
  SystemLevelResult result;
  result.report.level = CorrelationLevel::System;
  result.report.metric = scores.metric;
  for (const auto& [key, value] : scores.entries) {
    auto it = human.entries.find(cell_of(key));
    if (it == human.entries.end()) {
      ++result.report.dropped;
      continue;
    }
    Acc& a = acc[key.system_id];
    a.score += value;
    a.human += it->second;
    ++a.n;
  }
  if (acc.size() < 3) {
    throw ValidationError("system-level correlation of '" + scores.metric +
                          "' needs at least 3 systems with human scores, got " +
                          std::to_string(acc.size()));
  }
  std::vector<double> p, u;
  for (const auto& [system, a] : acc) {
    const double pm = a.score / static_cast<double>(a.n);
    const double um = a.human / static_cast<double>(a.n);
    result.metric_means.emplace(system, pm);
    result.human_means.emplace(system, um);
    p.push_back(pm);
    u.push_back(um);
  }
  result.report.n = p.size();
  result.report.rho = pearson(p, u);
  return result;
}

CorrelationReport caption_level(const ScoreMatrix& scores, const AssessmentMatrix& human,
                                bool multiref) {
  const AlignedRows rows = align_captions(scores, human, multiref);
  CorrelationReport report;
  report.level = CorrelationLevel::Caption;
  report.metric = scores.metric;
  report.n = rows.scores.size();
  report.dropped = rows.dropped;
  report.rho = pearson(rows.scores, rows.human);
  return report;
}

ScoreMatrix restrict_to_year(const ScoreMatrix& scores, const Corpus& corpus,
                             const std::string& year) {
  ScoreMatrix out;
  out.metric = scores.metric;
  for (const auto& [key, value] : scores.entries) {
    auto it = corpus.video_years.find(key.video_id);
    if (it != corpus.video_years.end() && it->second == year) out.entries.emplace(key, value);
  }
  return out;
}

AssessmentMatrix restrict_to_year(const AssessmentMatrix& human, const Corpus& corpus,
                                  const std::string& year) {
  AssessmentMatrix out;
  for (const auto& [cell, value] : human.entries) {
    auto it = corpus.video_years.find(cell.first);
    if (it == corpus.video_years.end() || it->second != year) continue;
    out.entries.emplace(cell, value);
    if (auto c = human.annotation_counts.find(cell); c != human.annotation_counts.end()) {
      out.annotation_counts.emplace(cell, c->second);
    }
  }
  return out;
}

Corpus limit_references(const Corpus& corpus, std::size_t m) {
  if (m == 0) throw ValidationError("limit_references: keep at least one reference");
  Corpus out = corpus;
  for (auto& [video, refs] : out.references) {
    if (refs.size() > m) refs.resize(m);
  }
  return out;
}

std::vector<CorrelationReport> correlate(const std::vector<ScoreMatrix>& matrices,
                                         const AssessmentMatrix& human, const Corpus& corpus,
                                         const CorrelateOptions& options) {
  std::vector<std::string> years;
  if (options.year.empty()) {
    const auto ys = corpus.years();
    years.assign(ys.begin(), ys.end());
    years.push_back(kAllYears);
  } else {
    if (!corpus.years().contains(options.year)) {
      throw ValidationError("year '" + options.year + "' not present in corpus");
    }
    years.push_back(options.year);
  }
  std::vector<CorrelationReport> reports;
  for (const auto& matrix : matrices) {
    for (const auto& year : years) {
      const bool pooled = year == kAllYears;
      const ScoreMatrix m = pooled ? matrix : restrict_to_year(matrix, corpus, year);
      const AssessmentMatrix h = pooled ? human : restrict_to_year(human, corpus, year);
      CorrelationReport report;
      try {
        report = options.level == CorrelationLevel::System ? system_level(m, h).report
                                                           : caption_level(m, h, options.multiref);
      } catch (const NumericError&) {
        report.level = options.level;
        report.metric = matrix.metric;
        const AlignedRows rows = align_captions(m, h, options.multiref);
        report.n = options.level == CorrelationLevel::Caption ? rows.scores.size() : 0;
        report.dropped = rows.dropped;
        report.defined = false;
        report.rho = 0.0;
      }
      report.year = year;
      reports.push_back(report);
    }
  }
  return reports;
}

std::string format_year_table(const std::vector<CorrelationReport>& reports) {
  std::vector<std::string> metrics;
  std::set<std::string> year_set;
  bool has_pooled = false;
  std::map<std::pair<std::string, std::string>, const CorrelationReport*> index;
  for (const auto& r : reports) {
    if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) {
      metrics.push_back(r.metric);
    }
    if (r.year == kAllYears) {
      has_pooled = true;
    } else {
      year_set.insert(r.year);
    }
    index[{r.metric, r.year}] = &r;
  }
  const std::vector<std::string> years(year_set.begin(), year_set.end());
  std::ostringstream out;
  out << "metric";
  for (const auto& y : years) out << '\t' << y;
  if (has_pooled) out << '\t' << kAllYears;
  out << "\tmean\tmean_excl_first\n";
  auto cell = [&](const std::string& metric, const std::string& year) -> std::optional<double> {
    auto it = index.find({metric, year});
    if (it == index.end() || !it->second->defined) return std::nullopt;
    return it->second->rho;
  };
  for (const auto& metric : metrics) {
    out << metric;
    std::vector<double> all, rest;
    for (std::size_t i = 0; i < years.size(); ++i) {
      const auto v = cell(metric, years[i]);
      out << '\t' << (v ? format_number(*v, 4) : "NA");
      if (v) {
        all.push_back(*v);
        if (i > 0) rest.push_back(*v);
      }
    }
    if (has_pooled) {
      const auto v = cell(metric, kAllYears);
      out << '\t' << (v ? format_number(*v, 4) : "NA");
    }
    out << '\t' << (all.empty() ? "NA" : format_number(mean_of(all), 4));
    out << '\t' << (rest.empty() ? "NA" : format_number(mean_of(rest), 4)) << '\n';
  }
  return out.str();
}

void write_correlation_tsv(const std::vector<CorrelationReport>& reports, const std::string& path) {
  std::ostringstream out;
  out << "level\tmetric\tyear\trho\tn\tdropped\tdefined\n";
  for (const auto& r : reports) {
    out << to_string(r.level) << '\t' << r.metric << '\t' << r.year << '\t'
        << (r.defined ? format_number(r.rho) : "NA") << '\t' << r.n << '\t' << r.dropped << '\t'
        << (r.defined ? "true" : "false") << '\n';
  }
  write_text(path, out.str());
}

void write_correlation_json(const std::vector<CorrelationReport>& reports, const std::string& path) {
  json rows = json::array();
  for (const auto& r : reports) {
    rows.push_back({{"level", to_string(r.level)},
                    {"metric", r.metric},
                    {"year", r.year},
                    {"rho", r.defined ? json(r.rho) : json(nullptr)},
                    {"n", r.n},
                    {"dropped", r.dropped},
                    {"defined", r.defined}});
  }
  write_text(path, json{{"reports", rows}}.dump(2) + "\n");
}

WilliamsMatrix williams_matrix(const std::vector<std::pair<std::string, std::vector<double>>>& metrics,
                               const std::vector<double>& human) {
  if (metrics.size() < 2) throw ValidationError("williams: need at least 2 metrics");
  for (const auto& [name, values] : metrics) {
    if (values.size() != human.size()) {
      throw ValidationError("williams: metric '" + name + "' has " + std::to_string(values.size()) +
                            " samples but the human vector has " + std::to_string(human.size()));
    }
  }
  const std::size_t k = metrics.size();
  const int n = static_cast<int>(human.size());
  WilliamsMatrix w;
  w.cells.assign(k, std::vector<std::optional<WilliamsCell>>(k));
  std::vector<double> sign(k);
  for (const auto& [name, values] : metrics) {
    w.metrics.push_back(name);
    w.rho.push_back(pearson(values, human));
  }
  for (std::size_t i = 0; i < k; ++i) sign[i] = w.rho[i] < 0.0 ? -1.0 : 1.0;
  std::vector<std::vector<double>> inter(k, std::vector<double>(k, 1.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      inter[i][j] = inter[j][i] = pearson(metrics[i].second, metrics[j].second);
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const double r12 = inter[i][j] * sign[i] * sign[j];
      const WilliamsResult res = williams_test(r12, std::abs(w.rho[i]), std::abs(w.rho[j]), n);
      w.cells[i][j] = WilliamsCell{w.metrics[i], w.metrics[j], res.t, res.p,
                                   static_cast<std::size_t>(n)};
    }
  }
  return w;
}

WilliamsMatrix williams_from_scores(const std::vector<ScoreMatrix>& matrices,
                                    const AssessmentMatrix& human, CorrelationLevel level,
                                    bool multiref) {
  if (matrices.size() < 2) throw ValidationError("williams: need at least 2 metrics");
  bool all_per_ref = true;
  for (const auto& m : matrices) all_per_ref = all_per_ref && m.per_reference();
  const bool per_ref = all_per_ref && (level == CorrelationLevel::System || !multiref);

  std::vector<std::map<ScoreKey, double>> rows;
  for (const auto& m : matrices) rows.push_back(rows_at(m, per_ref));
  std::vector<ScoreKey> common;
  for (const auto& [key, value] : rows.front()) {
    if (!human.entries.contains(cell_of(key))) continue;
    bool everywhere = true;
    for (std::size_t i = 1; i < rows.size() && everywhere; ++i) everywhere = rows[i].contains(key);
    if (everywhere) common.push_back(key);
  }

  std::vector<std::pair<std::string, std::vector<double>>> series;
  std::vector<double> human_series;
  if (level == CorrelationLevel::Caption) {
    for (std::size_t m = 0; m < matrices.size(); ++m) {
      std::vector<double> v;
      for (const auto& key : common) v.push_back(rows[m].at(key));
      series.emplace_back(matrices[m].metric, std::move(v));
    }
    for (const auto& key : common) human_series.push_back(human.entries.at(cell_of(key)));
  } else {
    std::map<std::string, std::vector<ScoreKey>> by_system;
    for (const auto& key : common) by_system[key.system_id].push_back(key);
    for (std::size_t m = 0; m < matrices.size(); ++m) {
      std::vector<double> v;
      for (const auto& [system, keys] : by_system) {
        double s = 0.0;
        for (const auto& key : keys) s += rows[m].at(key);
        v.push_back(s / static_cast<double>(keys.size()));
      }
      series.emplace_back(matrices[m].metric, std::move(v));
    }
    for (const auto& [system, keys] : by_system) {
      double s = 0.0;
      for (const auto& key : keys) s += human.entries.at(cell_of(key));
      human_series.push_back(s / static_cast<double>(keys.size()));
    }
  }
  return williams_matrix(series, human_series);
}

std::string format_williams_tsv(const WilliamsMatrix& matrix) {
  std::ostringstream out;
  out << "metric";
  for (const auto& m : matrix.metrics) out << '\t' << m;
  out << '\n';
  for (std::size_t i = 0; i < matrix.metrics.size(); ++i) {
    out << matrix.metrics[i];
    for (std::size_t j = 0; j < matrix.metrics.size(); ++j) {
      out << '\t';
      if (matrix.cells[i][j]) out << format_number(matrix.cells[i][j]->p_value);
    }
    out << '\n';
  }
  return out.str();
}

void write_williams_json(const WilliamsMatrix& matrix, const std::string& path) {
  json cells = json::array();
  for (const auto& row : matrix.cells) {
    for (const auto& cell : row) {
      if (!cell) continue;
      cells.push_back({{"row", cell->metric_row},
                       {"col", cell->metric_col},
                       {"t", cell->t_statistic},
                       {"p", cell->p_value},
                       {"n", cell->n}});
    }
  }
  json doc = {{"metrics", matrix.metrics}, {"rho", matrix.rho}, {"cells", cells}};
  write_text(path, doc.dump(2) + "\n");
}

Corpus shuffle_corpus(const Corpus& corpus, std::uint64_t seed) {
  Corpus out = corpus;
  std::uint64_t index = 0;
  for (auto& [key, text] : out.candidates) {
    text = shuffle_words(tokenize(text), derive_seed(seed, index++)).joined();
  }
  return out;
}

ShuffleReport shuffle_experiment(const Corpus& corpus, const AssessmentMatrix& human,
                                 const CorpusScorer& scorer, std::uint64_t seed) {
  ShuffleReport report;
  report.seed = seed;
  const std::vector<ScoreMatrix> original = scorer(corpus);
  const std::vector<ScoreMatrix> shuffled = scorer(shuffle_corpus(corpus, seed));
  auto rho_of = [&](const ScoreMatrix& m, const char* which) {
    try {
      return caption_level(m, human, true).rho;
    } catch (const NumericError&) {
      report.warnings.push_back("shuffle: " + m.metric + " (" + which +
                                ") scores are constant, correlation taken as 0");
      return 0.0;
    }
  };
  for (const auto& m : original) {
    auto it = std::find_if(shuffled.begin(), shuffled.end(),
                           [&](const ScoreMatrix& s) { return s.metric == m.metric; });
    if (it == shuffled.end()) throw Error("shuffle: scorer dropped metric '" + m.metric + "'");
    ShuffleRow row;
    row.metric = m.metric;
    row.rho_original = rho_of(m, "original");
    row.rho_shuffled = rho_of(*it, "shuffled");
    row.drop = row.rho_original - row.rho_shuffled;
    row.relative_drop = row.rho_original == 0.0 ? 0.0 : row.drop / std::abs(row.rho_original);
    report.rows.push_back(row);
  }
  return report;
}

ShuffleReport shuffle_experiment(const Corpus& corpus, const AssessmentMatrix& human,
                                 const std::vector<std::string>& selection, std::uint64_t seed) {
  const auto metrics = resolve_metric_selection(selection);
  return shuffle_experiment(
      corpus, human, [&](const Corpus& c) { return score_all(c, metrics).matrices; }, seed);
}

std::string format_shuffle_tsv(const ShuffleReport& report) {
  std::ostringstream out;
  out << "metric\trho_original\trho_shuffled\tdrop\trelative_drop\n";
  for (const auto& r : report.rows) {
    out << r.metric << '\t' << format_number(r.rho_original) << '\t'
        << format_number(r.rho_shuffled) << '\t' << format_number(r.drop) << '\t'
        << format_number(r.relative_drop) << '\n';
  }
  return out.str();
}

}  // namespace capeval
