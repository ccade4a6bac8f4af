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

#include "capeval/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include "json.hpp"

namespace capeval {
namespace {

using json = nlohmann::json;

void for_each_jsonl(const std::string& path,
                    const std::function<void(const json&, std::size_t)>& visit) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open input file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(path, line_no, "expected a JSON object");
    visit(obj, line_no);
  }
}

std::string require_string(const json& obj, const char* field, const std::string& path,
                           std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) throw ParseError(path, line, std::string("missing field '") + field + "'");
  if (!it->is_string()) {
    throw ParseError(path, line, std::string("field '") + field + "' must be a string");
  }
  return it->get<std::string>();
}

ControlKind parse_control(const std::string& text, const std::string& path, std::size_t line) {
  if (text == "system") return ControlKind::System;
  if (text == "human") return ControlKind::HumanControl;
  if (text == "degraded") return ControlKind::DegradedControl;
  throw ParseError(path, line, "unknown control kind '" + text + "'");
}

const char* control_token(ControlKind kind) {
  switch (kind) {
    case ControlKind::System: return "system";
    case ControlKind::HumanControl: return "human";
    case ControlKind::DegradedControl: return "degraded";
  }
  return "system";
}

void write_lines(const std::string& path, const std::vector<json>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path);
  for (const auto& row : rows) out << row.dump() << '\n';
  if (!out) throw Error("write failed: " + path);
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

const char* to_string(DatasetTag tag) {
  switch (tag) {
    case DatasetTag::SA: return "SA";
    case DatasetTag::MA: return "MA";
    case DatasetTag::Synthetic: return "SYNTHETIC";
  }
  return "SA";
}

const char* to_string(ControlKind kind) { return control_token(kind); }

const char* to_string(AssessmentMode mode) { return mode == AssessmentMode::SA ? "sa" : "ma"; }

AssessmentMode parse_assessment_mode(const std::string& text) {
  if (text == "sa" || text == "SA") return AssessmentMode::SA;
  if (text == "ma" || text == "MA") return AssessmentMode::MA;
  throw ValidationError("unknown assessment mode '" + text + "' (expected sa or ma)");
}

std::size_t Corpus::max_references() const {
  std::size_t m = 0;
  for (const auto& [video, refs] : references) m = std::max(m, refs.size());
  return m;
}

std::set<std::string> Corpus::systems() const {
  std::set<std::string> out;
  for (const auto& [key, text] : candidates) out.insert(key.second);
  return out;
}

std::set<std::string> Corpus::years() const {
  std::set<std::string> out;
  for (const auto& [video, year] : video_years) out.insert(year);
  return out;
}

const std::string& Corpus::year_of(const std::string& video_id) const {
  auto it = video_years.find(video_id);
  if (it == video_years.end()) throw ValidationError("unknown video '" + video_id + "'");
  return it->second;
}

const std::vector<Reference>& Corpus::references_of(const std::string& video_id) const {
  static const std::vector<Reference> kNone;
  auto it = references.find(video_id);
  return it == references.end() ? kNone : it->second;
}

void Corpus::validate() const {
  for (const auto& [video, refs] : references) {
    if (!video_years.contains(video)) {
      throw ValidationError("reference for unknown video '" + video + "'");
    }
    if (refs.size() > kMaxReferencesPerVideo) {
      throw ValidationError("video '" + video + "' has " + std::to_string(refs.size()) +
                            " references (at most 5 allowed)");
    }
    std::set<std::string> ids;
    for (const auto& r : refs) {
      if (!ids.insert(r.ref_id).second) {
        throw ValidationError("duplicate reference '" + r.ref_id + "' for video '" + video + "'");
      }
    }
  }
  for (const auto& [key, text] : candidates) {
    if (!video_years.contains(key.first)) {
      throw ValidationError("caption for unknown video '" + key.first + "'");
    }
    if (references_of(key.first).empty()) {
      throw ValidationError("video '" + key.first + "' has captions but no references");
    }
  }
}

bool AssessmentMatrix::contains(const std::string& video, const std::string& system) const {
  return entries.contains(CellKey{video, system});
}

double AssessmentMatrix::at(const std::string& video, const std::string& system) const {
  auto it = entries.find(CellKey{video, system});
  if (it == entries.end()) {
    throw CoverageError("no human score", {video + "/" + system});
  }
  return it->second;
}

LoadedCorpus load_corpus(const std::string& caption_file, const std::string& reference_file,
                         const std::string& assessment_file, DatasetTag tag) {
  LoadedCorpus out;
  Corpus& corpus = out.corpus;
  corpus.tag = tag;

  auto note_year = [&](const std::string& video, const std::string& year, const std::string& path,
                       std::size_t line) {
    auto [it, inserted] = corpus.video_years.emplace(video, year);
    if (!inserted && it->second != year) {
      throw ParseError(path, line,
                       "video '" + video + "' has year '" + year + "' but was already seen with '" +
                           it->second + "'");
    }
  };

  for_each_jsonl(reference_file, [&](const json& obj, std::size_t line) {
    auto video = require_string(obj, "video_id", reference_file, line);
    auto ref_id = require_string(obj, "ref_id", reference_file, line);
    auto year = require_string(obj, "year", reference_file, line);
    auto text = require_string(obj, "text", reference_file, line);
    note_year(video, year, reference_file, line);
    auto& refs = corpus.references[video];
    for (const auto& r : refs) {
      if (r.ref_id == ref_id) {
        throw ParseError(reference_file, line,
                         "duplicate reference '" + ref_id + "' for video '" + video + "'");
      }
    }
    if (refs.size() == kMaxReferencesPerVideo) {
      throw ParseError(reference_file, line, "video '" + video + "' has more than 5 references");
    }
    refs.push_back({std::move(ref_id), std::move(text)});
  });

  for_each_jsonl(caption_file, [&](const json& obj, std::size_t line) {
    auto video = require_string(obj, "video_id", caption_file, line);
    auto system = require_string(obj, "system_id", caption_file, line);
    auto year = require_string(obj, "year", caption_file, line);
    auto caption = require_string(obj, "caption", caption_file, line);
    note_year(video, year, caption_file, line);
    if (!corpus.candidates.emplace(CellKey{video, system}, std::move(caption)).second) {
      throw ParseError(caption_file, line,
                       "duplicate caption for video '" + video + "', system '" + system + "'");
    }
  });

  // Keep references in ref_id order so iteration never depends on file order.
  for (auto& [video, refs] : corpus.references) {
    std::sort(refs.begin(), refs.end(),
              [](const Reference& a, const Reference& b) { return a.ref_id < b.ref_id; });
  }
  corpus.validate();

  if (!assessment_file.empty()) {
    for_each_jsonl(assessment_file, [&](const json& obj, std::size_t line) {
      RawAnnotation a;
      a.video_id = require_string(obj, "video_id", assessment_file, line);
      a.system_id = require_string(obj, "system_id", assessment_file, line);
      a.annotator_id = require_string(obj, "annotator_id", assessment_file, line);
      auto score = obj.find("raw_score");
      if (score == obj.end() || !score->is_number()) {
        throw ParseError(assessment_file, line, "field 'raw_score' must be a number");
      }
      a.raw_score = score->get<double>();
      if (!(a.raw_score >= 0.0 && a.raw_score <= 100.0)) {
        throw ParseError(assessment_file, line,
                         "raw_score " + score->dump() + " outside [0, 100]");
      }
      a.control = parse_control(require_string(obj, "control", assessment_file, line),
                                assessment_file, line);
      if (!corpus.video_years.contains(a.video_id)) {
        throw ParseError(assessment_file, line, "dangling reference to unknown video '" +
                                                    a.video_id + "'");
      }
      if (a.control == ControlKind::System &&
          !corpus.candidates.contains(CellKey{a.video_id, a.system_id})) {
        throw ParseError(assessment_file, line,
                         "dangling reference to unknown caption (video '" + a.video_id +
                             "', system '" + a.system_id + "')");
      }
      out.annotations.push_back(std::move(a));
    });
  }
  return out;
}

void write_corpus(const Corpus& corpus, const std::vector<RawAnnotation>& annotations,
                  const std::string& caption_file, const std::string& reference_file,
                  const std::string& assessment_file) {
  std::vector<json> rows;
  for (const auto& [key, caption] : corpus.candidates) {
    rows.push_back(json{{"video_id", key.first},
                        {"system_id", key.second},
                        {"year", corpus.year_of(key.first)},
                        {"caption", caption}});
  }
  write_lines(caption_file, rows);

  rows.clear();
  for (const auto& [video, refs] : corpus.references) {
    for (const auto& r : refs) {
      rows.push_back(json{{"video_id", video},
                          {"ref_id", r.ref_id},
                          {"year", corpus.year_of(video)},
                          {"text", r.text}});
    }
  }
  write_lines(reference_file, rows);

  if (assessment_file.empty()) return;
  rows.clear();
  for (const auto& a : annotations) {
    rows.push_back(json{{"video_id", a.video_id},
                        {"system_id", a.system_id},
                        {"annotator_id", a.annotator_id},
                        {"raw_score", a.raw_score},
                        {"control", control_token(a.control)}});
  }
  write_lines(assessment_file, rows);
}

FilterResult filter_annotators(const std::vector<RawAnnotation>& annotations,
                               FilterThresholds thresholds) {
  const auto in_range = [](double v) { return v >= 0.0 && v <= 100.0; };
  if (!in_range(thresholds.human_floor) || !in_range(thresholds.degraded_ceiling)) {
    throw ValidationError("annotator filter thresholds must lie in [0, 100]");
  }

  struct ControlScores {
    std::vector<double> human;
    std::vector<double> degraded;
  };
  std::map<std::string, ControlScores> per_annotator;
  for (const auto& a : annotations) {
    auto& c = per_annotator[a.annotator_id];
    if (a.control == ControlKind::HumanControl) c.human.push_back(a.raw_score);
    if (a.control == ControlKind::DegradedControl) c.degraded.push_back(a.raw_score);
  }

  FilterResult result;
  std::set<std::string> rejected;
  for (const auto& [annotator, c] : per_annotator) {
    if (c.human.empty() && c.degraded.empty()) {
      result.warnings.push_back("annotator '" + annotator + "' has no control items; kept unchecked");
      continue;
    }
    const bool misses_humans = !c.human.empty() && mean_of(c.human) < thresholds.human_floor;
    const bool accepts_degraded =
        !c.degraded.empty() && mean_of(c.degraded) > thresholds.degraded_ceiling;
    if (misses_humans || accepts_degraded) {
      rejected.insert(annotator);
      result.removed_annotators.push_back(annotator);
    }
  }
  for (const auto& a : annotations) {
    if (a.control != ControlKind::System || rejected.contains(a.annotator_id)) continue;
    result.kept.push_back(a);
  }
  return result;
}

ZScores zscore_by_annotator(const std::vector<RawAnnotation>& annotations) {
  std::map<std::string, std::vector<std::size_t>> rows_of;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    rows_of[annotations[i].annotator_id].push_back(i);
  }
  ZScores out;
  out.values.assign(annotations.size(), 0.0);
  for (const auto& [annotator, rows] : rows_of) {
    const double n = static_cast<double>(rows.size());
    double mean = 0.0;
    for (auto i : rows) mean += annotations[i].raw_score;
    mean /= n;
    double ss = 0.0;
    for (auto i : rows) {
      const double d = annotations[i].raw_score - mean;
      ss += d * d;
    }
    const double sd = rows.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    if (!(sd > 0.0)) {
      out.warnings.push_back("annotator '" + annotator +
                             "' has zero score variance; z-scores set to 0");
      continue;
    }
    for (auto i : rows) out.values[i] = (annotations[i].raw_score - mean) / sd;
  }
  return out;
}

AssessmentMatrix standardize(const std::vector<RawAnnotation>& annotations, AssessmentMode mode,
                             StandardizeOptions options) {
  std::vector<RawAnnotation> system_rows;
  for (const auto& a : annotations) {
    if (a.control == ControlKind::System) system_rows.push_back(a);
  }
  ZScores z = zscore_by_annotator(system_rows);

  AssessmentMatrix matrix;
  matrix.warnings = std::move(z.warnings);
  std::map<CellKey, double> sums;
  for (std::size_t i = 0; i < system_rows.size(); ++i) {
    CellKey key{system_rows[i].video_id, system_rows[i].system_id};
    sums[key] += z.values[i];
    ++matrix.annotation_counts[key];
  }

  std::vector<std::string> short_cells;
  for (const auto& [key, sum] : sums) {
    const int count = matrix.annotation_counts[key];
    if (mode == AssessmentMode::SA && count != 1) {
      throw ValidationError("SA mode expects one annotation per caption; " + key.first + "/" +
                            key.second + " has " + std::to_string(count));
    }
    if (mode == AssessmentMode::MA && count < options.min_annotations) {
      short_cells.push_back(key.first + "/" + key.second + " (" + std::to_string(count) + ")");
    }
    matrix.entries[key] = sum / static_cast<double>(count);
  }
  if (!short_cells.empty()) {
    if (!options.relax_min_annotations) {
      throw CoverageError("MA cells below the minimum of " +
                              std::to_string(options.min_annotations) +
                              " annotations; pass --relax-min-annotations to accept them",
                          std::move(short_cells));
    }
    matrix.warnings.push_back(std::to_string(short_cells.size()) +
                              " MA cells below the minimum annotation count (relaxed)");
  }
  return matrix;
}

YearSplit leave_one_year_out(const Corpus& corpus, const AssessmentMatrix& matrix,
                             const std::string& year) {
  if (!corpus.years().contains(year)) {
    throw ValidationError("year '" + year + "' not present in corpus");
  }
  YearSplit split;
  split.held_out_year = year;
  for (Corpus* c : {&split.train_corpus, &split.test_corpus}) c->tag = corpus.tag;

  std::set<std::string> test_texts;
  for (const auto& [key, text] : corpus.candidates) {
    if (corpus.year_of(key.first) == year) test_texts.insert(text);
  }
  for (const auto& [video, y] : corpus.video_years) {
    Corpus& target = y == year ? split.test_corpus : split.train_corpus;
    target.video_years.emplace(video, y);
    if (auto it = corpus.references.find(video); it != corpus.references.end()) {
      target.references.emplace(video, it->second);
    }
  }
  auto copy_cell = [&](const CellKey& key, AssessmentMatrix& to) {
    if (auto it = matrix.entries.find(key); it != matrix.entries.end()) {
      to.entries.emplace(key, it->second);
      to.annotation_counts.emplace(key, matrix.annotation_counts.count(key)
                                            ? matrix.annotation_counts.at(key)
                                            : 1);
    }
  };
  for (const auto& [key, text] : corpus.candidates) {
    if (corpus.year_of(key.first) == year) {
      split.test_corpus.candidates.emplace(key, text);
      copy_cell(key, split.test_matrix);
    } else if (test_texts.contains(text)) {
      ++split.excluded;
    } else {
      split.train_corpus.candidates.emplace(key, text);
      copy_cell(key, split.train_matrix);
    }
  }
  if (split.train_corpus.candidates.empty()) {
    throw ValidationError("training split is empty after holding out year '" + year + "'");
  }
  return split;
}

std::pair<Corpus, AssessmentMatrix> restrict_to_videos(const Corpus& corpus,
                                                       const AssessmentMatrix& matrix,
                                                       const std::set<std::string>& videos) {
  Corpus c;
  c.tag = corpus.tag;
  AssessmentMatrix m;
  for (const auto& v : videos) {
    c.video_years.emplace(v, corpus.year_of(v));
    if (auto it = corpus.references.find(v); it != corpus.references.end()) {
      c.references.emplace(v, it->second);
    }
  }
  for (const auto& [key, text] : corpus.candidates) {
    if (!videos.contains(key.first)) continue;
    c.candidates.emplace(key, text);
    if (auto it = matrix.entries.find(key); it != matrix.entries.end()) {
      m.entries.emplace(key, it->second);
      if (auto ct = matrix.annotation_counts.find(key); ct != matrix.annotation_counts.end()) {
        m.annotation_counts.emplace(key, ct->second);
      }
    }
  }
  return {std::move(c), std::move(m)};
}

std::vector<std::set<std::string>> video_folds(const Corpus& corpus, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("k-fold split needs k >= 2");
  std::vector<std::string> ids;
  for (const auto& [video, year] : corpus.video_years) ids.push_back(video);
  if (ids.size() < static_cast<std::size_t>(k)) {
    throw ValidationError("fewer videos than folds");
  }
  Rng rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
  std::vector<std::set<std::string>> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < ids.size(); ++i) folds[i % folds.size()].insert(ids[i]);
  return folds;
}

}  // namespace capeval
