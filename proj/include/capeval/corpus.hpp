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
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "capeval/common.hpp"

namespace capeval {

enum class DatasetTag { SA, MA, Synthetic };
enum class ControlKind { System, HumanControl, DegradedControl };
enum class AssessmentMode { SA, MA };

const char* to_string(DatasetTag tag);
const char* to_string(ControlKind kind);
const char* to_string(AssessmentMode mode);
AssessmentMode parse_assessment_mode(const std::string& text);

inline constexpr std::size_t kMaxReferencesPerVideo = 5;

/// (video_id, system_id)
using CellKey = std::pair<std::string, std::string>;

struct Reference {
  std::string ref_id;
  std::string text;

  bool operator==(const Reference&) const = default;
};

/// Videos, their human references and the system captions to evaluate.
/// Maps keep every iteration in id order.
struct Corpus {
  std::map<std::string, std::string> video_years;
  std::map<std::string, std::vector<Reference>> references;
  std::map<CellKey, std::string> candidates;
  DatasetTag tag = DatasetTag::SA;

  std::size_t num_videos() const { return video_years.size(); }
  /// Largest reference count of any video (M).
  std::size_t max_references() const;
  std::set<std::string> systems() const;
  std::set<std::string> years() const;
  const std::string& year_of(const std::string& video_id) const;
  const std::vector<Reference>& references_of(const std::string& video_id) const;

  /// Throws ValidationError on the first broken invariant.
  void validate() const;

  bool operator==(const Corpus&) const = default;
};

struct RawAnnotation {
  std::string video_id;
  std::string system_id;
  std::string annotator_id;
  double raw_score = 0.0;
  ControlKind control = ControlKind::System;

  bool operator==(const RawAnnotation&) const = default;
};

/// Standardized human scores, one per (video, system).
struct AssessmentMatrix {
  std::map<CellKey, double> entries;
  std::map<CellKey, int> annotation_counts;
  Warnings warnings;

  bool contains(const std::string& video, const std::string& system) const;
  double at(const std::string& video, const std::string& system) const;
};

struct LoadedCorpus {
  Corpus corpus;
  std::vector<RawAnnotation> annotations;
};

/// Reads the three JSONL inputs. An empty `assessment_file` skips
/// assessments. Errors carry the offending file and line.
LoadedCorpus load_corpus(const std::string& caption_file, const std::string& reference_file,
                         const std::string& assessment_file, DatasetTag tag = DatasetTag::SA);

/// Writes the JSONL inputs in id order; `load_corpus` reads them back equal.
void write_corpus(const Corpus& corpus, const std::vector<RawAnnotation>& annotations,
                  const std::string& caption_file, const std::string& reference_file,
                  const std::string& assessment_file);

struct FilterThresholds {
  double human_floor = 50.0;
  double degraded_ceiling = 50.0;
};

struct FilterResult {
  std::vector<RawAnnotation> kept;
  std::vector<std::string> removed_annotators;
  Warnings warnings;
};

/// Drops every row of annotators whose mean on human-control items is below
/// the floor or whose mean on degraded-control items is above the ceiling.
/// Control rows never appear in the output.
FilterResult filter_annotators(const std::vector<RawAnnotation>& annotations,
                               FilterThresholds thresholds = {});

struct ZScores {
  /// Aligned with the input rows.
  std::vector<double> values;
  Warnings warnings;
};

/// Per-annotator standardization with the sample (n - 1) standard deviation.
/// Annotators with zero spread (or a single row) get 0 and a warning.
ZScores zscore_by_annotator(const std::vector<RawAnnotation>& annotations);

struct StandardizeOptions {
  int min_annotations = 15;
  bool relax_min_annotations = false;
};

/// SA: exactly one annotation per cell, entry = its z-score.
/// MA: entry = mean z-score of the cell's annotations, at least
/// `min_annotations` of them unless relaxed. Control rows are ignored.
AssessmentMatrix standardize(const std::vector<RawAnnotation>& annotations, AssessmentMode mode,
                             StandardizeOptions options = {});

struct YearSplit {
  Corpus train_corpus;
  AssessmentMatrix train_matrix;
  Corpus test_corpus;
  AssessmentMatrix test_matrix;
  std::string held_out_year;
  /// Train captions removed because the same text occurs in the test year.
  std::size_t excluded = 0;
};

YearSplit leave_one_year_out(const Corpus& corpus, const AssessmentMatrix& matrix,
                             const std::string& year);

/// Restriction of corpus and matrix to a set of videos.
std::pair<Corpus, AssessmentMatrix> restrict_to_videos(const Corpus& corpus,
                                                       const AssessmentMatrix& matrix,
                                                       const std::set<std::string>& videos);

/// Seeded partition of the videos into k folds of near-equal size.
std::vector<std::set<std::string>> video_folds(const Corpus& corpus, int k, std::uint64_t seed);

struct SyntheticOptions {
  int n_videos = 200;
  int n_systems = 8;
  int n_refs = 2;
  double quality_spread = 0.6;
  std::uint64_t seed = 7;
  int n_years = 5;
  /// 1 produces an SA-style set, >= 15 an MA-style set.
  int annotations_per_item = 1;
  /// 0 picks a pool size from the item count.
  int n_annotators = 0;
  /// Planted unreliable annotators (score everything low and at random).
  int n_bad_annotators = 2;
  int controls_per_annotator = 4;
};

struct SyntheticCorpus {
  Corpus corpus;
  std::vector<RawAnnotation> annotations;
  /// Latent quality level of each system.
  std::map<std::string, double> system_quality;
  std::set<std::string> bad_annotators;
};

/// Deterministic corpus of template captions. Each system has a latent
/// quality; a candidate keeps each scene word with that probability and
/// human scores are a noisy function of the scene words it recovers.
SyntheticCorpus generate_synthetic(const SyntheticOptions& options);

}  // namespace capeval
