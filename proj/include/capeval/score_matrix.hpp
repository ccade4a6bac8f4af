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

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capeval/corpus.hpp"

namespace capeval {

/// Identifies one score: a (video, system) caption, optionally against a
/// single reference. An empty ref_id means the score used all references.
struct ScoreKey {
  std::string video_id;
  std::optional<std::string> ref_id;
  std::string system_id;

  auto operator<=>(const ScoreKey&) const = default;
  bool operator==(const ScoreKey&) const = default;
  std::string label() const;
};

/// Scores of one metric, ordered by (video, ref, system).
struct ScoreMatrix {
  std::string metric;
  std::map<ScoreKey, double> entries;

  /// True when entries carry reference ids (one score per reference).
  bool per_reference() const;
  std::size_t size() const { return entries.size(); }

  /// Mean over references for per-reference matrices; identity otherwise.
  std::map<CellKey, double> caption_means() const;
};

/// One JSON object per entry: {"metric","video_id","ref_id","system_id","score"}.
void write_scores_jsonl(const std::vector<ScoreMatrix>& matrices, const std::string& path);

/// Groups rows by metric. Throws ParseError on malformed rows and
/// ValidationError on duplicate keys or mixed reference scopes in one metric.
std::vector<ScoreMatrix> read_scores_jsonl(const std::string& path);

/// Checks ids against the corpus and full coverage: every candidate must have
/// a score (against every reference for per-reference matrices). Unknown ids
/// raise ValidationError, holes raise CoverageError listing them.
void validate_coverage(const ScoreMatrix& matrix, const Corpus& corpus);

}  // namespace capeval
