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

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "capeval/corpus.hpp"
#include "capeval/score_matrix.hpp"
#include "capeval/textproc.hpp"

namespace capeval {

struct ScoredPair {
  ScoreKey key;
  double score = 0.0;
  std::string candidate;
  /// The scored reference; for all-reference scores, every reference of the
  /// video joined by single spaces.
  std::string reference;
};

struct TopPairs {
  std::vector<ScoredPair> pairs;
  Warnings warnings;
};

/// The k highest scores, ties broken by (video, ref, system) order. Fewer
/// than k entries returns all of them with a warning.
TopPairs top_pairs(const ScoreMatrix& scores, const Corpus& corpus, std::size_t k = 10);

enum class PairSide { Candidate, Reference, Both };

const char* to_string(PairSide side);
PairSide parse_pair_side(const std::string& text);

struct FrequencyTable {
  std::string metric;
  /// Descending count, ties by word.
  std::vector<std::pair<std::string, long>> entries;

  long total() const;
};

/// Splits the chosen side(s) of every pair on whitespace, lowercases, drops
/// stop-words and counts the rest. No other tokenization is applied.
FrequencyTable word_frequencies(const std::vector<ScoredPair>& pairs, const StopwordList& stopwords,
                                PairSide side = PairSide::Both);

std::string format_frequency_tsv(const FrequencyTable& table);

/// Approximate advance widths in em units, by character class.
inline constexpr double kNarrowCharWidth = 0.30;  // i j l t f r ' . , and space
inline constexpr double kWideCharWidth = 0.85;    // m w
inline constexpr double kUpperCharWidth = 0.70;
inline constexpr double kDefaultCharWidth = 0.56;
/// Box height in em units.
inline constexpr double kLineHeight = 1.15;

/// Width of `word` set at `font_size` from the per-character table above.
double estimate_text_width(std::string_view word, double font_size);

struct CloudOptions {
  double max_font_size = 48.0;
  /// Minimum gap between two word boxes.
  double margin = 1.0;
  /// Spiral r = spiral_step * theta / (2 pi) per turn.
  double spiral_step = 2.0;
  double angle_step = 0.05;
  std::size_t max_words = 100;
};

struct PlacedWord {
  std::string word;
  long count = 0;
  double font_size = 0.0;
  /// Box center.
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;
};

/// Greedy Archimedean-spiral placement in table order. The first word sits
/// at the origin; font size is max_font_size * count / max_count.
std::vector<PlacedWord> layout_cloud(const FrequencyTable& table, const CloudOptions& options = {});

/// SVG document with one centered <text> element per placed word.
std::string render_cloud(const FrequencyTable& table, const CloudOptions& options = {});
void render_cloud(const FrequencyTable& table, const std::string& path,
                  const CloudOptions& options);

}  // namespace capeval
