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
#include <string_view>
#include <vector>

namespace capeval {

/// Lowercased word tokens of a caption, plus the text they came from.
struct TokenSequence {
  std::vector<std::string> tokens;
  std::string source_text;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  /// Tokens joined by single spaces.
  std::string joined() const;
};

using NGram = std::vector<std::string>;

/// Multiset of contiguous n-grams of one order.
struct NGramBag {
  int n = 1;
  std::map<NGram, int> counts;

  /// Sum of all multiplicities.
  long total() const;
  int count(const NGram& gram) const;
};

using StopwordList = std::set<std::string, std::less<>>;

/// Lowercases, splits on whitespace and strips the characters .,;:!?"'()
/// from both ends of each token. Empty tokens are dropped.
TokenSequence tokenize(std::string_view text);

/// Wraps pre-split tokens without re-tokenizing.
TokenSequence from_tokens(std::vector<std::string> tokens);

/// All contiguous n-grams with multiplicity. Throws ValidationError for n < 1.
NGramBag ngrams(const TokenSequence& seq, int n);
NGramBag ngrams(const std::vector<std::string>& tokens, int n);

/// Porter (1980) suffix-stripping stemmer.
std::string stem(std::string_view token);

/// Fisher-Yates permutation of the tokens driven by a generator seeded with
/// `seed`. The source text is rebuilt from the shuffled tokens.
TokenSequence shuffle_words(const TokenSequence& seq, std::uint64_t seed);

/// Tokens not in `stopwords`, order preserved.
TokenSequence remove_stopwords(const TokenSequence& seq, const StopwordList& stopwords);
std::map<std::string, long> remove_stopwords(const std::map<std::string, long>& frequencies,
                                             const StopwordList& stopwords);

/// The stop-word list shipped in data/stopwords.txt, compiled in.
const StopwordList& default_stopwords();

/// One lowercase word per line; blank lines and lines starting with '#' skipped.
StopwordList load_stopwords(const std::string& path);

}  // namespace capeval
