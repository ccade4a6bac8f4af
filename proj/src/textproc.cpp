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

#include "capeval/textproc.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <utility>

#include "capeval/common.hpp"
#include "stopwords_data.hpp"

namespace capeval {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_edge_punct(char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?':
    case '"': case '\'': case '(': case ')':
      return true;
    default:
      return false;
  }
}

StopwordList parse_stopwords(std::istream& in) {
  StopwordList words;
  std::string line;
  while (std::getline(in, line)) {
    auto first = std::find_if_not(line.begin(), line.end(), is_space);
    auto last = std::find_if_not(line.rbegin(), line.rend(), is_space).base();
    if (first >= last || *first == '#') continue;
    std::string word(first, last);
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.insert(std::move(word));
  }
  return words;
}

}  // namespace

std::string TokenSequence::joined() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

long NGramBag::total() const {
  long sum = 0;
  for (const auto& [gram, c] : counts) sum += c;
  return sum;
}

int NGramBag::count(const NGram& gram) const {
  auto it = counts.find(gram);
  return it == counts.end() ? 0 : it->second;
}

TokenSequence tokenize(std::string_view text) {
  TokenSequence seq;
  seq.source_text = std::string(text);
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    std::size_t lo = i;
    std::size_t hi = j;
    while (lo < hi && is_edge_punct(text[lo])) ++lo;
    while (hi > lo && is_edge_punct(text[hi - 1])) --hi;
    if (lo < hi) {
      std::string token(text.substr(lo, hi - lo));
      std::transform(token.begin(), token.end(), token.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      seq.tokens.push_back(std::move(token));
    }
    i = j;
  }
  return seq;
}

TokenSequence from_tokens(std::vector<std::string> tokens) {
  TokenSequence seq;
  seq.tokens = std::move(tokens);
  seq.source_text = seq.joined();
  return seq;
}

NGramBag ngrams(const std::vector<std::string>& tokens, int n) {
  if (n < 1) throw ValidationError("n-gram order must be >= 1, got " + std::to_string(n));
  NGramBag bag;
  bag.n = n;
  const auto len = tokens.size();
  const auto order = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + order <= len; ++i) {
    ++bag.counts[NGram(tokens.begin() + static_cast<long>(i),
                       tokens.begin() + static_cast<long>(i + order))];
  }
  return bag;
}

NGramBag ngrams(const TokenSequence& seq, int n) { return ngrams(seq.tokens, n); }

TokenSequence shuffle_words(const TokenSequence& seq, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> tokens = seq.tokens;
  for (std::size_t i = tokens.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(tokens[i - 1], tokens[j]);
  }
  return from_tokens(std::move(tokens));
}

TokenSequence remove_stopwords(const TokenSequence& seq, const StopwordList& stopwords) {
  std::vector<std::string> kept;
  kept.reserve(seq.tokens.size());
  for (const auto& t : seq.tokens) {
    if (!stopwords.contains(t)) kept.push_back(t);
  }
  return from_tokens(std::move(kept));
}

std::map<std::string, long> remove_stopwords(const std::map<std::string, long>& frequencies,
                                             const StopwordList& stopwords) {
  std::map<std::string, long> kept;
  for (const auto& [word, count] : frequencies) {
    if (!stopwords.contains(word)) kept.emplace(word, count);
  }
  return kept;
}

const StopwordList& default_stopwords() {
  static const StopwordList words = [] {
    std::istringstream in{std::string(detail::kDefaultStopwords)};
    return parse_stopwords(in);
  }();
  return words;
}

StopwordList load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open stop-word file: " + path);
  return parse_stopwords(in);
}

}  // namespace capeval
