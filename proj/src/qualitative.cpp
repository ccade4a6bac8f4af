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


#include "capeval/qualitative.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "capeval/metaeval.hpp"

namespace capeval {
namespace {

constexpr std::size_t kMaxSpiralSteps = 2'000'000;

double round2(double v) {
  const double r = std::round(v * 100.0) / 100.0;
  return r == 0.0 ? 0.0 : r;  // no negative zero
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

bool collides(const PlacedWord& a, const PlacedWord& b, double margin) {
  return a.x - a.width / 2 < b.x + b.width / 2 + margin &&
         b.x - b.width / 2 < a.x + a.width / 2 + margin &&
         a.y - a.height / 2 < b.y + b.height / 2 + margin &&
         b.y - b.height / 2 < a.y + a.height / 2 + margin;
}

}  // namespace

TopPairs top_pairs(const ScoreMatrix& scores, const Corpus& corpus, std::size_t k) {
  if (k == 0) throw ValidationError("top_pairs: k must be at least 1");
  std::vector<std::pair<const ScoreKey*, double>> order;
  order.reserve(scores.entries.size());
  for (const auto& [key, value] : scores.entries) order.emplace_back(&key, value);
  // Map order already gives (video, ref, system) order, so a stable sort on score keeps the tie rule.
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  TopPairs out;
  if (order.size() < k) {
    out.warnings.push_back("top_pairs: only " + std::to_string(order.size()) +
                           " scored pairs, fewer than k = " + std::to_string(k));
  }
  order.resize(std::min(k, order.size()));
  for (const auto& [key, value] : order) {
    ScoredPair p;
    p.key = *key;
    p.score = value;
    auto cand = corpus.candidates.find(CellKey{key->video_id, key->system_id});
    if (cand == corpus.candidates.end()) {
      throw ValidationError("top_pairs: score for unknown caption " + key->label());
    }
    p.candidate = cand->second;
    const auto& refs = corpus.references_of(key->video_id);
    if (key->ref_id) {
      auto it = std::find_if(refs.begin(), refs.end(),
                             [&](const Reference& r) { return r.ref_id == *key->ref_id; });
      if (it == refs.end()) throw ValidationError("top_pairs: unknown reference " + key->label());
      p.reference = it->text;
    } else {
      for (std::size_t i = 0; i < refs.size(); ++i) {
        if (i > 0) p.reference += ' ';
        p.reference += refs[i].text;
      }
    }
    out.pairs.push_back(std::move(p));
  }
  return out;
}

const char* to_string(PairSide side) {
  switch (side) {
    case PairSide::Candidate: return "candidate";
    case PairSide::Reference: return "reference";
    case PairSide::Both: return "both";
  }
  return "both";
}

PairSide parse_pair_side(const std::string& text) {
  if (text == "candidate") return PairSide::Candidate;
  if (text == "reference") return PairSide::Reference;
  if (text == "both") return PairSide::Both;
  throw ValidationError("unknown side '" + text + "' (expected candidate, reference or both)");
}

long FrequencyTable::total() const {
  long t = 0;
  for (const auto& [word, count] : entries) t += count;
  return t;
}

FrequencyTable word_frequencies(const std::vector<ScoredPair>& pairs, const StopwordList& stopwords,
                                PairSide side) {
  std::map<std::string, long> counts;
  auto add = [&](const std::string& text) {
    std::istringstream in(text);
    std::string word;
    while (in >> word) {
      word = lower(word);
      if (!stopwords.contains(word)) ++counts[word];
    }
  };
  for (const auto& p : pairs) {
    if (side != PairSide::Reference) add(p.candidate);
    if (side != PairSide::Candidate) add(p.reference);
  }
  FrequencyTable table;
  table.entries.assign(counts.begin(), counts.end());
  std::stable_sort(table.entries.begin(), table.entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return table;
}

std::string format_frequency_tsv(const FrequencyTable& table) {
  std::ostringstream out;
  out << "word\tcount\n";
  for (const auto& [word, count] : table.entries) out << word << '\t' << count << '\n';
  return out.str();
}

double estimate_text_width(std::string_view word, double font_size) {
  double em = 0.0;
  for (unsigned char c : word) {
    if (std::string_view("ijltfr'.,: ").find(static_cast<char>(c)) != std::string_view::npos) {
      em += kNarrowCharWidth;
    } else if (c == 'm' || c == 'w') {
      em += kWideCharWidth;
    } else if (std::isupper(c) != 0) {
      em += kUpperCharWidth;
    } else {
      em += kDefaultCharWidth;
    }
  }
  return em * font_size;
}

std::vector<PlacedWord> layout_cloud(const FrequencyTable& table, const CloudOptions& options) {
  if (table.entries.empty()) throw ValidationError("render_cloud: empty frequency table");
  if (!(options.max_font_size > 0.0) || !(options.spiral_step > 0.0) ||
      !(options.angle_step > 0.0) || options.margin < 0.0) {
    throw ValidationError("render_cloud: invalid cloud options");
  }
  long max_count = 0;
  for (const auto& [word, count] : table.entries) max_count = std::max(max_count, count);
  if (max_count <= 0) throw ValidationError("render_cloud: counts must be positive");

  std::vector<PlacedWord> placed;
  const std::size_t n = std::min(options.max_words, table.entries.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [word, count] = table.entries[i];
    PlacedWord w;
    w.word = word;
    w.count = count;
    w.font_size = round2(options.max_font_size * static_cast<double>(count) /
                         static_cast<double>(max_count));
    w.width = estimate_text_width(word, w.font_size);
    w.height = kLineHeight * w.font_size;
    bool ok = false;
    for (std::size_t step = 0; step < kMaxSpiralSteps && !ok; ++step) {
      const double theta = options.angle_step * static_cast<double>(step);
      const double r = options.spiral_step * theta / (2.0 * std::numbers::pi);
      w.x = round2(r * std::cos(theta));
      w.y = round2(r * std::sin(theta));
      ok = std::none_of(placed.begin(), placed.end(),
                        [&](const PlacedWord& p) { return collides(w, p, options.margin); });
    }
    if (!ok) throw Error("render_cloud: no free position found for '" + word + "'");
    placed.push_back(std::move(w));
  }
  return placed;
}

std::string render_cloud(const FrequencyTable& table, const CloudOptions& options) {
  const std::vector<PlacedWord> words = layout_cloud(table, options);
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  for (const auto& w : words) {
    x0 = std::min(x0, w.x - w.width / 2);
    x1 = std::max(x1, w.x + w.width / 2);
    y0 = std::min(y0, w.y - w.height / 2);
    y1 = std::max(y1, w.y + w.height / 2);
  }
  const double pad = 2.0 + options.margin;
  x0 -= pad;
  y0 -= pad;
  x1 += pad;
  y1 += pad;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_number(x1 - x0, 2)
      << "\" height=\"" << format_number(y1 - y0, 2) << "\" viewBox=\"" << format_number(x0, 2)
      << ' ' << format_number(y0, 2) << ' ' << format_number(x1 - x0, 2) << ' '
      << format_number(y1 - y0, 2) << "\">\n";
  if (!table.metric.empty()) out << "  <title>" << xml_escape(table.metric) << "</title>\n";
  out << "  <g font-family=\"sans-serif\" text-anchor=\"middle\" dominant-baseline=\"central\">\n";
  for (const auto& w : words) {
    out << "    <text x=\"" << format_number(w.x, 2) << "\" y=\"" << format_number(w.y, 2)
        << "\" font-size=\"" << format_number(w.font_size, 2) << "\" data-count=\"" << w.count
        << "\">" << xml_escape(w.word) << "</text>\n";
  }
  out << "  </g>\n</svg>\n";
  return out.str();
}

void render_cloud(const FrequencyTable& table, const std::string& path,
                  const CloudOptions& options) {
  const std::string svg = render_cloud(table, options);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path);
  out << svg;
  if (!out) throw Error("write failed: " + path);
}

}  // namespace capeval
