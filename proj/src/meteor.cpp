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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>

#include "capeval/metrics.hpp"

namespace capeval {
namespace {

// Lexicographic objective: more exact matches, then more matches, then fewer chunks.
struct Objective {
  int exact = 0;
  int matches = 0;
  int neg_chunks = 0;

  auto operator<=>(const Objective&) const = default;
};

struct Link {
  int ref;
  bool exact;
  int bit;  // -1 when no other candidate token can claim this position
};

class BudgetExceeded {};

// Alignment search over candidate positions. State: next candidate index,
// the reference position matched to the previous candidate token (or -1),
// and the set of contested reference positions already used.
//
// Two reductions keep it exact: a stem class with one token on each side is
// always matched (adding a free match is lexicographically better), and a
// candidate token may only stay unmatched when its class has more candidate
// than reference tokens (otherwise every optimum matches it).
class AlignmentSearch {
 public:
  AlignmentSearch(std::vector<std::vector<Link>> links, std::vector<bool> may_skip)
      : links_(std::move(links)), may_skip_(std::move(may_skip)) {}

  Objective solve() { return best(0, -1, 0); }

 private:
  struct Key {
    int index;
    int prev;
    std::uint64_t mask;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t h = k.mask * 0x9E3779B97F4A7C15ULL;
      h ^= (static_cast<std::uint64_t>(k.index) << 32) ^ static_cast<std::uint64_t>(k.prev + 1);
      return static_cast<std::size_t>(h ^ (h >> 29));
    }
  };

  Objective best(int i, int prev, std::uint64_t mask) {
    if (i == static_cast<int>(links_.size())) return {};
    const Key key{i, prev, mask};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (memo_.size() >= kMeteorStateBudget) throw BudgetExceeded{};

    Objective result{-1, -1, 0};
    bool any = false;
    if (may_skip_[static_cast<std::size_t>(i)] || links_[static_cast<std::size_t>(i)].empty()) {
      result = best(i + 1, -1, mask);
      any = true;
    }
    for (const Link& link : links_[static_cast<std::size_t>(i)]) {
      if (link.bit >= 0 && (mask >> link.bit) & 1U) continue;
      const std::uint64_t next_mask = link.bit >= 0 ? mask | (std::uint64_t{1} << link.bit) : mask;
      Objective sub = best(i + 1, link.ref, next_mask);
      sub.exact += link.exact ? 1 : 0;
      sub.matches += 1;
      sub.neg_chunks -= (prev >= 0 && prev == link.ref - 1) ? 0 : 1;
      if (!any || sub > result) {
        result = sub;
        any = true;
      }
    }
    if (!any) result = best(i + 1, -1, mask);
    memo_.emplace(key, result);
    return result;
  }

  std::vector<std::vector<Link>> links_;
  std::vector<bool> may_skip_;
  std::unordered_map<Key, Objective, KeyHash> memo_;
};

int count_chunks(std::vector<std::pair<int, int>> pairs) {
  std::sort(pairs.begin(), pairs.end());
  int chunks = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const bool continues = k > 0 && pairs[k].first == pairs[k - 1].first + 1 &&
                           pairs[k].second == pairs[k - 1].second + 1;
    if (!continues) ++chunks;
  }
  return chunks;
}

MeteorAlignment greedy_alignment(const std::vector<std::string>& cand,
                                 const std::vector<std::string>& cand_stems,
                                 const std::vector<std::string>& ref,
                                 const std::vector<std::string>& ref_stems) {
  std::vector<bool> cand_used(cand.size()), ref_used(ref.size());
  std::vector<std::pair<int, int>> pairs;
  MeteorAlignment a;
  for (int stage = 0; stage < 2; ++stage) {
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (cand_used[i]) continue;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (ref_used[j]) continue;
        const bool hit = stage == 0 ? cand[i] == ref[j] : cand_stems[i] == ref_stems[j];
        if (!hit) continue;
        cand_used[i] = ref_used[j] = true;
        pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
        if (stage == 0) ++a.exact_matches;
        break;
      }
    }
  }
  a.matches = static_cast<int>(pairs.size());
  a.chunks = count_chunks(std::move(pairs));
  return a;
}

}  // namespace

MeteorAlignment meteor_align(const std::vector<std::string>& candidate,
                             const std::vector<std::string>& reference) {
  std::vector<std::string> cs, rs;
  cs.reserve(candidate.size());
  rs.reserve(reference.size());
  for (const auto& t : candidate) cs.push_back(stem(t));
  for (const auto& t : reference) rs.push_back(stem(t));

  std::map<std::string, std::pair<int, int>> class_counts;  // stem -> (cand, ref)
  for (const auto& s : cs) ++class_counts[s].first;
  for (const auto& s : rs) ++class_counts[s].second;

  // Reference positions claimable by two or more candidate tokens get a mask bit.
  std::vector<int> bit_of(reference.size(), -1);
  int bits = 0;
  for (std::size_t j = 0; j < reference.size(); ++j) {
    const int c = class_counts[rs[j]].first;
    if (c >= 2) bit_of[j] = bits++;
  }
  if (bits > 64) return greedy_alignment(candidate, cs, reference, rs);

  std::vector<std::vector<Link>> links(candidate.size());
  std::vector<bool> may_skip(candidate.size());
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    const auto [c, r] = class_counts[cs[i]];
    may_skip[i] = c > r;
    for (std::size_t j = 0; j < reference.size(); ++j) {
      if (cs[i] != rs[j]) continue;
      links[i].push_back({static_cast<int>(j), candidate[i] == reference[j], bit_of[j]});
    }
  }

  try {
    AlignmentSearch search(std::move(links), std::move(may_skip));
    const Objective best = search.solve();
    return {best.matches, best.exact, -best.neg_chunks};
  } catch (const BudgetExceeded&) {
    return greedy_alignment(candidate, cs, reference, rs);
  }
}

double meteor_lite(const TokenSequence& candidate, const References& references) {
  if (references.empty()) throw ValidationError("meteor-lite needs at least one reference");
  if (candidate.empty()) return 0.0;
  double best = 0.0;
  for (const auto& r : references) {
    if (r.empty()) continue;
    const MeteorAlignment a = meteor_align(candidate.tokens, r.tokens);
    if (a.matches == 0) continue;
    const double m = a.matches;
    const double p = m / static_cast<double>(candidate.size());
    const double rec = m / static_cast<double>(r.size());
    const double f_mean = 10.0 * p * rec / (rec + 9.0 * p);
    const double frag = static_cast<double>(a.chunks) / m;
    const double penalty = 0.5 * frag * frag * frag;
    best = std::max(best, f_mean * (1.0 - penalty));
  }
  return best;
}

}  // namespace capeval
