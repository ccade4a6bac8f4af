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
#include <array>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "capeval/corpus.hpp"

namespace capeval {
namespace {

enum Slot { kAdjective, kSubject, kVerb, kObject, kPlace, kSlotCount };

constexpr std::array<std::string_view, 10> kSubjects = {
    "man", "woman", "boy", "girl", "dog", "cat", "child", "player", "chef", "dancer"};
constexpr std::array<std::string_view, 8> kAdjectives = {
    "young", "old", "white", "black", "tall", "small", "blonde", "smiling"};
constexpr std::array<std::string_view, 10> kVerbs = {
    "talking", "dancing", "holding", "running", "walking",
    "playing", "cooking", "singing", "riding",  "jumping"};
constexpr std::array<std::string_view, 10> kObjects = {
    "ball", "guitar", "phone", "microphone", "bike", "shirt", "cup", "book", "camera", "sign"};
constexpr std::array<std::string_view, 10> kPlaces = {
    "room", "kitchen", "street", "park", "stage", "field", "beach", "car", "office", "garden"};

// Human-judged importance of each scene word.
constexpr std::array<double, kSlotCount> kSlotWeight = {0.10, 0.25, 0.30, 0.20, 0.15};
// Credit for an omitted (rather than wrong) word.
constexpr double kOmittedCredit = 0.3;

// Placeholders: "#A" adjective, "#S" subject, "#V" verb, "#O" object, "#P" place.
const std::vector<std::vector<std::string_view>>& templates() {
  static const std::vector<std::vector<std::string_view>> t = {
      {"a", "#A", "#S", "is", "#V", "a", "#O", "in", "the", "#P"},
      {"a", "#A", "#S", "is", "#V", "a", "#O", "in", "a", "#P"},
      {"in", "a", "#P", "a", "#A", "#S", "is", "#V", "a", "#O"},
      {"there", "is", "a", "#A", "#S", "#V", "a", "#O", "in", "the", "#P"},
      {"a", "#S", "that", "is", "#A", "is", "#V", "a", "#O", "at", "the", "#P"},
      {"the", "#A", "#S", "#V", "a", "#O", "inside", "the", "#P"},
  };
  return t;
}

std::string_view pick(Rng& rng, Slot slot) {
  switch (slot) {
    case kAdjective: return kAdjectives[rng.below(kAdjectives.size())];
    case kSubject: return kSubjects[rng.below(kSubjects.size())];
    case kVerb: return kVerbs[rng.below(kVerbs.size())];
    case kObject: return kObjects[rng.below(kObjects.size())];
    case kPlace: return kPlaces[rng.below(kPlaces.size())];
    default: return {};
  }
}

std::string_view pick_other(Rng& rng, Slot slot, std::string_view avoid) {
  std::string_view w = pick(rng, slot);
  while (w == avoid) w = pick(rng, slot);
  return w;
}

using Scene = std::array<std::string_view, kSlotCount>;
// Empty string_view = slot omitted.
using Filled = std::array<std::string_view, kSlotCount>;

int slot_of(std::string_view placeholder) {
  switch (placeholder[1]) {
    case 'A': return kAdjective;
    case 'S': return kSubject;
    case 'V': return kVerb;
    case 'O': return kObject;
    case 'P': return kPlace;
    default: return -1;
  }
}

std::string render(const std::vector<std::string_view>& tmpl, const Filled& words) {
  std::vector<std::string_view> out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    std::string_view tok = tmpl[i];
    if (tok.size() == 2 && tok[0] == '#') {
      const int s = slot_of(tok);
      if (words[s].empty()) {
        if (s == kAdjective && out.size() >= 2 && out.back() == "is" && out[out.size() - 2] == "that") {
          out.resize(out.size() - 2);
        }
        // Drop the preposition phrase head along with an omitted place.
        if (s == kPlace && !out.empty() && (out.back() == "the" || out.back() == "a")) {
          out.pop_back();
          if (!out.empty() && (out.back() == "in" || out.back() == "at" || out.back() == "inside")) {
            out.pop_back();
          }
        }
        continue;
      }
      out.push_back(words[s]);
    } else {
      out.push_back(tok);
    }
  }
  std::string text;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i) text += ' ';
    text += out[i];
  }
  return text;
}

std::string numbered(const char* prefix, int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, value);
  return buf;
}

double clamp_score(double x) { return std::clamp(x, 0.0, 100.0); }

// Rounded to 0.01 so the JSONL form is short and round-trips exactly.
double round_score(double x) { return static_cast<double>(static_cast<long>(x * 100.0 + 0.5)) / 100.0; }

struct Annotator {
  std::string id;
  double bias;
  double scale;
  bool bad;
};

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticOptions& o) {
  if (o.n_videos < 1 || o.n_systems < 1 || o.n_refs < 1 || o.n_years < 1 ||
      o.annotations_per_item < 1 || o.n_bad_annotators < 0 || o.controls_per_annotator < 0) {
    throw ValidationError("synthetic corpus counts must be >= 1");
  }
  if (o.n_refs > static_cast<int>(kMaxReferencesPerVideo)) {
    throw ValidationError("at most 5 references per video");
  }
  if (o.quality_spread < 0.0) throw ValidationError("quality_spread must be >= 0");

  Rng rng(o.seed);
  SyntheticCorpus out;
  Corpus& corpus = out.corpus;
  corpus.tag = DatasetTag::Synthetic;

  // System qualities: evenly spaced around 0.5, assigned in a seeded order.
  std::vector<std::string> systems;
  for (int s = 0; s < o.n_systems; ++s) systems.push_back(numbered("sys", s + 1, 2));
  std::vector<double> levels;
  for (int s = 0; s < o.n_systems; ++s) {
    const double t = o.n_systems == 1 ? 0.5 : static_cast<double>(s) / (o.n_systems - 1);
    levels.push_back(std::clamp(0.5 + o.quality_spread * (t - 0.5), 0.02, 0.98));
  }
  for (std::size_t i = levels.size(); i > 1; --i) std::swap(levels[i - 1], levels[rng.below(i)]);
  for (int s = 0; s < o.n_systems; ++s) out.system_quality[systems[s]] = levels[s];

  const auto& tmpls = templates();
  const int width = o.n_videos >= 10000 ? 6 : 4;
  std::map<CellKey, double> latent;

  for (int v = 0; v < o.n_videos; ++v) {
    const std::string video = numbered("v", v + 1, width);
    const int year_index = static_cast<int>(static_cast<long>(v) * o.n_years / o.n_videos);
    corpus.video_years.emplace(video, std::to_string(2016 + year_index));

    Scene scene;
    for (int s = 0; s < kSlotCount; ++s) scene[s] = pick(rng, static_cast<Slot>(s));

    std::vector<std::size_t> order(tmpls.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    auto& refs = corpus.references[video];
    for (int r = 0; r < o.n_refs; ++r) {
      Filled words = scene;
      if (rng.bernoulli(0.3)) words[kAdjective] = {};
      refs.push_back({numbered("ref", r + 1, 1), render(tmpls[order[static_cast<std::size_t>(r) % order.size()]], words)});
    }

    for (int s = 0; s < o.n_systems; ++s) {
      const double q = std::clamp(levels[s] + 0.15 * rng.normal(), 0.02, 0.98);
      Filled words{};
      double credit = 0.0;
      for (int slot = 0; slot < kSlotCount; ++slot) {
        if (rng.bernoulli(q)) {
          words[slot] = scene[slot];
          credit += kSlotWeight[slot];
        } else if ((slot == kAdjective || slot == kPlace) && rng.bernoulli(0.5)) {
          credit += kOmittedCredit * kSlotWeight[slot];
        } else {
          words[slot] = pick_other(rng, static_cast<Slot>(slot), scene[slot]);
        }
      }
      const std::size_t preferred = static_cast<std::size_t>(s) % tmpls.size();
      const std::size_t t = rng.bernoulli(0.7) ? preferred : rng.below(tmpls.size());
      corpus.candidates.emplace(CellKey{video, systems[s]}, render(tmpls[t], words));
      latent.emplace(CellKey{video, systems[s]}, credit);
    }
  }

  // Annotator pool.
  const long items = static_cast<long>(latent.size());
  int n_good = o.n_annotators > 0
                   ? o.n_annotators
                   : static_cast<int>(std::max<long>(o.annotations_per_item + 3,
                                                     items * o.annotations_per_item / 60));
  n_good = std::max(n_good, o.annotations_per_item);
  std::vector<Annotator> annotators;
  for (int a = 0; a < n_good + o.n_bad_annotators; ++a) {
    Annotator ann;
    ann.id = numbered("w", a + 1, 3);
    ann.bad = a >= n_good;
    ann.bias = rng.uniform(-10.0, 10.0);
    ann.scale = rng.uniform(0.7, 1.0);
    if (ann.bad) out.bad_annotators.insert(ann.id);
    annotators.push_back(std::move(ann));
  }

  auto rate = [&](const Annotator& ann, double credit) {
    if (ann.bad) return round_score(rng.uniform(0.0, 60.0));
    return round_score(clamp_score(ann.bias + ann.scale * 100.0 * credit + 10.0 * rng.normal()));
  };

  std::vector<std::size_t> pool(static_cast<std::size_t>(n_good));
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  for (const auto& [key, credit] : latent) {
    // Partial Fisher-Yates draws distinct annotators for the item.
    for (int k = 0; k < o.annotations_per_item; ++k) {
      const std::size_t j = static_cast<std::size_t>(k) + rng.below(pool.size() - static_cast<std::size_t>(k));
      std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
      const Annotator& ann = annotators[pool[static_cast<std::size_t>(k)]];
      out.annotations.push_back({key.first, key.second, ann.id, rate(ann, credit), ControlKind::System});
    }
  }

  // Unreliable annotators add extra rows on top of full coverage.
  std::vector<CellKey> keys;
  for (const auto& [key, credit] : latent) keys.push_back(key);
  const long per_bad = std::max<long>(1, items * o.annotations_per_item / std::max(1, n_good));
  for (const auto& ann : annotators) {
    if (!ann.bad) continue;
    for (long i = 0; i < per_bad; ++i) {
      const CellKey& key = keys[rng.below(keys.size())];
      out.annotations.push_back({key.first, key.second, ann.id, rate(ann, latent[key]), ControlKind::System});
    }
  }

  // Control items: human references score full credit, degraded references
  // keep at most one scene word.
  for (const auto& ann : annotators) {
    for (int c = 0; c < o.controls_per_annotator; ++c) {
      const auto v = rng.below(static_cast<std::uint64_t>(o.n_videos));
      const std::string video = numbered("v", static_cast<int>(v) + 1, width);
      out.annotations.push_back({video, "_human", ann.id, rate(ann, 1.0), ControlKind::HumanControl});
      const int keep = static_cast<int>(rng.below(kSlotCount));
      const double degraded_credit = rng.bernoulli(0.5) ? kSlotWeight[keep] : 0.0;
      out.annotations.push_back(
          {video, "_degraded", ann.id, rate(ann, degraded_credit), ControlKind::DegradedControl});
    }
  }
  return out;
}

}  // namespace capeval
