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
#include <map>

#include "capeval/corpus.hpp"
#include "doctest.h"
#include "temp_dir.hpp"

using namespace capeval;

namespace {

RawAnnotation row(std::string video, std::string system, std::string annotator, double score,
                  ControlKind kind = ControlKind::System) {
  return RawAnnotation{std::move(video), std::move(system), std::move(annotator), score, kind};
}

void check_standardized(const std::vector<RawAnnotation>& rows, const ZScores& z) {
  std::map<std::string, std::vector<double>> per;
  for (std::size_t i = 0; i < rows.size(); ++i) per[rows[i].annotator_id].push_back(z.values[i]);
  for (const auto& [annotator, v] : per) {
    if (v.size() < 2) continue;
    double mean = 0;
    for (double x : v) mean += x;
    mean /= double(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / double(v.size() - 1));
    CHECK(std::abs(mean) < 1e-9);
    if (sd > 0) CHECK(std::abs(sd - 1.0) < 1e-9);
  }
}

}  // namespace

TEST_CASE("load_corpus reads a minimal corpus") {
  testfs::TempDir dir("load_min");
  testfs::write(dir.file("c.jsonl"),
                R"({"video_id":"v1","system_id":"s1","year":"2016","caption":"a man talking","extra":1})"
                "\n");
  testfs::write(dir.file("r.jsonl"),
                R"({"video_id":"v1","ref_id":"r1","year":"2016","text":"a man is talking"})" "\n");
  testfs::write(dir.file("a.jsonl"),
                R"({"video_id":"v1","system_id":"s1","annotator_id":"w1","raw_score":70,"control":"system"})"
                "\n");
  const LoadedCorpus lc = load_corpus(dir.file("c.jsonl"), dir.file("r.jsonl"), dir.file("a.jsonl"));
  CHECK(lc.corpus.num_videos() == 1);
  CHECK(lc.corpus.max_references() == 1);
  CHECK(lc.corpus.systems().size() == 1);
  REQUIRE(lc.annotations.size() == 1);
  CHECK(lc.annotations[0].raw_score == 70.0);
  CHECK(lc.corpus.year_of("v1") == "2016");
}

TEST_CASE("load_corpus rejects broken inputs with file and line") {
  testfs::TempDir dir("load_bad");
  const std::string caps =
      R"({"video_id":"v1","system_id":"s1","year":"2016","caption":"x"})" "\n";
  const std::string refs = R"({"video_id":"v1","ref_id":"r1","year":"2016","text":"y"})" "\n";
  testfs::write(dir.file("c.jsonl"), caps);
  testfs::write(dir.file("r.jsonl"), refs);

  SUBCASE("dangling video") {
    testfs::write(dir.file("a.jsonl"),
                  "\n" R"({"video_id":"v99","system_id":"s1","annotator_id":"w","raw_score":5,"control":"system"})");
    try {
      load_corpus(dir.file("c.jsonl"), dir.file("r.jsonl"), dir.file("a.jsonl"));
      FAIL("expected an error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("v99") != std::string::npos);
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("score out of range") {
    testfs::write(dir.file("a.jsonl"),
                  R"({"video_id":"v1","system_id":"s1","annotator_id":"w","raw_score":101,"control":"system"})");
    CHECK_THROWS_AS(load_corpus(dir.file("c.jsonl"), dir.file("r.jsonl"), dir.file("a.jsonl")),
                    ParseError);
  }
  SUBCASE("duplicate caption") {
    testfs::write(dir.file("c.jsonl"), caps + caps);
    CHECK_THROWS_AS(load_corpus(dir.file("c.jsonl"), dir.file("r.jsonl"), ""), ParseError);
  }
  SUBCASE("six references") {
    std::string many;
    for (int i = 0; i < 6; ++i) {
      many += R"({"video_id":"v1","ref_id":"r)" + std::to_string(i) +
              R"(","year":"2016","text":"y"})" "\n";
    }
    testfs::write(dir.file("r.jsonl"), many);
    CHECK_THROWS_AS(load_corpus(dir.file("c.jsonl"), dir.file("r.jsonl"), ""), ParseError);
  }
  SUBCASE("malformed json") {
    testfs::write(dir.file("c.jsonl"), "{not json\n");
    CHECK_THROWS_AS(load_corpus(dir.file("c.jsonl"), dir.file("r.jsonl"), ""), ParseError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_corpus(dir.file("nope.jsonl"), dir.file("r.jsonl"), ""), Error);
  }
  SUBCASE("video without references") {
    testfs::write(dir.file("c.jsonl"),
                  caps + R"({"video_id":"v2","system_id":"s1","year":"2016","caption":"x"})" "\n");
    CHECK_THROWS_AS(load_corpus(dir.file("c.jsonl"), dir.file("r.jsonl"), ""), ValidationError);
  }
}

TEST_CASE("synthetic corpus round-trips through the JSONL files") {
  SyntheticOptions o;
  o.n_videos = 20;
  o.n_refs = 3;
  const SyntheticCorpus s = generate_synthetic(o);
  testfs::TempDir dir("roundtrip");
  write_corpus(s.corpus, s.annotations, dir.file("c"), dir.file("r"), dir.file("a"));
  const LoadedCorpus lc = load_corpus(dir.file("c"), dir.file("r"), dir.file("a"), DatasetTag::Synthetic);
  CHECK(lc.corpus == s.corpus);
  CHECK(lc.annotations == s.annotations);
}

TEST_CASE("synthetic generator is deterministic and ordered by quality") {
  SyntheticOptions o;
  o.n_videos = 40;
  const SyntheticCorpus a = generate_synthetic(o);
  const SyntheticCorpus b = generate_synthetic(o);
  CHECK(a.corpus == b.corpus);
  CHECK(a.annotations == b.annotations);

  o.n_refs = 5;
  const SyntheticCorpus five = generate_synthetic(o);
  for (const auto& [video, refs] : five.corpus.references) CHECK(refs.size() == 5);

  SyntheticOptions two;
  two.n_videos = 100;
  two.n_systems = 2;
  two.quality_spread = 0.9;
  const SyntheticCorpus s = generate_synthetic(two);
  std::map<std::string, std::pair<double, int>> raw;
  for (const auto& r : s.annotations) {
    if (r.control != ControlKind::System || s.bad_annotators.contains(r.annotator_id)) continue;
    raw[r.system_id].first += r.raw_score;
    raw[r.system_id].second++;
  }
  std::string best = s.system_quality.begin()->first;
  for (const auto& [sys, q] : s.system_quality) {
    if (q > s.system_quality.at(best)) best = sys;
  }
  for (const auto& [sys, acc] : raw) {
    if (sys == best) continue;
    CHECK(acc.first / acc.second < raw[best].first / raw[best].second);
  }
  CHECK_THROWS_AS(generate_synthetic(SyntheticOptions{.n_videos = 0}), ValidationError);
}

TEST_CASE("filter_annotators drops annotators failing controls") {
  std::vector<RawAnnotation> rows = {
      row("v1", "_human", "good", 90, ControlKind::HumanControl),
      row("v1", "_human", "good", 95, ControlKind::HumanControl),
      row("v1", "s1", "good", 40),
      row("v1", "_human", "bad", 10, ControlKind::HumanControl),
      row("v1", "_human", "bad", 20, ControlKind::HumanControl),
      row("v1", "s1", "bad", 40),
      row("v1", "_degraded", "lax", 80, ControlKind::DegradedControl),
      row("v1", "s1", "lax", 40),
      row("v1", "s1", "unchecked", 40),
  };
  const FilterResult r = filter_annotators(rows);
  CHECK(r.removed_annotators == std::vector<std::string>{"bad", "lax"});
  REQUIRE(r.kept.size() == 2);
  CHECK(r.kept[0].annotator_id == "good");
  CHECK(r.kept[1].annotator_id == "unchecked");
  CHECK(r.warnings.size() == 1);
  CHECK_THROWS_AS(filter_annotators(rows, {150, 50}), ValidationError);
}

TEST_CASE("filter_annotators removes exactly the planted bad annotators") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RawAnnotation> rows;
    std::set<std::string> planted;
    for (int a = 0; a < 5; ++a) {
      const std::string id = "w" + std::to_string(a);
      const bool bad = a < 2;
      if (bad) planted.insert(id);
      for (int k = 0; k < 4; ++k) {
        rows.push_back(row("v", "_human", id, bad ? rng.uniform(0, 45) : rng.uniform(60, 100),
                           ControlKind::HumanControl));
        rows.push_back(row("v", "_degraded", id, bad ? rng.uniform(55, 100) : rng.uniform(0, 40),
                           ControlKind::DegradedControl));
        rows.push_back(row("v" + std::to_string(k), "s", id, rng.uniform(0, 100)));
      }
    }
    const FilterResult r = filter_annotators(rows);
    CHECK(std::set<std::string>(r.removed_annotators.begin(), r.removed_annotators.end()) == planted);
    for (const auto& k : r.kept) CHECK_FALSE(planted.contains(k.annotator_id));
    CHECK(r.kept.size() == 12);
  }
}

TEST_CASE("z-scores use the sample standard deviation") {
  const std::vector<RawAnnotation> rows = {row("v1", "s", "w", 0), row("v2", "s", "w", 50),
                                           row("v3", "s", "w", 100)};
  const ZScores z = zscore_by_annotator(rows);
  CHECK(z.values[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(z.values[1] == doctest::Approx(0.0));
  CHECK(z.values[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(z.warnings.empty());

  const ZScores flat = zscore_by_annotator({row("v1", "s", "w", 70), row("v2", "s", "w", 70),
                                            row("v3", "s", "w", 70)});
  CHECK(flat.values == std::vector<double>{0, 0, 0});
  CHECK(flat.warnings.size() == 1);
}

TEST_CASE("z-score properties on random annotators") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RawAnnotation> rows;
    const int annotators = 1 + static_cast<int>(rng.below(6));
    for (int a = 0; a < annotators; ++a) {
      const int n = 2 + static_cast<int>(rng.below(30));
      for (int i = 0; i < n; ++i) {
        rows.push_back(row("v" + std::to_string(i), "s", "w" + std::to_string(a),
                           std::round(rng.uniform(0, 100) * 100) / 100));
      }
    }
    const ZScores z = zscore_by_annotator(rows);
    check_standardized(rows, z);

    // Re-standardizing standardized data changes nothing.
    std::vector<RawAnnotation> again = rows;
    for (std::size_t i = 0; i < rows.size(); ++i) again[i].raw_score = z.values[i];
    const ZScores z2 = zscore_by_annotator(again);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(std::abs(z2.values[i] - z.values[i]) < 1e-9);
  }
}

TEST_CASE("standardize builds SA and MA matrices") {
  SUBCASE("SA") {
    const std::vector<RawAnnotation> rows = {row("v1", "s1", "w", 0), row("v1", "s2", "w", 50),
                                             row("v2", "s1", "w", 100),
                                             row("v1", "_human", "w", 100, ControlKind::HumanControl)};
    const AssessmentMatrix m = standardize(rows, AssessmentMode::SA);
    CHECK(m.entries.size() == 3);
    CHECK(m.at("v1", "s1") == doctest::Approx(-1.0));
    CHECK(m.at("v2", "s1") == doctest::Approx(1.0));
    CHECK_FALSE(m.contains("v1", "_human"));
    std::vector<RawAnnotation> doubled = rows;
    doubled.push_back(row("v1", "s1", "w2", 10));
    CHECK_THROWS_AS(standardize(doubled, AssessmentMode::SA), ValidationError);
  }
  SUBCASE("MA") {
    // Fifteen annotators; each scores the target cell and two anchors so the
    // target z-score is exactly 0.5 for everyone.
    std::vector<RawAnnotation> rows;
    for (int a = 0; a < 15; ++a) {
      const std::string id = "w" + std::to_string(a);
      const double base = 10.0 + a;
      rows.push_back(row("v1", "s1", id, base + 0.5 * 10));
      rows.push_back(row("v2", "s1", id, base - 10));
      rows.push_back(row("v3", "s1", id, base + 10 - 0.5 * 10));
    }
    AssessmentMatrix m = standardize(rows, AssessmentMode::MA);
    CHECK(m.annotation_counts.at({"v1", "s1"}) == 15);
    const ZScores z = zscore_by_annotator(rows);
    CHECK(m.at("v1", "s1") == doctest::Approx(z.values[0]).epsilon(1e-12));

    rows.resize(rows.size() - 3);
    CHECK_THROWS_AS(standardize(rows, AssessmentMode::MA), CoverageError);
    StandardizeOptions relaxed;
    relaxed.relax_min_annotations = true;
    m = standardize(rows, AssessmentMode::MA, relaxed);
    CHECK(m.annotation_counts.at({"v1", "s1"}) == 14);
    CHECK_FALSE(m.warnings.empty());
  }
}

TEST_CASE("MA mean of constant z-scores") {
  std::vector<RawAnnotation> rows;
  for (int a = 0; a < 15; ++a) {
    const std::string id = "w" + std::to_string(a);
    // raw [x, x+20, x+10]: the middle value has z = 0, the target is +1.
    rows.push_back(row("v1", "s1", id, 40 + a));
    rows.push_back(row("v2", "s1", id, 60 + a));
    rows.push_back(row("v3", "s1", id, 50 + a));
  }
  const AssessmentMatrix m = standardize(rows, AssessmentMode::MA);
  CHECK(m.at("v2", "s1") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.at("v3", "s1") == doctest::Approx(0.0));
}

TEST_CASE("leave_one_year_out splits by year and removes shared captions") {
  Corpus c;
  c.video_years = {{"v1", "A"}, {"v2", "B"}};
  c.references = {{"v1", {{"r1", "x"}}}, {"v2", {{"r1", "y"}}}};
  c.candidates = {{{"v1", "s1"}, "a man is talking"},
                  {{"v1", "s2"}, "a dog"},
                  {{"v2", "s1"}, "a man is talking"},
                  {{"v2", "s2"}, "a cat"}};
  AssessmentMatrix m;
  for (const auto& [key, text] : c.candidates) m.entries[key] = 0.0;
  const YearSplit split = leave_one_year_out(c, m, "B");
  CHECK(split.test_corpus.candidates.size() == 2);
  CHECK(split.train_corpus.candidates.size() == 1);
  CHECK(split.train_corpus.candidates.contains({"v1", "s2"}));
  CHECK(split.excluded == 1);
  CHECK(split.train_matrix.entries.size() == 1);
  CHECK_THROWS_AS(leave_one_year_out(c, m, "Z"), ValidationError);
}

TEST_CASE("leave_one_year_out counts on the synthetic fixture") {
  const SyntheticCorpus s = generate_synthetic(SyntheticOptions{.n_videos = 60});
  const AssessmentMatrix m = standardize(filter_annotators(s.annotations).kept, AssessmentMode::SA);
  for (const auto& year : s.corpus.years()) {
    const YearSplit split = leave_one_year_out(s.corpus, m, year);
    CHECK(split.train_corpus.candidates.size() + split.test_corpus.candidates.size() +
              split.excluded ==
          s.corpus.candidates.size());
    std::set<std::string> test_texts;
    for (const auto& [k, t] : split.test_corpus.candidates) test_texts.insert(t);
    for (const auto& [k, t] : split.train_corpus.candidates) CHECK_FALSE(test_texts.contains(t));
    for (const auto& [k, t] : split.test_corpus.candidates) CHECK(s.corpus.year_of(k.first) == year);
  }
}

TEST_CASE("video folds partition the videos") {
  const SyntheticCorpus s = generate_synthetic(SyntheticOptions{.n_videos = 23});
  const auto folds = video_folds(s.corpus, 5, 3);
  REQUIRE(folds.size() == 5);
  std::set<std::string> all;
  for (const auto& f : folds) {
    CHECK((f.size() == 4 || f.size() == 5));
    all.insert(f.begin(), f.end());
  }
  CHECK(all.size() == 23);
  CHECK(video_folds(s.corpus, 5, 3) == folds);
}
