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

#include "capeval/score_matrix.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace capeval {

using json = nlohmann::json;

std::string ScoreKey::label() const {
  return video_id + "/" + (ref_id ? *ref_id : std::string("*")) + "/" + system_id;
}

bool ScoreMatrix::per_reference() const {
  return !entries.empty() && entries.begin()->first.ref_id.has_value();
}

std::map<CellKey, double> ScoreMatrix::caption_means() const {
  std::map<CellKey, std::pair<double, int>> acc;
  for (const auto& [key, value] : entries) {
    auto& slot = acc[CellKey{key.video_id, key.system_id}];
    slot.first += value;
    ++slot.second;
  }
  std::map<CellKey, double> out;
  for (const auto& [key, s] : acc) out.emplace(key, s.first / s.second);
  return out;
}

void write_scores_jsonl(const std::vector<ScoreMatrix>& matrices, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path);
  for (const auto& m : matrices) {
    for (const auto& [key, value] : m.entries) {
      json row = {{"metric", m.metric},
                  {"video_id", key.video_id},
                  {"ref_id", key.ref_id ? json(*key.ref_id) : json(nullptr)},
                  {"system_id", key.system_id},
                  {"score", value}};
      out << row.dump() << '\n';
    }
  }
  if (!out) throw Error("write failed: " + path);
}

std::vector<ScoreMatrix> read_scores_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scores file: " + path);
  std::vector<ScoreMatrix> matrices;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path, line_no, std::string("invalid JSON: ") + e.what());
    }
    auto str = [&](const char* field) {
      auto it = row.find(field);
      if (it == row.end() || !it->is_string()) {
        throw ParseError(path, line_no, std::string("field '") + field + "' must be a string");
      }
      return it->get<std::string>();
    };
    if (!row.is_object()) throw ParseError(path, line_no, "expected a JSON object");
    ScoreKey key;
    const std::string metric = str("metric");
    key.video_id = str("video_id");
    key.system_id = str("system_id");
    auto ref = row.find("ref_id");
    if (ref != row.end() && !ref->is_null()) {
      if (!ref->is_string()) throw ParseError(path, line_no, "field 'ref_id' must be a string or null");
      key.ref_id = ref->get<std::string>();
    }
    auto score = row.find("score");
    if (score == row.end() || !score->is_number()) {
      throw ParseError(path, line_no, "field 'score' must be a number");
    }
    const double value = score->get<double>();
    if (!std::isfinite(value)) throw ParseError(path, line_no, "score is not finite");

    auto [it, fresh] = index.emplace(metric, matrices.size());
    if (fresh) matrices.push_back(ScoreMatrix{metric, {}});
    ScoreMatrix& m = matrices[it->second];
    if (!m.entries.empty() && m.per_reference() != key.ref_id.has_value()) {
      throw ParseError(path, line_no,
                       "metric '" + metric + "' mixes per-reference and all-reference rows");
    }
    if (!m.entries.emplace(key, value).second) {
      throw ParseError(path, line_no, "duplicate score for " + metric + " " + key.label());
    }
  }
  return matrices;
}

void validate_coverage(const ScoreMatrix& matrix, const Corpus& corpus) {
  for (const auto& [key, value] : matrix.entries) {
    if (!corpus.candidates.contains(CellKey{key.video_id, key.system_id})) {
      throw ValidationError("metric '" + matrix.metric + "' scores unknown caption " + key.label());
    }
    if (key.ref_id) {
      const auto& refs = corpus.references_of(key.video_id);
      bool known = false;
      for (const auto& r : refs) known = known || r.ref_id == *key.ref_id;
      if (!known) {
        throw ValidationError("metric '" + matrix.metric + "' scores unknown reference " +
                              key.label());
      }
    }
  }
  std::vector<std::string> missing;
  const bool per_ref = matrix.per_reference();
  for (const auto& [cell, text] : corpus.candidates) {
    if (per_ref) {
      for (const auto& r : corpus.references_of(cell.first)) {
        ScoreKey key{cell.first, r.ref_id, cell.second};
        if (!matrix.entries.contains(key)) missing.push_back(key.label());
      }
    } else {
      ScoreKey key{cell.first, std::nullopt, cell.second};
      if (!matrix.entries.contains(key)) missing.push_back(key.label());
    }
  }
  if (!missing.empty()) {
    throw CoverageError("metric '" + matrix.metric + "' does not cover the corpus",
                        std::move(missing));
  }
}

}  // namespace capeval
