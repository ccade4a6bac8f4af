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


#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "capeval/corpus.hpp"
#include "capeval/metaeval.hpp"
#include "capeval/metrics.hpp"
#include "capeval/qualitative.hpp"
#include "capeval/stats.hpp"
#include "cli.hpp"

namespace py = pybind11;
using namespace capeval;

namespace {

References to_refs(const std::vector<std::string>& texts) {
  References out;
  for (const auto& t : texts) out.push_back(tokenize(t));
  return out;
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"capeval"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

py::list score_files(const std::string& captions, const std::string& references,
                     const std::vector<std::string>& metrics, bool per_reference) {
  const LoadedCorpus lc = load_corpus(captions, references, "");
  ScoreAllResult r;
  {
    py::gil_scoped_release release;
    r = score_all(lc.corpus, metrics, {.per_reference = per_reference});
  }
  py::list rows;
  for (const auto& m : r.matrices) {
    for (const auto& [key, value] : m.entries) {
      py::dict row;
      row["metric"] = m.metric;
      row["video_id"] = key.video_id;
      row["ref_id"] = key.ref_id ? py::object(py::str(*key.ref_id)) : py::object(py::none());
      row["system_id"] = key.system_id;
      row["score"] = value;
      rows.append(row);
    }
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Caption metric scoring and meta-evaluation";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<CoverageError>(m, "CoverageError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  m.def("tokenize", [](const std::string& text) { return tokenize(text).tokens; }, py::arg("text"));
  m.def("stem", [](const std::string& word) { return stem(word); }, py::arg("word"));

  m.def("bleu", [](const std::string& c, const std::vector<std::string>& refs, int max_n) {
        return bleu_corpus({tokenize(c)}, {to_refs(refs)}, max_n);
      }, py::arg("candidate"), py::arg("references"), py::arg("max_n") = 4);
  m.def("sent_bleu", [](const std::string& c, const std::vector<std::string>& refs) {
        return sent_bleu(tokenize(c), to_refs(refs));
      }, py::arg("candidate"), py::arg("references"));
  m.def("rouge_l", [](const std::string& c, const std::vector<std::string>& refs, double beta) {
        return rouge_l(tokenize(c), to_refs(refs), beta);
      }, py::arg("candidate"), py::arg("references"), py::arg("beta") = 1.2);
  m.def("meteor_lite", [](const std::string& c, const std::vector<std::string>& refs) {
        return meteor_lite(tokenize(c), to_refs(refs));
      }, py::arg("candidate"), py::arg("references"));
  m.def("cider", [](const std::string& c, const std::vector<std::string>& refs,
                    const std::vector<std::vector<std::string>>& documents) {
        std::vector<References> docs;
        for (const auto& d : documents) docs.push_back(to_refs(d));
        return CiderScorer(docs).score(tokenize(c), to_refs(refs));
      }, py::arg("candidate"), py::arg("references"), py::arg("documents"),
      "CIDEr with IDF fitted on `documents`, one list of references per video.");
  m.def("score_files", &score_files, py::arg("captions"), py::arg("references"),
        py::arg("metrics") = std::vector<std::string>{"all"}, py::arg("per_reference") = false,
        "Score a caption file against a reference file; returns scores.jsonl rows as dicts.");

  m.def("pearson", &pearson, py::arg("x"), py::arg("y"));
  m.def("williams_test", [](double r12, double r13, double r23, int n) {
        const WilliamsResult r = williams_test(r12, r13, r23, n);
        return py::make_tuple(r.t, r.p, r.df);
      }, py::arg("r12"), py::arg("r13"), py::arg("r23"), py::arg("n"),
      "Returns (t, one-sided p, degrees of freedom).");

  m.def("word_frequencies", [](const std::vector<std::pair<std::string, std::string>>& pairs,
                               const std::string& side) {
        std::vector<ScoredPair> sp;
        for (const auto& [c, r] : pairs) sp.push_back(ScoredPair{{}, 0.0, c, r});
        return word_frequencies(sp, default_stopwords(), parse_pair_side(side)).entries;
      }, py::arg("pairs"), py::arg("side") = "both");

  m.def("run_cli", &run_cli, py::arg("args"),
        "Run a capeval subcommand in process; returns (exit code, stdout, stderr).");
}
