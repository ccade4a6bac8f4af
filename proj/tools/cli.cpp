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


#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "capeval/corpus.hpp"
#include "capeval/fusion.hpp"
#include "capeval/learned.hpp"
#include "capeval/metaeval.hpp"
#include "capeval/metrics.hpp"
#include "capeval/qualitative.hpp"
#include "capeval/score_matrix.hpp"
#include "capeval/textproc.hpp"
#include "json.hpp"

namespace capeval::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Inputs {
  std::string captions;
  std::string references;
  std::string assessments;
  std::string mode = "sa";
  bool relax = false;
  double human_floor = 50.0;
  double degraded_ceiling = 50.0;
};

struct Options {
  Inputs in;
  std::string out = "out";
  std::uint64_t seed = 7;
  std::string scores;
  std::vector<std::string> metrics;
  std::string level = "caption";
  bool single_ref = false;
  bool per_reference = false;
  std::string year;
  std::string target;
  std::string metric;
  std::size_t top_k = 10;
  std::string side = "both";
  std::string stopwords;
  double max_font = 48.0;
  double ridge_lambda = kDefaultRidgeLambda;

  // synth
  int videos = 200;
  int systems = 8;
  int refs = 2;
  int years = 5;
  double spread = 0.6;
  int annotations_per_item = 15;
  int annotators = 0;
  int bad_annotators = 2;
  int controls = 4;
};

struct Loaded {
  Corpus corpus;
  std::optional<AssessmentMatrix> human;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::string file_safe(const std::string& name) {
  std::string s = name;
  for (char& c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) == 0 && c != '-' && c != '_' && c != '.') c = '_';
  }
  return s;
}

void warn(std::ostream& err, const Warnings& warnings) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

// Every option of the subcommand with its resolved value (given or default).
json echo_config(const CLI::App& sub) {
  json options = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_name() == "--help") continue;
    const std::string name = opt->get_single_name();
    if (opt->get_expected_min() == 0) {
      options[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& results = opt->results();
      options[name] = opt->get_expected_max() > 1 ? json(results) : json(results.back());
    } else {
      const std::string def = opt->get_default_str();
      options[name] = def.empty() ? json(nullptr) : json(def);
    }
  }
  return {{"subcommand", sub.get_name()}, {"options", options}};
}

Loaded load_inputs(const Inputs& in, AssessmentMode mode, bool need_human, std::ostream& err) {
  if (need_human && in.assessments.empty()) {
    throw ValidationError("--assessments is required for this subcommand");
  }
  LoadedCorpus lc = load_corpus(in.captions, in.references, in.assessments,
                                mode == AssessmentMode::MA ? DatasetTag::MA : DatasetTag::SA);
  Loaded loaded;
  loaded.corpus = std::move(lc.corpus);
  if (!in.assessments.empty()) {
    const FilterResult filtered =
        filter_annotators(lc.annotations, FilterThresholds{in.human_floor, in.degraded_ceiling});
    warn(err, filtered.warnings);
    if (!filtered.removed_annotators.empty()) {
      err << "info: removed " << filtered.removed_annotators.size()
          << " annotator(s) failing control checks\n";
    }
    StandardizeOptions so;
    so.relax_min_annotations = in.relax;
    AssessmentMatrix human = standardize(filtered.kept, mode, so);
    warn(err, human.warnings);
    loaded.human = std::move(human);
  }
  return loaded;
}

std::vector<ScoreMatrix> load_scores(const std::string& path, const Corpus& corpus,
                                     std::ostream& err) {
  std::vector<ScoreMatrix> matrices = read_scores_jsonl(path);
  if (matrices.empty()) throw ValidationError("scores file has no rows: " + path);
  for (const auto& m : matrices) {
    try {
      validate_coverage(m, corpus);
    } catch (const CoverageError& e) {
      err << "warning: " << e.what() << " (" << e.missing().size()
          << " missing entries excluded pairwise)\n";
    }
  }
  return matrices;
}

std::vector<ScoreMatrix> select_metrics(std::vector<ScoreMatrix> matrices,
                                        const std::vector<std::string>& names) {
  if (names.empty() || (names.size() == 1 && names.front() == "all")) return matrices;
  std::vector<ScoreMatrix> out;
  for (const auto& name : names) {
    auto it = std::find_if(matrices.begin(), matrices.end(),
                           [&](const ScoreMatrix& m) { return m.metric == name; });
    if (it == matrices.end()) throw ValidationError("metric '" + name + "' not in scores file");
    out.push_back(*it);
  }
  return out;
}

int cmd_synth(const Options& o, const fs::path& out_dir, std::ostream& out) {
  SyntheticOptions so;
  so.n_videos = o.videos;
  so.n_systems = o.systems;
  so.n_refs = o.refs;
  so.n_years = o.years;
  so.quality_spread = o.spread;
  so.seed = o.seed;
  so.annotations_per_item = parse_assessment_mode(o.in.mode) == AssessmentMode::MA
                                ? o.annotations_per_item
                                : 1;
  so.n_annotators = o.annotators;
  so.n_bad_annotators = o.bad_annotators;
  so.controls_per_annotator = o.controls;
  const SyntheticCorpus synth = generate_synthetic(so);
  write_corpus(synth.corpus, synth.annotations, (out_dir / "captions.jsonl").string(),
               (out_dir / "references.jsonl").string(), (out_dir / "assessments.jsonl").string());
  out << "wrote " << synth.corpus.num_videos() << " videos, " << synth.corpus.candidates.size()
      << " captions, " << synth.annotations.size() << " annotations to " << out_dir.string()
      << '\n';
  return 0;
}

int cmd_score(const Options& o, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  std::vector<std::string> classical;
  bool baseline = false;
  for (const auto& m : o.metrics) {
    if (m == kBaselineMetric) {
      baseline = true;
    } else {
      classical.push_back(m);
    }
  }
  const AssessmentMode mode = parse_assessment_mode(o.in.mode);
  const Loaded loaded = load_inputs(o.in, mode, baseline, err);
  std::vector<ScoreMatrix> matrices;
  if (!classical.empty()) {
    ScoreAllResult r = score_all(loaded.corpus, classical, ScoreOptions{o.per_reference});
    warn(err, r.warnings);
    matrices = std::move(r.matrices);
  }
  if (baseline) {
    YearlyBaseline b = score_leave_one_year_out(loaded.corpus, *loaded.human, o.ridge_lambda);
    warn(err, b.warnings);
    matrices.push_back(std::move(b.scores));
  }
  write_scores_jsonl(matrices, (out_dir / "scores.jsonl").string());
  for (const auto& m : matrices) out << m.metric << ": " << m.size() << " scores\n";
  return 0;
}

std::pair<Loaded, std::vector<ScoreMatrix>> load_scored(const Options& o, std::ostream& err) {
  Loaded loaded = load_inputs(o.in, parse_assessment_mode(o.in.mode), true, err);
  std::vector<ScoreMatrix> matrices =
      select_metrics(load_scores(o.scores, loaded.corpus, err), o.metrics);
  return {std::move(loaded), std::move(matrices)};
}

int cmd_correlate(const Options& o, const fs::path& out_dir, std::ostream& out,
                  std::ostream& err) {
  auto [loaded, matrices] = load_scored(o, err);
  CorrelateOptions co;
  co.level = parse_correlation_level(o.level);
  co.multiref = !o.single_ref;
  co.year = o.year;
  const auto reports = correlate(matrices, *loaded.human, loaded.corpus, co);
  for (const auto& r : reports) {
    if (!r.defined) {
      err << "warning: " << r.metric << " (" << r.year
          << "): correlation undefined for constant scores\n";
    }
  }
  const std::string level = to_string(co.level);
  write_correlation_tsv(reports, (out_dir / ("correlation_" + level + ".tsv")).string());
  write_correlation_json(reports, (out_dir / ("correlation_" + level + ".json")).string());
  const std::string table = format_year_table(reports);
  write_text(out_dir / ("table_" + level + ".tsv"), table);
  out << table;
  return 0;
}

int cmd_williams(const Options& o, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  auto [loaded, matrices] = load_scored(o, err);
  const CorrelationLevel level = parse_correlation_level(o.level);
  AssessmentMatrix human = *loaded.human;
  if (!o.year.empty()) {
    if (!loaded.corpus.years().contains(o.year)) {
      throw ValidationError("year '" + o.year + "' not present in corpus");
    }
    for (auto& m : matrices) m = restrict_to_year(m, loaded.corpus, o.year);
    human = restrict_to_year(human, loaded.corpus, o.year);
  }
  const WilliamsMatrix w = williams_from_scores(matrices, human, level, !o.single_ref);
  const std::string tsv = format_williams_tsv(w);
  const std::string name = std::string("williams_") + to_string(level);
  write_text(out_dir / (name + ".tsv"), tsv);
  write_williams_json(w, (out_dir / (name + ".json")).string());
  out << tsv;
  return 0;
}

int cmd_fuse(const Options& o, const CLI::App& sub, const fs::path& out_dir, std::ostream& out,
             std::ostream& err) {
  const AssessmentMode target = parse_assessment_mode(o.target);
  if (sub.get_option("--mode")->count() > 0 && parse_assessment_mode(o.in.mode) != target) {
    throw ValidationError("--mode " + o.in.mode + " conflicts with --target " + o.target);
  }
  Options resolved = o;
  resolved.in.mode = to_string(target);
  auto [loaded, matrices] = load_scored(resolved, err);
  const FusionData data = build_fusion_data(matrices, *loaded.human, loaded.corpus);
  const FusionFit fit = fit_fusion(data, o.seed);
  warn(err, fit.warnings);
  save_fusion_model(fit.model, (out_dir / "fusion_model.json").string());
  const std::string table = format_year_table(fit.test_reports);
  write_text(out_dir / "fusion_report.tsv", table);
  write_text(out_dir / "fusion_coefficients.tsv", format_fusion_coefficients(fit.model));
  json summary = {{"target", to_string(target)},
                  {"train_rows", fit.split.train.size()},
                  {"test_rows", fit.split.test.size()},
                  {"train_rho", fit.train_rho},
                  {"metric_train_rho", json::object()},
                  {"clamped_test_values", fit.clamped}};
  for (std::size_t m = 0; m < data.metric_order.size(); ++m) {
    summary["metric_train_rho"][data.metric_order[m]] = fit.metric_train_rho[m];
  }
  write_text(out_dir / "fusion_summary.json", summary.dump(2) + "\n");
  write_scores_jsonl({fused_matrix(fit.model, data)}, (out_dir / "fusion_scores.jsonl").string());
  out << format_fusion_coefficients(fit.model) << table;
  return 0;
}

int cmd_shuffle(const Options& o, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  const Loaded loaded = load_inputs(o.in, parse_assessment_mode(o.in.mode), true, err);
  const ShuffleReport report = shuffle_experiment(loaded.corpus, *loaded.human, o.metrics, o.seed);
  warn(err, report.warnings);
  const std::string tsv = format_shuffle_tsv(report);
  write_text(out_dir / "shuffle.tsv", tsv);
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"metric", r.metric},
                    {"rho_original", r.rho_original},
                    {"rho_shuffled", r.rho_shuffled},
                    {"drop", r.drop},
                    {"relative_drop", r.relative_drop}});
  }
  write_text(out_dir / "shuffle.json", json{{"seed", report.seed}, {"rows", rows}}.dump(2) + "\n");
  out << tsv;
  return 0;
}

int cmd_wordcloud(const Options& o, const fs::path& out_dir, std::ostream& out,
                  std::ostream& err) {
  const Loaded loaded = load_inputs(o.in, parse_assessment_mode(o.in.mode), false, err);
  const std::vector<ScoreMatrix> matrices =
      select_metrics(load_scores(o.scores, loaded.corpus, err), o.metrics);
  const StopwordList stopwords = o.stopwords.empty() ? default_stopwords() : load_stopwords(o.stopwords);
  const PairSide side = parse_pair_side(o.side);
  CloudOptions cloud;
  cloud.max_font_size = o.max_font;
  for (const auto& m : matrices) {
    const TopPairs top = top_pairs(m, loaded.corpus, o.top_k);
    warn(err, top.warnings);
    std::ostringstream pairs;
    pairs << "rank\tvideo_id\tref_id\tsystem_id\tscore\tcandidate\treference\n";
    for (std::size_t i = 0; i < top.pairs.size(); ++i) {
      const ScoredPair& p = top.pairs[i];
      pairs << i + 1 << '\t' << p.key.video_id << '\t' << p.key.ref_id.value_or("*") << '\t'
            << p.key.system_id << '\t' << format_number(p.score) << '\t' << p.candidate << '\t'
            << p.reference << '\n';
    }
    FrequencyTable table = word_frequencies(top.pairs, stopwords, side);
    table.metric = m.metric;
    const std::string name = file_safe(m.metric);
    write_text(out_dir / ("top_pairs_" + name + ".tsv"), pairs.str());
    write_text(out_dir / ("freq_" + name + ".tsv"), format_frequency_tsv(table));
    if (table.entries.empty()) {
      err << "warning: " << m.metric << ": no words left after stop-word removal, no cloud\n";
      continue;
    }
    write_text(out_dir / ("cloud_" + name + ".svg"), render_cloud(table, cloud));
    out << m.metric << ": " << table.entries.size() << " distinct words\n";
  }
  return 0;
}

int cmd_export_pairs(const Options& o, const fs::path& out_dir, std::ostream& out,
                     std::ostream& err) {
  const Loaded loaded = load_inputs(o.in, parse_assessment_mode(o.in.mode), false, err);
  ExportOptions eo;
  if (!o.year.empty()) {
    if (!loaded.corpus.years().contains(o.year)) {
      throw ValidationError("year '" + o.year + "' not present in corpus");
    }
    eo.held_out_year = o.year;
  }
  const fs::path path = out_dir / "pairs.jsonl";
  export_pairs(loaded.corpus, loaded.human ? &*loaded.human : nullptr, path.string(), eo);
  out << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_import_scores(const Options& o, const fs::path& out_dir, std::ostream& out,
                      std::ostream& err) {
  const Loaded loaded = load_inputs(o.in, parse_assessment_mode(o.in.mode), false, err);
  const ScoreMatrix m = import_external_scores(o.scores, loaded.corpus, o.metric);
  const std::string name = file_safe(m.metric);
  write_scores_jsonl({m}, (out_dir / ("imported_" + name + ".jsonl")).string());
  json report = {{"metric", m.metric},
                 {"entries", m.size()},
                 {"per_reference", m.per_reference()},
                 {"coverage", "complete"}};
  write_text(out_dir / ("import_" + name + ".json"), report.dump(2) + "\n");
  out << m.metric << ": " << m.size() << " scores, full coverage\n";
  return 0;
}

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return "parse";
  if (dynamic_cast<const CoverageError*>(&e)) return "coverage";
  if (dynamic_cast<const ValidationError*>(&e)) return "validation";
  if (dynamic_cast<const NumericError*>(&e)) return "numeric";
  if (dynamic_cast<const Error*>(&e)) return "io";
  return "internal";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Caption metric scoring and meta-evaluation", "capeval"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1, 1);
  Options o;

  auto add_corpus = [&](CLI::App* sub, bool assessments_required) {
    sub->add_option("--captions", o.in.captions, "captions.jsonl")->required()->check(CLI::ExistingFile);
    sub->add_option("--references", o.in.references, "references.jsonl")
        ->required()
        ->check(CLI::ExistingFile);
    auto* a = sub->add_option("--assessments", o.in.assessments, "assessments.jsonl")
                  ->check(CLI::ExistingFile);
    if (assessments_required) a->required();
    sub->add_option("--mode", o.in.mode, "Assessment set: sa or ma")
        ->check(CLI::IsMember({"sa", "ma"}));
    sub->add_flag("--relax-min-annotations", o.in.relax,
                  "Allow MA cells with fewer than 15 annotations");
    sub->add_option("--human-floor", o.in.human_floor, "Minimum mean on human-control items");
    sub->add_option("--degraded-ceiling", o.in.degraded_ceiling,
                    "Maximum mean on degraded-control items");
  };
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--seed", o.seed, "Random seed");
  };
  auto add_level = [&](CLI::App* sub) {
    sub->add_option("--level", o.level, "system or caption")
        ->check(CLI::IsMember({"system", "caption"}));
    sub->add_flag("--single-ref", o.single_ref,
                  "Correlate per-reference rows instead of reference means");
    sub->add_option("--year", o.year, "Restrict to one year");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--videos", o.videos)->check(CLI::PositiveNumber);
  synth->add_option("--systems", o.systems)->check(CLI::PositiveNumber);
  synth->add_option("--refs", o.refs)->check(CLI::Range(1, 5));
  synth->add_option("--years", o.years)->check(CLI::PositiveNumber);
  synth->add_option("--spread", o.spread, "Spread of latent system quality")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--mode", o.in.mode, "sa: one annotation per caption, ma: many")
      ->check(CLI::IsMember({"sa", "ma"}));
  synth->add_option("--annotations-per-item", o.annotations_per_item, "Annotations per caption in ma mode")
      ->check(CLI::PositiveNumber);
  synth->add_option("--annotators", o.annotators, "Reliable annotators (0 = automatic)");
  synth->add_option("--bad-annotators", o.bad_annotators);
  synth->add_option("--controls", o.controls, "Control items per annotator and kind");
  add_common(synth);

  auto* score = app.add_subcommand("score", "Score captions with the selected metrics");
  add_corpus(score, false);
  score->add_option("--metrics", o.metrics, "Metric names, 'all' or 'baseline'")->delimiter(',')
      ->default_val(std::vector<std::string>{"all"});
  score->add_flag("--per-reference", o.per_reference, "One score per reference");
  score->add_option("--ridge-lambda", o.ridge_lambda, "Ridge penalty of the baseline scorer");
  add_common(score);

  auto* corr = app.add_subcommand("correlate", "Pearson correlation with human scores");
  add_corpus(corr, true);
  corr->add_option("--scores", o.scores)->required()->check(CLI::ExistingFile);
  corr->add_option("--metrics", o.metrics, "Subset of metrics from the scores file")->delimiter(',');
  add_level(corr);
  add_common(corr);

  auto* will = app.add_subcommand("williams", "Williams significance matrix");
  add_corpus(will, true);
  will->add_option("--scores", o.scores)->required()->check(CLI::ExistingFile);
  will->add_option("--metrics", o.metrics, "Subset of metrics from the scores file")->delimiter(',');
  add_level(will);
  add_common(will);

  auto* fuse = app.add_subcommand("fuse", "Fit a linear fusion of metrics");
  add_corpus(fuse, true);
  fuse->add_option("--scores", o.scores)->required()->check(CLI::ExistingFile);
  fuse->add_option("--metrics", o.metrics, "Subset of metrics from the scores file")->delimiter(',');
  fuse->add_option("--target", o.target, "Human target: sa or ma")
      ->required()
      ->check(CLI::IsMember({"sa", "ma"}));
  add_common(fuse);

  auto* shuffle = app.add_subcommand("shuffle", "Word-shuffle robustness experiment");
  add_corpus(shuffle, true);
  shuffle->add_option("--metrics", o.metrics, "Metric names or 'all'")->delimiter(',')
      ->default_val(std::vector<std::string>{"all"});
  add_common(shuffle);

  auto* cloud = app.add_subcommand("wordcloud", "Word clouds of the top scoring pairs");
  add_corpus(cloud, false);
  cloud->add_option("--scores", o.scores)->required()->check(CLI::ExistingFile);
  cloud->add_option("--metrics", o.metrics, "Subset of metrics from the scores file")->delimiter(',');
  cloud->add_option("--top-k", o.top_k, "Pairs per metric")->check(CLI::PositiveNumber);
  cloud->add_option("--side", o.side, "Words from candidate, reference or both")
      ->check(CLI::IsMember({"candidate", "reference", "both"}));
  cloud->add_option("--stopwords", o.stopwords, "Stop-word list (one word per line)")
      ->check(CLI::ExistingFile);
  cloud->add_option("--max-font", o.max_font, "Font size of the most frequent word")
      ->check(CLI::PositiveNumber);
  add_common(cloud);

  auto* exp = app.add_subcommand("export-pairs", "Write pairs.jsonl for an external scorer");
  add_corpus(exp, false);
  exp->add_option("--year", o.year, "Held-out year: its targets are written as null");
  add_common(exp);

  auto* imp = app.add_subcommand("import-scores", "Validate an external scores.jsonl");
  add_corpus(imp, false);
  imp->add_option("--scores", o.scores)->required()->check(CLI::ExistingFile);
  imp->add_option("--metric", o.metric, "Metric to import when the file holds several");
  add_common(imp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const fs::path out_dir(o.out);
    fs::create_directories(out_dir);
    write_text(out_dir / "run_config.json", echo_config(*sub).dump(2) + "\n");

    const std::string name = sub->get_name();
    if (name == "synth") return cmd_synth(o, out_dir, out);
    if (name == "score") return cmd_score(o, out_dir, out, err);
    if (name == "correlate") return cmd_correlate(o, out_dir, out, err);
    if (name == "williams") return cmd_williams(o, out_dir, out, err);
    if (name == "fuse") return cmd_fuse(o, *sub, out_dir, out, err);
    if (name == "shuffle") return cmd_shuffle(o, out_dir, out, err);
    if (name == "wordcloud") return cmd_wordcloud(o, out_dir, out, err);
    if (name == "export-pairs") return cmd_export_pairs(o, out_dir, out, err);
    if (name == "import-scores") return cmd_import_scores(o, out_dir, out, err);
    err << "error: unknown subcommand " << name << '\n';
    return 1;
  } catch (const CoverageError& e) {
    err << "error[coverage]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error[" << error_kind(e) << "]: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace capeval::cli
