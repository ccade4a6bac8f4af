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


#include "capeval/fusion.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "capeval/stats.hpp"
#include "json.hpp"

namespace capeval {

using json = nlohmann::json;

namespace {

std::optional<double> try_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 3) return std::nullopt;
  try {
    return pearson(x, y);
  } catch (const NumericError&) {
    return std::nullopt;
  }
}

CorrelationReport test_report(const std::string& metric, const std::string& year,
                              const std::vector<double>& x, const std::vector<double>& y) {
  CorrelationReport r;
  r.level = CorrelationLevel::Caption;
  r.metric = metric;
  r.year = year;
  r.n = x.size();
  const auto rho = try_pearson(x, y);
  r.defined = rho.has_value();
  r.rho = rho.value_or(0.0);
  return r;
}

}  // namespace

FusionData build_fusion_data(const std::vector<ScoreMatrix>& matrices,
                             const AssessmentMatrix& human, const Corpus& corpus) {
  if (matrices.empty()) throw ValidationError("fusion: no metric matrices");
  FusionData data;
  std::vector<std::map<CellKey, double>> means;
  for (const auto& m : matrices) {
    if (std::find(data.metric_order.begin(), data.metric_order.end(), m.metric) !=
        data.metric_order.end()) {
      throw ValidationError("fusion: metric '" + m.metric + "' given twice");
    }
    data.metric_order.push_back(m.metric);
    means.push_back(m.caption_means());
  }
  for (const auto& [cell, target] : human.entries) {
    FusionRow row;
    bool complete = true;
    for (const auto& m : means) {
      auto it = m.find(cell);
      if (it == m.end()) {
        complete = false;
        break;
      }
      row.values.push_back(it->second);
    }
    if (!complete || !corpus.video_years.contains(cell.first)) continue;
    row.label = cell.first + "/" + cell.second;
    row.year = corpus.year_of(cell.first);
    row.human = target;
    data.rows.push_back(std::move(row));
  }
  return data;
}

FusionSplit split_by_year(const FusionData& data, std::uint64_t seed, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("fusion: train fraction must lie in (0, 1)");
  }
  std::map<std::string, std::vector<std::size_t>> by_year;
  for (std::size_t i = 0; i < data.rows.size(); ++i) by_year[data.rows[i].year].push_back(i);
  FusionSplit split;
  std::uint64_t stream = 0;
  for (auto& [year, idx] : by_year) {
    Rng rng(derive_seed(seed, stream++));
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.below(i))]);
    }
    const std::size_t n = idx.size();
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    if (n >= 2) n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<long>(n_train));
    split.test.insert(split.test.end(), idx.begin() + static_cast<long>(n_train), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

FusionFit fit_fusion(const FusionData& data, std::uint64_t split_seed) {
  return fit_fusion(data, split_by_year(data, split_seed), split_seed);
}

FusionFit fit_fusion(const FusionData& data, const FusionSplit& split, std::uint64_t split_seed) {
  const std::size_t k = data.metric_order.size();
  if (k == 0) throw ValidationError("fusion: no metrics");
  if (split.train.size() < k + 1) {
    throw ValidationError("fusion: need at least " + std::to_string(k + 1) +
                          " training rows, got " + std::to_string(split.train.size()));
  }
  FusionFit fit;
  fit.split = split;
  FusionModel& model = fit.model;
  model.metric_order = data.metric_order;
  model.split_seed = split_seed;
  model.normalization.resize(k);
  for (std::size_t m = 0; m < k; ++m) {
    double lo = data.rows[split.train.front()].values[m];
    double hi = lo;
    for (std::size_t i : split.train) {
      lo = std::min(lo, data.rows[i].values[m]);
      hi = std::max(hi, data.rows[i].values[m]);
    }
    model.normalization[m] = MetricRange{lo, hi, !(hi > lo)};
    if (model.normalization[m].constant) {
      fit.warnings.push_back("fusion: metric '" + data.metric_order[m] +
                             "' is constant on the training split and gets weight 0");
    }
  }

  std::vector<std::size_t> active;
  for (std::size_t m = 0; m < k; ++m) {
    if (!model.normalization[m].constant) active.push_back(m);
  }
  const auto n = static_cast<Eigen::Index>(split.train.size());
  const auto p = static_cast<Eigen::Index>(active.size() + 1);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const FusionRow& row = data.rows[split.train[static_cast<std::size_t>(r)]];
    x(r, 0) = 1.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const MetricRange& range = model.normalization[active[a]];
      x(r, static_cast<Eigen::Index>(a + 1)) =
          (row.values[active[a]] - range.min) / (range.max - range.min);
    }
    y(r) = row.human;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    throw NumericError("fusion: singular design matrix (rank " + std::to_string(qr.rank()) +
                       " < " + std::to_string(p) +
                       "); drop one of the collinear metrics and refit");
  }
  const Eigen::VectorXd beta = qr.solve(y);
  model.bias = beta(0);
  model.weights.assign(k, 0.0);
  for (std::size_t a = 0; a < active.size(); ++a) {
    model.weights[active[a]] = beta(static_cast<Eigen::Index>(a + 1));
  }

  std::vector<std::vector<double>> train_rows, test_rows;
  std::vector<double> train_human, test_human;
  for (std::size_t i : split.train) {
    train_rows.push_back(data.rows[i].values);
    train_human.push_back(data.rows[i].human);
  }
  for (std::size_t i : split.test) {
    test_rows.push_back(data.rows[i].values);
    test_human.push_back(data.rows[i].human);
  }
  const FusedScores train_pred = apply_fusion(model, data.metric_order, train_rows);
  const auto train_rho = try_pearson(train_pred.values, train_human);
  if (!train_rho) fit.warnings.push_back("fusion: fused training scores are constant");
  fit.train_rho = train_rho.value_or(0.0);
  for (std::size_t m = 0; m < k; ++m) {
    std::vector<double> col;
    for (const auto& row : train_rows) col.push_back(row[m]);
    fit.metric_train_rho.push_back(try_pearson(col, train_human).value_or(0.0));
  }

  const FusedScores test_pred = apply_fusion(model, data.metric_order, test_rows);
  fit.clamped = test_pred.clamped;
  if (fit.clamped > 0) {
    fit.warnings.push_back("fusion: " + std::to_string(fit.clamped) +
                           " normalized test values fell outside [0, 1] and were clamped");
  }
  std::map<std::string, std::vector<std::size_t>> test_by_year;
  for (std::size_t t = 0; t < split.test.size(); ++t) {
    test_by_year[data.rows[split.test[t]].year].push_back(t);
  }
  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups(test_by_year.begin(),
                                                                       test_by_year.end());
  std::vector<std::size_t> everything(split.test.size());
  for (std::size_t t = 0; t < everything.size(); ++t) everything[t] = t;
  groups.emplace_back(kAllYears, everything);

  std::vector<std::string> names = data.metric_order;
  names.push_back(kFusionMetric);
  for (std::size_t m = 0; m <= k; ++m) {
    for (const auto& [year, members] : groups) {
      std::vector<double> xs, ys;
      for (std::size_t t : members) {
        xs.push_back(m == k ? test_pred.values[t] : test_rows[t][m]);
        ys.push_back(test_human[t]);
      }
      fit.test_reports.push_back(test_report(names[m], year, xs, ys));
    }
  }
  return fit;
}

FusedScores apply_fusion(const FusionModel& model, const std::vector<std::string>& columns,
                         const std::vector<std::vector<double>>& rows) {
  if (model.weights.size() != model.metric_order.size() ||
      model.normalization.size() != model.metric_order.size()) {
    throw ValidationError("fusion model: weights, normalization and metric order differ in size");
  }
  std::vector<std::size_t> column_of;
  for (const auto& metric : model.metric_order) {
    auto it = std::find(columns.begin(), columns.end(), metric);
    if (it == columns.end()) throw ValidationError("fusion: missing metric column '" + metric + "'");
    column_of.push_back(static_cast<std::size_t>(it - columns.begin()));
  }
  FusedScores out;
  out.values.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != columns.size()) throw ValidationError("fusion: ragged score rows");
    double s = model.bias;
    for (std::size_t m = 0; m < model.metric_order.size(); ++m) {
      const MetricRange& range = model.normalization[m];
      double v = 0.0;
      if (!range.constant) {
        v = (rows[r][column_of[m]] - range.min) / (range.max - range.min);
        if (v < 0.0 || v > 1.0) {
          ++out.clamped;
          v = std::clamp(v, 0.0, 1.0);
        }
      }
      s += model.weights[m] * v;
    }
    out.values[r] = s;
  }
  return out;
}

ScoreMatrix fused_matrix(const FusionModel& model, const FusionData& data) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : data.rows) rows.push_back(r.values);
  const FusedScores fused = apply_fusion(model, data.metric_order, rows);
  ScoreMatrix m;
  m.metric = kFusionMetric;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const std::string& label = data.rows[i].label;
    const auto slash = label.find('/');
    m.entries.emplace(ScoreKey{label.substr(0, slash), std::nullopt, label.substr(slash + 1)},
                      fused.values[i]);
  }
  return m;
}

std::string fusion_model_to_json(const FusionModel& model) {
  json norm = json::array();
  for (std::size_t m = 0; m < model.normalization.size(); ++m) {
    norm.push_back({{"metric", model.metric_order.at(m)},
                    {"min", model.normalization[m].min},
                    {"max", model.normalization[m].max},
                    {"constant", model.normalization[m].constant}});
  }
  json doc = {{"metric_order", model.metric_order},
              {"weights", model.weights},
              {"bias", model.bias},
              {"normalization", norm},
              {"split_seed", model.split_seed}};
  return doc.dump(2) + "\n";
}

FusionModel fusion_model_from_json(const std::string& text) {
  FusionModel model;
  try {
    const json doc = json::parse(text);
    model.metric_order = doc.at("metric_order").get<std::vector<std::string>>();
    model.weights = doc.at("weights").get<std::vector<double>>();
    model.bias = doc.at("bias").get<double>();
    model.split_seed = doc.at("split_seed").get<std::uint64_t>();
    for (const auto& entry : doc.at("normalization")) {
      model.normalization.push_back(MetricRange{entry.at("min").get<double>(),
                                                entry.at("max").get<double>(),
                                                entry.value("constant", false)});
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid fusion model: ") + e.what());
  }
  if (model.weights.size() != model.metric_order.size() ||
      model.normalization.size() != model.metric_order.size()) {
    throw ValidationError("invalid fusion model: weights, normalization and metric order differ in size");
  }
  return model;
}

void save_fusion_model(const FusionModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path);
  out << fusion_model_to_json(model);
  if (!out) throw Error("write failed: " + path);
}

FusionModel load_fusion_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open fusion model: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return fusion_model_from_json(buf.str());
}

std::string format_fusion_coefficients(const FusionModel& model) {
  std::ostringstream out;
  out << "metric\tweight\n";
  for (std::size_t m = 0; m < model.metric_order.size(); ++m) {
    out << model.metric_order[m] << '\t' << format_number(model.weights[m], 4) << '\n';
  }
  out << "bias\t" << format_number(model.bias, 4) << '\n';
  return out.str();
}

}  // namespace capeval
