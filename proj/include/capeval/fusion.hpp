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
#include <string>
#include <vector>

#include "capeval/corpus.hpp"
#include "capeval/metaeval.hpp"
#include "capeval/score_matrix.hpp"

namespace capeval {

struct MetricRange {
  double min = 0.0;
  double max = 1.0;
  /// max == min on the training rows; the metric is normalized to 0 and gets weight 0.
  bool constant = false;

  bool operator==(const MetricRange&) const = default;
};

struct FusionModel {
  std::vector<std::string> metric_order;
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<MetricRange> normalization;
  std::uint64_t split_seed = 0;

  bool operator==(const FusionModel&) const = default;
};

struct FusionRow {
  std::string label;
  std::string year;
  /// Aligned with FusionData::metric_order.
  std::vector<double> values;
  double human = 0.0;
};

struct FusionData {
  std::vector<std::string> metric_order;
  std::vector<FusionRow> rows;
};

/// Caption-level rows (scores averaged over references) for the captions
/// every matrix and the human matrix cover, in (video, system) order.
FusionData build_fusion_data(const std::vector<ScoreMatrix>& matrices,
                             const AssessmentMatrix& human, const Corpus& corpus);

inline constexpr double kFusionTrainFraction = 0.8;

struct FusionSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per year, a seeded permutation of that year's rows; the first
/// round(0.8 n) go to train, the rest to test (at least one each when n >= 2).
FusionSplit split_by_year(const FusionData& data, std::uint64_t seed,
                          double train_fraction = kFusionTrainFraction);

struct FusionFit {
  FusionModel model;
  FusionSplit split;
  /// Test-split correlations per year and pooled ("all"), one report per
  /// metric plus one named "fusion".
  std::vector<CorrelationReport> test_reports;
  double train_rho = 0.0;
  /// Train-split correlation of each single metric, in metric order.
  std::vector<double> metric_train_rho;
  /// Test values clamped into [0, 1] after normalization.
  std::size_t clamped = 0;
  Warnings warnings;
};

inline constexpr const char* kFusionMetric = "fusion";

/// Min-max normalization fitted on the train split, then ordinary least
/// squares with an intercept, no regularization. A rank-deficient design
/// raises NumericError.
FusionFit fit_fusion(const FusionData& data, std::uint64_t split_seed);
FusionFit fit_fusion(const FusionData& data, const FusionSplit& split, std::uint64_t split_seed);

struct FusedScores {
  std::vector<double> values;
  std::size_t clamped = 0;
};

/// Normalizes each row with the stored ranges, clamps to [0, 1] and
/// returns w.x + b. `columns` names the entries of every row; each model
/// metric must be among them.
FusedScores apply_fusion(const FusionModel& model, const std::vector<std::string>& columns,
                         const std::vector<std::vector<double>>& rows);

/// The fused metric as a caption-level ScoreMatrix over the rows of `data`.
ScoreMatrix fused_matrix(const FusionModel& model, const FusionData& data);

std::string fusion_model_to_json(const FusionModel& model);
FusionModel fusion_model_from_json(const std::string& text);
void save_fusion_model(const FusionModel& model, const std::string& path);
FusionModel load_fusion_model(const std::string& path);

/// Metric, weight lines followed by the bias.
std::string format_fusion_coefficients(const FusionModel& model);

}  // namespace capeval
