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

#include <vector>

#include "capeval/common.hpp"

namespace capeval {

/// Pearson product-moment correlation, two-pass mean-centered. Needs equal
/// lengths >= 3 (ValidationError); a constant vector raises NumericError.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz).
double incomplete_beta(double x, double a, double b);

/// CDF of Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

/// P(T > |t|) for Student's t; never above 0.5.
double student_t_upper_tail(double t, double df);

struct WilliamsResult {
  double t = 0.0;
  /// One-sided p for "variable 1 correlates more strongly with 3 than 2 does".
  double p = 0.5;
  int df = 0;
};

/// Williams' test for the difference of two dependent correlations r13 and
/// r23 sharing variable 3, with r12 the correlation between 1 and 2:
///
///   t = (r13 - r23) sqrt((n - 1)(1 + r12))
///       / sqrt(2K (n - 1)/(n - 3) + ((r13 + r23)^2 / 4)(1 - r12)^3)
///   K = 1 - r12^2 - r13^2 - r23^2 + 2 r12 r13 r23
///
/// with n - 3 degrees of freedom. r13 == r23 gives t = 0, p = 0.5.
/// Swapping r13 and r23 negates t exactly and p(a, b) + p(b, a) == 1.
WilliamsResult williams_test(double r12, double r13, double r23, int n);

}  // namespace capeval
