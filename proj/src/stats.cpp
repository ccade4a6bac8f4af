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


#include "capeval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "capeval/common.hpp"

namespace capeval {
namespace {

constexpr double kTiny = 1e-300;
constexpr double kEps = 1e-16;
constexpr int kMaxIterations = 100000;
constexpr double kCorrelationSlack = 1e-12;

double beta_continued_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete beta: continued fraction did not converge");
}

void check_correlation(double r, const char* name) {
  if (!std::isfinite(r) || std::abs(r) > 1.0 + kCorrelationSlack) {
    throw ValidationError(std::string("williams: ") + name + " = " + std::to_string(r) +
                          " is not a correlation");
  }
}

}  // namespace

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw ValidationError("pearson: length mismatch (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  }
  if (x.size() < 3) {
    throw ValidationError("pearson: need at least 3 samples, got " + std::to_string(x.size()));
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw NumericError("pearson: correlation undefined for a constant vector");
  }
  const double r = sxy / (std::sqrt(sxx) * std::sqrt(syy));
  if (!std::isfinite(r)) throw NumericError("pearson: non-finite result");
  return std::clamp(r, -1.0, 1.0);
}

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("incomplete beta: a and b must be > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("incomplete beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

namespace {

// P(T > |t|).
double half_tail(double t, double df) {
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return 0.5 * incomplete_beta(x, 0.5 * df, 0.5);
}

}  // namespace

double student_t_upper_tail(double t, double df) {
  if (!(df > 0.0)) throw ValidationError("student t: degrees of freedom must be > 0");
  if (std::isnan(t)) throw NumericError("student t: NaN statistic");
  return t >= 0.0 ? half_tail(t, df) : 1.0 - half_tail(t, df);
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw ValidationError("student t: degrees of freedom must be > 0");
  if (std::isnan(t)) throw NumericError("student t: NaN statistic");
  return t > 0.0 ? 1.0 - half_tail(t, df) : half_tail(t, df);
}

WilliamsResult williams_test(double r12, double r13, double r23, int n) {
  if (n < 4) throw ValidationError("williams: need n >= 4, got " + std::to_string(n));
  check_correlation(r12, "r12");
  check_correlation(r13, "r13");
  check_correlation(r23, "r23");
  WilliamsResult result;
  result.df = n - 3;
  if (r13 == r23) return result;

  // Written so that swapping r13 and r23 leaves K and the denominator bit-identical.
  double k = 1.0 - r12 * r12 - (r13 * r13 + r23 * r23) + 2.0 * r12 * (r13 * r23);
  if (k < -kCorrelationSlack) {
    throw NumericError("williams: correlations are inconsistent (K = " + std::to_string(k) + " < 0)");
  }
  k = std::max(k, 0.0);
  const double nm1 = static_cast<double>(n - 1);
  const double sum = r13 + r23;
  const double one_minus = 1.0 - r12;
  const double denominator = std::sqrt(2.0 * k * nm1 / static_cast<double>(n - 3) +
                                       (sum * sum / 4.0) * one_minus * one_minus * one_minus);
  if (!(denominator > 0.0)) {
    throw NumericError("williams: zero variance of the correlation difference");
  }
  result.t = (r13 - r23) * std::sqrt(nm1 * (1.0 + r12)) / denominator;
  result.p = student_t_upper_tail(result.t, result.df);
  return result;
}

}  // namespace capeval
