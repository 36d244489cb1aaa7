/**
 * Copyright (C) The lstmap Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef LSTMAP_STATS_HPP
#define LSTMAP_STATS_HPP

#include <cmath>
#include <limits>
#include <span>

#include "lstmap/core.hpp"

namespace lstmap::stats {

namespace detail {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 20000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
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
  throw NumericalError("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/**
 * Regularized incomplete beta I_x(a, b).
 *
 * `y` must equal 1 - x; passing it separately keeps full precision when x
 * is close to 1 (as in the Student-t tail, where 1 - x = t^2 / (nu + t^2)).
 */
inline double regularized_incomplete_beta(double a, double b, double x, double y) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidParameter("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidParameter("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (y == 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * detail::beta_continued_fraction(b, a, y) / b;
}

inline double regularized_incomplete_beta(double a, double b, double x) {
  return regularized_incomplete_beta(a, b, x, 1.0 - x);
}

/// P(T > t) for Student's t with `nu` degrees of freedom.
inline double student_t_upper_tail(double t, double nu) {
  if (!(nu > 0.0)) throw InvalidParameter("degrees of freedom must be > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double t2 = t * t;
  const double x = nu / (nu + t2);
  const double y = t2 / (nu + t2);
  const double half_tail = 0.5 * regularized_incomplete_beta(0.5 * nu, 0.5, x, y);
  return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

inline double student_t_cdf(double t, double nu) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (t <= 0.0) return student_t_upper_tail(-t, nu);
  return 1.0 - student_t_upper_tail(t, nu);
}

struct TTestResult {
  double t_stat = 0.0;
  double p_value = 0.0;
  /// All paired differences were equal; p is 0 or 1 by the sign of the mean.
  bool zero_variance = false;
  std::size_t n = 0;
};

/**
 * One-sided paired t-test of H0: mean(x) >= mean(y) against
 * H1: mean(x) < mean(y). Differences are d = y - x, so small p favors y.
 */
inline TTestResult paired_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw LengthMismatch("paired samples have lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()));
  }
  if (x.size() < 2) throw LengthMismatch("paired t-test needs at least 2 pairs");
  const auto n = static_cast<double>(x.size());

  double mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mean += y[i] - x[i];
  mean /= n;
  double ss = 0.0;
  bool all_equal = true;
  const double first = y[0] - x[0];
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = y[i] - x[i];
    ss += (d - mean) * (d - mean);
    all_equal = all_equal && d == first;
  }

  TTestResult out;
  out.n = x.size();
  if (all_equal) {
    out.zero_variance = true;
    out.t_stat = first > 0.0 ? std::numeric_limits<double>::infinity()
                 : first < 0.0 ? -std::numeric_limits<double>::infinity()
                               : 0.0;
    out.p_value = first > 0.0 ? 0.0 : 1.0;
    return out;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  out.t_stat = mean / (sd / std::sqrt(n));
  out.p_value = student_t_upper_tail(out.t_stat, n - 1.0);
  return out;
}

}  // namespace lstmap::stats

#endif  // LSTMAP_STATS_HPP
