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
#ifndef LSTMAP_OT_HPP
#define LSTMAP_OT_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lstmap/core.hpp"

namespace lstmap {

/// Squared Euclidean costs between query rows and class centers.
struct CostMatrix {
  Matrix l;
};

inline CostMatrix cost_matrix(const Matrix& queries, const Matrix& centers) {
  if (queries.cols() != centers.cols()) {
    throw DimensionMismatch("query dimension " + std::to_string(queries.cols()) +
                            " != center dimension " + std::to_string(centers.cols()));
  }
  // ||f||^2 + ||c||^2 - 2 f.c loses precision when f ~ c, so expand directly.
  Matrix l(queries.rows(), centers.rows());
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    for (Eigen::Index j = 0; j < centers.rows(); ++j) {
      l(i, j) = (queries.row(i) - centers.row(j)).squaredNorm();
    }
  }
  return CostMatrix{std::move(l)};
}

inline CostMatrix cost_matrix(const FeatureSet& queries, const Matrix& centers) {
  return cost_matrix(queries.data(), centers);
}

struct SinkhornOptions {
  int max_iter = 1000;
  double tol = 1e-6;
  /// Keep the per-iteration marginal violation in the result.
  bool record_trace = false;
};

struct SinkhornResult {
  TransportPlan plan;
  int iterations = 0;
  /// False when `tol` was not met within `max_iter` (plan is still usable).
  bool converged = false;
  bool log_domain = false;
  double violation = 0.0;
  std::vector<double> trace;
};

namespace detail {

// Kernel entries below exp(-kLogDomainThreshold) relative to the row maximum
// push the scaling vectors toward overflow; such problems go to log space.
inline constexpr double kLogDomainThreshold = 300.0;

inline double log_sum_exp(const double* values, Eigen::Index n, Eigen::Index stride) {
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) hi = std::max(hi, values[k * stride]);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) acc += std::exp(values[k * stride] - hi);
  return hi + std::log(acc);
}

inline double violation_of(const Matrix& m, const Vector& a, const Vector& b) {
  const double rows = (m.rowwise().sum() - a).cwiseAbs().maxCoeff();
  const double cols = (m.colwise().sum().transpose() - b).cwiseAbs().maxCoeff();
  return std::max(rows, cols);
}

inline void sinkhorn_scaling(const Matrix& shifted, const Vector& a, const Vector& b, double lambda,
                             const SinkhornOptions& opt, SinkhornResult& res) {
  const Matrix k = (-lambda * shifted.array()).exp().matrix();
  Vector u = Vector::Ones(a.size());
  Vector v = Vector::Ones(b.size());
  Matrix m;
  for (int it = 1; it <= opt.max_iter; ++it) {
    u = a.cwiseQuotient(k * v);
    v = b.cwiseQuotient(k.transpose() * u);
    m = u.asDiagonal() * k * v.asDiagonal();
    res.violation = violation_of(m, a, b);
    res.iterations = it;
    if (opt.record_trace) res.trace.push_back(res.violation);
    if (res.violation <= opt.tol) {
      res.converged = true;
      break;
    }
  }
  res.plan.m = std::move(m);
}

inline void sinkhorn_log(const Matrix& shifted, const Vector& a, const Vector& b, double lambda,
                         const SinkhornOptions& opt, SinkhornResult& res) {
  const Eigen::Index n = shifted.rows();
  const Eigen::Index w = shifted.cols();
  const Matrix log_k = -lambda * shifted;
  const Vector log_a = a.array().log().matrix();
  const Vector log_b = b.array().log().matrix();
  Vector f = Vector::Zero(n);  // log u
  Vector g = Vector::Zero(w);  // log v
  Matrix tmp(n, w);
  Matrix m;
  for (int it = 1; it <= opt.max_iter; ++it) {
    tmp = log_k.rowwise() + g.transpose();
    for (Eigen::Index i = 0; i < n; ++i) f(i) = log_a(i) - log_sum_exp(&tmp(i, 0), w, 1);
    tmp = log_k.colwise() + f;
    for (Eigen::Index j = 0; j < w; ++j) g(j) = log_b(j) - log_sum_exp(&tmp(0, j), n, w);
    m = ((log_k.colwise() + f).rowwise() + g.transpose()).array().exp().matrix();
    res.violation = violation_of(m, a, b);
    res.iterations = it;
    if (opt.record_trace) res.trace.push_back(res.violation);
    if (res.violation <= opt.tol) {
      res.converged = true;
      break;
    }
  }
  res.plan.m = std::move(m);
}

}  // namespace detail

/**
 * @brief Entropy-regularized transport by Sinkhorn scaling.
 *
 * Solves min <M, L> + (1/lambda) sum M (log M - 1) over plans with row sums
 * `a` and column sums `b`. The kernel is K = exp(-lambda L), so larger lambda
 * gives sharper plans. Scaling alternates u <- a / (K v), v <- b / (K^T u)
 * until the max-norm marginal violation is at most `tol`.
 *
 * Each cost row is shifted by its minimum before exponentiation; the shift is
 * absorbed by u and leaves the plan unchanged. When the shifted exponent
 * range is too wide for the plain kernel the iteration runs in log space.
 */
inline SinkhornResult sinkhorn(const CostMatrix& cost, const Vector& a, const Vector& b,
                               double lambda, const SinkhornOptions& opt = {}) {
  const Matrix& l = cost.l;
  if (l.rows() != a.size() || l.cols() != b.size()) {
    throw DimensionMismatch("marginal lengths do not match the cost matrix");
  }
  if (l.rows() < 1 || l.cols() < 1) throw DimensionMismatch("empty cost matrix");
  if (!(lambda > 0.0)) throw InvalidParameter("lambda must be > 0");
  if (opt.max_iter < 1 || !(opt.tol > 0.0)) throw InvalidParameter("bad Sinkhorn options");
  if ((a.array() <= 0.0).any() || (b.array() <= 0.0).any()) {
    throw UnbalancedMarginals("marginals must be strictly positive");
  }
  if (std::abs(a.sum() - b.sum()) > 1e-9) {
    throw UnbalancedMarginals("row mass " + std::to_string(a.sum()) + " != column mass " +
                              std::to_string(b.sum()));
  }
  if (!l.allFinite()) throw NumericalUnderflow("cost matrix has non-finite entries");

  const Matrix shifted = l.colwise() - l.rowwise().minCoeff();
  SinkhornResult res;
  res.plan.row_marginal = a;
  res.plan.col_marginal = b;
  res.log_domain = lambda * shifted.maxCoeff() > detail::kLogDomainThreshold;
  if (res.log_domain) {
    detail::sinkhorn_log(shifted, a, b, lambda, opt, res);
  } else {
    detail::sinkhorn_scaling(shifted, a, b, lambda, opt, res);
    if (!res.plan.m.allFinite()) {
      res = SinkhornResult{};
      res.plan.row_marginal = a;
      res.plan.col_marginal = b;
      res.log_domain = true;
      detail::sinkhorn_log(shifted, a, b, lambda, opt, res);
    }
  }
  if (!res.plan.m.allFinite()) throw NumericalUnderflow("Sinkhorn produced non-finite entries");
  return res;
}

/// Row-wise argmax with ties broken toward the smallest column index.
inline std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < m.cols(); ++j) {
      if (m(i, j) > m(i, best)) best = j;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

/// Shannon entropy -sum M log M (zero entries contribute nothing).
inline double plan_entropy(const Matrix& m) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double x = m(i, j);
      if (x > 0.0) h -= x * std::log(x);
    }
  }
  return h;
}

}  // namespace lstmap

#endif  // LSTMAP_OT_HPP
