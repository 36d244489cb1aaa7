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
#ifndef LSTMAP_BASELINES_HPP
#define LSTMAP_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lstmap/core.hpp"
#include "lstmap/map_classifier.hpp"
#include "lstmap/ot.hpp"

namespace lstmap {

// Reference classifiers that replace the transport step. All are
// deterministic and break distance ties toward the smaller class index.

namespace detail {

inline int nearest_row(const RowVector& x, const Matrix& points) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < points.rows(); ++j) {
    const double d = (x - points.row(j)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

}  // namespace detail

/// Labels every query by its nearest center.
inline std::vector<int> nearest_centroid(const Matrix& queries, const Matrix& centers) {
  std::vector<int> out(static_cast<std::size_t>(queries.rows()));
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = detail::nearest_row(queries.row(i), centers);
  }
  return out;
}

/// 1-nearest-neighbor against individual support rows.
inline std::vector<int> nn_classify(const Episode& e) {
  validate_episode(e);
  std::vector<int> out(static_cast<std::size_t>(e.query.rows()));
  for (Eigen::Index i = 0; i < e.query.rows(); ++i) {
    const int k = detail::nearest_row(e.query.data().row(i), e.support.data());
    out[static_cast<std::size_t>(i)] = e.support.labels()[static_cast<std::size_t>(k)];
  }
  return out;
}

struct KmeansResult {
  std::vector<int> labels;
  Matrix centers;
  int iterations = 0;
  /// Some class ended with no query members; its center is the support mean.
  bool empty_cluster = false;
};

/**
 * Lloyd refinement seeded with support means. Support rows stay pinned to
 * their own class; queries are reassigned each round until stable or
 * `n_iter` rounds have run. `n_iter` = 0 is nearest-centroid.
 */
inline KmeansResult kmeans_classify(const Episode& e, int n_iter = 20) {
  validate_episode(e);
  if (n_iter < 0) throw InvalidParameter("n_iter must be >= 0");
  const int w = e.w;
  const Matrix& xq = e.query.data();

  KmeansResult res;
  res.centers = init_centers(e.support, w).c;
  res.labels = nearest_centroid(xq, res.centers);

  Matrix support_sum = Matrix::Zero(w, e.support.dim());
  std::vector<int> support_count(static_cast<std::size_t>(w), 0);
  for (Eigen::Index k = 0; k < e.support.rows(); ++k) {
    const int y = e.support.labels()[static_cast<std::size_t>(k)];
    support_sum.row(y) += e.support.data().row(k);
    ++support_count[static_cast<std::size_t>(y)];
  }

  for (int it = 0; it < n_iter; ++it) {
    Matrix sums = support_sum;
    std::vector<int> counts = support_count;
    for (Eigen::Index i = 0; i < xq.rows(); ++i) {
      const int y = res.labels[static_cast<std::size_t>(i)];
      sums.row(y) += xq.row(i);
      ++counts[static_cast<std::size_t>(y)];
    }
    for (int j = 0; j < w; ++j) res.centers.row(j) = sums.row(j) / counts[static_cast<std::size_t>(j)];
    std::vector<int> next = nearest_centroid(xq, res.centers);
    ++res.iterations;
    const bool stable = next == res.labels;
    res.labels = std::move(next);
    if (stable) break;
  }

  std::vector<int> members(static_cast<std::size_t>(w), 0);
  for (int y : res.labels) ++members[static_cast<std::size_t>(y)];
  res.empty_cluster = std::find(members.begin(), members.end(), 0) != members.end();
  return res;
}

struct GmmResult {
  std::vector<int> labels;
  Matrix means;
  double variance = 0.0;
  /// Query responsibilities (wq x w) from the final E-step.
  Matrix responsibilities;
  /// Variance fell under the floor at some step and was clamped.
  bool degenerate_variance = false;
  /// Largest |sum_j r_ij - 1| observed over all E-steps.
  double max_normalization_error = 0.0;
};

/**
 * @brief Gaussian mixture EM with shared spherical covariance.
 *
 * w components with uniform weights and covariance sigma^2 I. Means start
 * at the support class means. Support rows take part in every M-step with
 * their one-hot labels; only query responsibilities are re-estimated.
 * Queries are labeled by argmax responsibility after `n_iter` EM rounds.
 */
inline GmmResult gmm_classify(const Episode& e, int n_iter = 20, double var_floor = 1e-6) {
  validate_episode(e);
  if (n_iter < 0) throw InvalidParameter("n_iter must be >= 0");
  if (!(var_floor > 0.0)) throw InvalidParameter("var_floor must be > 0");
  const int w = e.w;
  const Matrix& xs = e.support.data();
  const Matrix& xq = e.query.data();
  const auto dim = static_cast<double>(xq.cols());
  const auto n_total = static_cast<double>(xs.rows() + xq.rows());

  GmmResult res;
  res.means = init_centers(e.support, w).c;

  auto clamp_variance = [&](double v) {
    if (!(v >= var_floor)) {
      res.degenerate_variance = true;
      return var_floor;
    }
    return v;
  };

  // Initial spread: every row against its nearest initial mean (support rows
  // against their own class).
  {
    double ss = 0.0;
    for (Eigen::Index k = 0; k < xs.rows(); ++k) {
      ss += (xs.row(k) - res.means.row(e.support.labels()[static_cast<std::size_t>(k)])).squaredNorm();
    }
    const std::vector<int> nearest = nearest_centroid(xq, res.means);
    for (Eigen::Index i = 0; i < xq.rows(); ++i) {
      ss += (xq.row(i) - res.means.row(nearest[static_cast<std::size_t>(i)])).squaredNorm();
    }
    res.variance = clamp_variance(ss / (n_total * dim));
  }

  auto e_step = [&] {
    const Matrix dist = cost_matrix(xq, res.means).l;
    Matrix r(xq.rows(), w);
    for (Eigen::Index i = 0; i < xq.rows(); ++i) {
      const RowVector logit = -dist.row(i) / (2.0 * res.variance);
      const double hi = logit.maxCoeff();
      const RowVector p = (logit.array() - hi).exp().matrix();
      r.row(i) = p / p.sum();
      res.max_normalization_error =
          std::max(res.max_normalization_error, std::abs(r.row(i).sum() - 1.0));
    }
    return r;
  };

  res.responsibilities = e_step();
  for (int it = 0; it < n_iter; ++it) {
    // M-step.
    Matrix numer = res.responsibilities.transpose() * xq;
    Vector mass = res.responsibilities.colwise().sum().transpose();
    for (Eigen::Index k = 0; k < xs.rows(); ++k) {
      const int y = e.support.labels()[static_cast<std::size_t>(k)];
      numer.row(y) += xs.row(k);
      mass(y) += 1.0;
    }
    res.means = mass.cwiseInverse().asDiagonal() * numer;

    double ss = 0.0;
    for (Eigen::Index k = 0; k < xs.rows(); ++k) {
      ss += (xs.row(k) - res.means.row(e.support.labels()[static_cast<std::size_t>(k)])).squaredNorm();
    }
    const Matrix dist = cost_matrix(xq, res.means).l;
    ss += res.responsibilities.cwiseProduct(dist).sum();
    res.variance = clamp_variance(ss / (n_total * dim));

    res.responsibilities = e_step();
  }
  res.labels = argmax_rows(res.responsibilities);
  return res;
}

}  // namespace lstmap

#endif  // LSTMAP_BASELINES_HPP
