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
#ifndef LSTMAP_MAP_CLASSIFIER_HPP
#define LSTMAP_MAP_CLASSIFIER_HPP

#include <vector>

#include "lstmap/core.hpp"
#include "lstmap/ot.hpp"

namespace lstmap {

/// One center per class, w x r.
struct ClassCenters {
  Matrix c;
};

/// Mean of the support rows of each class.
inline ClassCenters init_centers(const FeatureSet& support, int w) {
  Matrix sums = Matrix::Zero(w, support.dim());
  std::vector<int> counts(static_cast<std::size_t>(w), 0);
  for (Eigen::Index i = 0; i < support.rows(); ++i) {
    const int y = support.labels()[static_cast<std::size_t>(i)];
    if (y < 0 || y >= w) throw LabelError("support label outside [0, w)");
    sums.row(y) += support.data().row(i);
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int j = 0; j < w; ++j) {
    if (counts[static_cast<std::size_t>(j)] == 0) {
      throw MissingClass("class " + std::to_string(j) + " has no support rows");
    }
    sums.row(j) /= counts[static_cast<std::size_t>(j)];
  }
  return ClassCenters{std::move(sums)};
}

/**
 * Moves each center a fraction `alpha` toward
 *
 *   mu_j = (sum_i M_ij f_i + sum_{support, y_k = j} f_k) / (s_j + sum_i M_ij)
 *
 * where s_j is the number of support rows of class j. `alpha` = 0 is allowed
 * here (no-op step) even though the classifier itself requires alpha > 0.
 */
inline ClassCenters update_centers(const TransportPlan& plan, const FeatureSet& support,
                                   const FeatureSet& query, const ClassCenters& centers,
                                   double alpha) {
  const Eigen::Index w = centers.c.rows();
  if (plan.m.rows() != query.rows() || plan.m.cols() != w) {
    throw DimensionMismatch("plan is " + std::to_string(plan.m.rows()) + "x" +
                            std::to_string(plan.m.cols()) + ", expected " +
                            std::to_string(query.rows()) + "x" + std::to_string(w));
  }
  if (support.dim() != centers.c.cols() || query.dim() != centers.c.cols()) {
    throw DimensionMismatch("feature dimension does not match centers");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidParameter("alpha must be in [0, 1]");

  Matrix numer = plan.m.transpose() * query.data();
  Vector denom = plan.m.colwise().sum().transpose();
  for (Eigen::Index k = 0; k < support.rows(); ++k) {
    const int y = support.labels()[static_cast<std::size_t>(k)];
    if (y < 0 || y >= w) throw LabelError("support label outside [0, w)");
    numer.row(y) += support.data().row(k);
    denom(y) += 1.0;
  }
  const Matrix mu = denom.cwiseInverse().asDiagonal() * numer;
  return ClassCenters{centers.c + alpha * (mu - centers.c)};
}

struct MapResult {
  std::vector<int> labels;
  TransportPlan plan;
  ClassCenters centers;
  /// Outer steps whose Sinkhorn solve hit the iteration cap.
  int unconverged_steps = 0;
};

/**
 * @brief Iterative MAP label estimation with Sinkhorn mapping.
 *
 * Starting from support means, repeats exactly `n_steps` times: build the
 * squared-distance cost, solve the balanced transport (a = 1, b = q), and
 * damp the centers toward the re-estimated means. Labels are decoded by
 * row-wise argmax of the last plan. Features must already be transformed.
 */
inline MapResult map_classify(const Episode& e, const MapParams& params) {
  params.validate();
  validate_episode(e);
  const Vector a = Vector::Ones(e.query.rows());
  const Vector b = Vector::Constant(e.w, static_cast<double>(e.q));
  const SinkhornOptions opt{params.sinkhorn_max_iter, params.sinkhorn_tol, false};

  MapResult out;
  out.centers = init_centers(e.support, e.w);
  for (int step = 0; step < params.n_steps; ++step) {
    SinkhornResult solved = sinkhorn(cost_matrix(e.query, out.centers.c), a, b, params.lambda, opt);
    if (!solved.converged) ++out.unconverged_steps;
    out.plan = std::move(solved.plan);
    out.centers = update_centers(out.plan, e.support, e.query, out.centers, params.alpha);
  }
  out.labels = argmax_rows(out.plan.m);
  return out;
}

}  // namespace lstmap

#endif  // LSTMAP_MAP_CLASSIFIER_HPP
