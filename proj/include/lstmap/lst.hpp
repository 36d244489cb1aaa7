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
#ifndef LSTMAP_LST_HPP
#define LSTMAP_LST_HPP

#include <algorithm>
#include <cmath>

#include "lstmap/core.hpp"

namespace lstmap {

/**
 * @brief Latent Space Transform.
 *
 * Three steps applied to the joint support+query matrix of one episode:
 *
 *   1. power + semi-normalization   u -> (u+eps)^beta / ||(u+eps)^beta||^delta
 *   2. orthogonal reduction to r = min(d, n) columns via thin QR of the
 *      transposed data matrix
 *   3. centering + semi-normalization u -> (u - mean) / ||u||^gamma
 *
 * The QR basis and the centroid are fit on the stacked episode only, so the
 * transform is transductive and never shares state across episodes.
 */

/// Step 1. Requires nonnegative input.
inline FeatureSet power_semi_normalize(const FeatureSet& x, const LstParams& p) {
  const Matrix& in = x.data();
  if ((in.array() < 0.0).any()) {
    throw NegativeFeatureError("power transform requires nonnegative features");
  }
  Matrix out = (in.array() + p.epsilon).pow(p.beta).matrix();
  if (p.delta != 0.0) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double norm = out.row(i).norm();
      out.row(i) /= std::pow(norm, p.delta);
    }
  }
  return x.with_data(std::move(out));
}

/// Step 2. Returns x * Q where x^T = Q R is the thin QR factorization.
inline FeatureSet qr_reduce(const FeatureSet& x) {
  const Matrix& in = x.data();
  if (!in.allFinite()) throw NumericalError("QR reduction input is not finite");
  const Eigen::Index n = in.rows();
  const Eigen::Index d = in.cols();
  const Eigen::Index r = std::min(n, d);

  Eigen::MatrixXd xt = in.transpose();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(xt);
  // x Q = (Q R)^T Q = R^T for the thin factor; the upper r x n block of R
  // is all that survives.
  Matrix out = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>().toDenseMatrix().transpose();
  if (!out.allFinite()) throw NumericalError("QR reduction produced non-finite values");
  return x.with_data(std::move(out));
}

/// Step 3. The centroid is taken over all rows of `x`.
inline FeatureSet center_semi_normalize(const FeatureSet& x, const LstParams& p) {
  const Matrix& in = x.data();
  const RowVector centroid = in.colwise().mean();
  Matrix out = in.rowwise() - centroid;
  if (p.gamma != 0.0) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double norm = p.center_before_norm ? out.row(i).norm() : in.row(i).norm();
      if (norm == 0.0) {
        throw NumericalError("zero-norm row " + std::to_string(i) + " under gamma > 0");
      }
      out.row(i) /= std::pow(norm, p.gamma);
    }
  }
  return x.with_data(std::move(out));
}

/// Full transform of a feature set treated as one joint batch.
inline FeatureSet lst_transform(const FeatureSet& x, const LstParams& p) {
  p.validate();
  return center_semi_normalize(qr_reduce(power_semi_normalize(x, p)), p);
}

/// Full transform of an episode: support and query are stacked, transformed
/// jointly and split back in their original row order.
inline Episode lst_transform(const Episode& e, const LstParams& p) {
  const Eigen::Index ns = e.support.rows();
  const FeatureSet joint(stack_rows(e.support.data(), e.query.data()),
                         [&] {
                           std::vector<int> y = e.support.labels();
                           y.insert(y.end(), e.query.labels().begin(), e.query.labels().end());
                           return y;
                         }(),
                         e.w, FeatureSet::Coverage::partial);
  const FeatureSet out = lst_transform(joint, p);
  return Episode{e.support.with_data(out.data().topRows(ns)),
                 e.query.with_data(out.data().bottomRows(out.rows() - ns)),
                 e.w, e.s, e.q, e.source_classes};
}

}  // namespace lstmap

#endif  // LSTMAP_LST_HPP
