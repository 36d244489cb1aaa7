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
#ifndef LSTMAP_CORE_HPP
#define LSTMAP_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace lstmap {

/// Row-major dense matrix; one feature vector per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Errors. Every failure the library can raise derives from lstmap::Error so
// callers that only want to skip a bad episode can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define LSTMAP_DEFINE_ERROR(Name)             \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  }

LSTMAP_DEFINE_ERROR(ShapeError);
LSTMAP_DEFINE_ERROR(LabelError);
LSTMAP_DEFINE_ERROR(DimensionMismatch);
LSTMAP_DEFINE_ERROR(NegativeFeatureError);
LSTMAP_DEFINE_ERROR(NumericalError);
LSTMAP_DEFINE_ERROR(UnbalancedMarginals);
LSTMAP_DEFINE_ERROR(NumericalUnderflow);
LSTMAP_DEFINE_ERROR(MissingClass);
LSTMAP_DEFINE_ERROR(InsufficientData);
LSTMAP_DEFINE_ERROR(LengthMismatch);
LSTMAP_DEFINE_ERROR(InvalidParameter);

#undef LSTMAP_DEFINE_ERROR

/**
 * A labeled matrix of n feature vectors in d dimensions.
 *
 * Immutable after construction. Labels lie in [0, class_count) and, unless
 * the set is flagged as a partial partition (e.g. a query split), every class
 * id appears at least once.
 */
class FeatureSet {
 public:
  enum class Coverage { complete, partial };

  FeatureSet(Matrix data, std::vector<int> labels, int class_count,
             Coverage coverage = Coverage::complete)
      : data_(std::move(data)), labels_(std::move(labels)), class_count_(class_count) {
    if (data_.rows() < 1 || data_.cols() < 1) {
      throw ShapeError("FeatureSet requires n >= 1 rows and d >= 1 columns");
    }
    if (static_cast<std::size_t>(data_.rows()) != labels_.size()) {
      throw ShapeError("FeatureSet has " + std::to_string(data_.rows()) + " rows but " +
                       std::to_string(labels_.size()) + " labels");
    }
    if (class_count_ < 1) throw LabelError("class_count must be >= 1");
    std::vector<char> seen(static_cast<std::size_t>(class_count_), 0);
    for (int y : labels_) {
      if (y < 0 || y >= class_count_) {
        throw LabelError("label " + std::to_string(y) + " outside [0, " +
                         std::to_string(class_count_) + ")");
      }
      seen[static_cast<std::size_t>(y)] = 1;
    }
    if (coverage == Coverage::complete) {
      for (int c = 0; c < class_count_; ++c) {
        if (!seen[static_cast<std::size_t>(c)]) {
          throw LabelError("class " + std::to_string(c) + " has no rows");
        }
      }
    }
  }

  const Matrix& data() const noexcept { return data_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  int class_count() const noexcept { return class_count_; }
  Eigen::Index rows() const noexcept { return data_.rows(); }
  Eigen::Index dim() const noexcept { return data_.cols(); }

  /// Same labels, new coordinates (row count must match).
  FeatureSet with_data(Matrix data) const {
    return FeatureSet(std::move(data), labels_, class_count_, Coverage::partial);
  }

 private:
  Matrix data_;
  std::vector<int> labels_;
  int class_count_;
};

/**
 * A w-way s-shot task: s labeled support rows and q query rows per class.
 *
 * Class ids are dense positions in [0, w). `source_classes[j]` keeps the
 * dataset class id that position j was drawn from (empty for synthetic
 * episodes that have no source dataset).
 */
struct Episode {
  FeatureSet support;
  FeatureSet query;
  int w = 0;
  int s = 0;
  int q = 0;
  std::vector<int> source_classes;
};

struct LstParams {
  double beta = 0.5;
  double delta = 0.3;
  double gamma = 0.98;
  double epsilon = 1e-6;
  /// Divide by the norm of the centered row instead of the uncentered one.
  bool center_before_norm = false;

  void validate() const {
    if (!(beta > 0.0)) throw InvalidParameter("beta must be > 0");
    if (!(delta >= 0.0 && delta <= 1.0)) throw InvalidParameter("delta must be in [0, 1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidParameter("gamma must be in [0, 1]");
    if (!(epsilon > 0.0)) throw InvalidParameter("epsilon must be > 0");
  }
};

struct MapParams {
  double lambda = 10.0;
  double alpha = 0.3;
  int n_steps = 20;
  int sinkhorn_max_iter = 1000;
  double sinkhorn_tol = 1e-6;

  void validate() const {
    if (!(lambda > 0.0)) throw InvalidParameter("lambda must be > 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidParameter("alpha must be in (0, 1]");
    if (n_steps < 1) throw InvalidParameter("n_steps must be >= 1");
    if (sinkhorn_max_iter < 1) throw InvalidParameter("sinkhorn_max_iter must be >= 1");
    if (!(sinkhorn_tol > 0.0)) throw InvalidParameter("sinkhorn_tol must be > 0");
  }
};

/// Transport plan M (wq x w) together with the marginals it was solved for.
struct TransportPlan {
  Matrix m;
  Vector row_marginal;
  Vector col_marginal;

  /// Largest absolute marginal violation in max-norm over rows and columns.
  double marginal_violation() const {
    const double rows = (m.rowwise().sum() - row_marginal).cwiseAbs().maxCoeff();
    const double cols = (m.colwise().sum().transpose() - col_marginal).cwiseAbs().maxCoeff();
    return std::max(rows, cols);
  }
};

namespace detail {

inline void check_partition(const FeatureSet& part, int w, int per_class, const char* name) {
  if (part.class_count() != w) {
    throw LabelError(std::string(name) + " class space is " +
                     std::to_string(part.class_count()) + ", expected " + std::to_string(w));
  }
  std::vector<int> counts(static_cast<std::size_t>(w), 0);
  for (int y : part.labels()) {
    if (y < 0 || y >= w) throw LabelError(std::string(name) + " label outside [0, w)");
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int c = 0; c < w; ++c) {
    if (counts[static_cast<std::size_t>(c)] != per_class) {
      throw ShapeError(std::string(name) + " class " + std::to_string(c) + " has " +
                       std::to_string(counts[static_cast<std::size_t>(c)]) + " rows, expected " +
                       std::to_string(per_class));
    }
  }
}

}  // namespace detail

/// Returns `e` unchanged when every Episode invariant holds, throws otherwise.
inline const Episode& validate_episode(const Episode& e) {
  if (e.w < 1 || e.s < 1 || e.q < 1) throw ShapeError("episode requires w, s, q >= 1");
  if (e.support.dim() != e.query.dim()) {
    throw ShapeError("support and query dimensions differ");
  }
  // Label range is checked before counts so an out-of-range id reports as such.
  for (const FeatureSet* part : {&e.support, &e.query}) {
    for (int y : part->labels()) {
      if (y < 0 || y >= e.w) {
        throw LabelError("label " + std::to_string(y) + " outside [0, " + std::to_string(e.w) + ")");
      }
    }
  }
  detail::check_partition(e.support, e.w, e.s, "support");
  detail::check_partition(e.query, e.w, e.q, "query");
  return e;
}

/// Vertically stacks support over query.
inline Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols()) throw DimensionMismatch("cannot stack matrices of different width");
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

}  // namespace lstmap

#endif  // LSTMAP_CORE_HPP
