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
#ifndef LSTMAP_TESTS_TEST_HELPERS_HPP
#define LSTMAP_TESTS_TEST_HELPERS_HPP

#include <initializer_list>
#include <vector>

#include "lstmap/core.hpp"

namespace testing_helpers {

inline lstmap::Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
  const auto n = static_cast<Eigen::Index>(values.size());
  const auto d = static_cast<Eigen::Index>(values.begin()->size());
  lstmap::Matrix m(n, d);
  Eigen::Index i = 0;
  for (const auto& r : values) {
    Eigen::Index k = 0;
    for (double v : r) m(i, k++) = v;
    ++i;
  }
  return m;
}

/// Labels 0,0,..,1,1,.. with `per_class` copies of each of `classes` ids.
inline std::vector<int> blocked_labels(int classes, int per_class) {
  std::vector<int> y;
  for (int c = 0; c < classes; ++c) y.insert(y.end(), static_cast<std::size_t>(per_class), c);
  return y;
}

/// Episode from explicit matrices laid out class-major.
inline lstmap::Episode make_episode(lstmap::Matrix support, lstmap::Matrix query, int w, int s, int q) {
  return lstmap::Episode{lstmap::FeatureSet(std::move(support), blocked_labels(w, s), w),
                         lstmap::FeatureSet(std::move(query), blocked_labels(w, q), w), w, s, q, {}};
}

}  // namespace testing_helpers

#endif  // LSTMAP_TESTS_TEST_HELPERS_HPP
