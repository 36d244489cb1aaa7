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
#ifndef LSTMAP_EPISODES_HPP
#define LSTMAP_EPISODES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "lstmap/core.hpp"

namespace lstmap {

struct EpisodeSpec {
  int w = 5;
  int s = 1;
  int q = 15;
  std::uint64_t seed = 0;

  void validate() const {
    if (w < 2) throw InvalidParameter("w must be >= 2");
    if (s < 1) throw InvalidParameter("s must be >= 1");
    if (q < 1) throw InvalidParameter("q must be >= 1");
  }
};

/**
 * Deterministic random stream keyed by (seed, stream index).
 *
 * The key is mixed through splitmix64 into the state of a 64-bit Mersenne
 * twister. Bounded integers and normals are derived here rather than through
 * the <random> distributions, whose output is implementation-defined, so a
 * given key yields the same numbers with any standard library.
 */
class KeyedRng {
 public:
  KeyedRng(std::uint64_t seed, std::uint64_t stream) : engine_(mix(seed, stream)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = 0;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  /// Standard normal via the Box-Muller transform.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// First `k` entries of a uniformly random permutation of `items`.
  template <class T>
  std::vector<T> choose(std::vector<T> items, std::size_t k) {
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(below(items.size() - i));
      std::swap(items[i], items[j]);
    }
    items.resize(k);
    return items;
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed;
    const std::uint64_t a = splitmix64(x);
    x ^= stream * 0xd1b54a32d192ed03ULL;
    return a ^ splitmix64(x);
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/**
 * Draws episodes from a labeled dataset.
 *
 * Keeps a per-class row index so repeated draws do not rescan the dataset.
 * Each draw picks w distinct classes, then s+q distinct rows per class; the
 * first s rows of a class become support. Class j of the episode is the j-th
 * class drawn.
 */
class EpisodeSampler {
 public:
  EpisodeSampler(const FeatureSet& dataset, EpisodeSpec spec) : dataset_(&dataset), spec_(spec) {
    spec_.validate();
    rows_by_class_.resize(static_cast<std::size_t>(dataset.class_count()));
    for (Eigen::Index i = 0; i < dataset.rows(); ++i) {
      rows_by_class_[static_cast<std::size_t>(dataset.labels()[static_cast<std::size_t>(i)])]
          .push_back(i);
    }
    const auto need = static_cast<std::size_t>(spec_.s + spec_.q);
    for (std::size_t c = 0; c < rows_by_class_.size(); ++c) {
      if (rows_by_class_[c].size() >= need) eligible_.push_back(static_cast<int>(c));
    }
    if (eligible_.size() < static_cast<std::size_t>(spec_.w)) {
      throw InsufficientData("dataset has " + std::to_string(eligible_.size()) +
                             " classes with >= " + std::to_string(need) + " rows, need " +
                             std::to_string(spec_.w));
    }
    if (eligible_.size() != rows_by_class_.size()) {
      // Sampling uniformly among a subset would silently bias the protocol.
      throw InsufficientData("some classes have fewer than s+q = " + std::to_string(need) +
                             " rows");
    }
  }

  const EpisodeSpec& spec() const noexcept { return spec_; }

  Episode sample(std::uint64_t draw_index) const {
    const int w = spec_.w;
    const int s = spec_.s;
    const int q = spec_.q;
    KeyedRng rng(spec_.seed, draw_index);
    const std::vector<int> classes = rng.choose(eligible_, static_cast<std::size_t>(w));

    const Eigen::Index d = dataset_->dim();
    Matrix xs(w * s, d);
    Matrix xq(w * q, d);
    std::vector<int> ys(static_cast<std::size_t>(w * s));
    std::vector<int> yq(static_cast<std::size_t>(w * q));
    for (int j = 0; j < w; ++j) {
      const std::vector<Eigen::Index> picked =
          rng.choose(rows_by_class_[static_cast<std::size_t>(classes[static_cast<std::size_t>(j)])],
                     static_cast<std::size_t>(s + q));
      for (int k = 0; k < s; ++k) {
        xs.row(j * s + k) = dataset_->data().row(picked[static_cast<std::size_t>(k)]);
        ys[static_cast<std::size_t>(j * s + k)] = j;
      }
      for (int k = 0; k < q; ++k) {
        xq.row(j * q + k) = dataset_->data().row(picked[static_cast<std::size_t>(s + k)]);
        yq[static_cast<std::size_t>(j * q + k)] = j;
      }
    }
    return Episode{FeatureSet(std::move(xs), std::move(ys), w),
                   FeatureSet(std::move(xq), std::move(yq), w), w, s, q, classes};
  }

 private:
  const FeatureSet* dataset_;
  EpisodeSpec spec_;
  std::vector<std::vector<Eigen::Index>> rows_by_class_;
  std::vector<int> eligible_;
};

inline Episode sample_episode(const FeatureSet& dataset, const EpisodeSpec& spec,
                              std::uint64_t draw_index) {
  return EpisodeSampler(dataset, spec).sample(draw_index);
}

/// Shape of a synthetic Gaussian-blob generator.
struct SynthParams {
  int dim = 64;
  double center_scale = 100.0;
  double sigma = 1.0;
};

namespace detail {

inline Matrix synth_centers(KeyedRng& rng, int classes, const SynthParams& p) {
  Matrix c(classes, p.dim);
  for (Eigen::Index j = 0; j < c.rows(); ++j) {
    for (Eigen::Index k = 0; k < c.cols(); ++k) c(j, k) = p.center_scale * rng.uniform();
  }
  return c;
}

inline void synth_rows(KeyedRng& rng, const RowVector& center, double sigma, Matrix& out,
                       Eigen::Index first, int count) {
  for (int r = 0; r < count; ++r) {
    for (Eigen::Index k = 0; k < out.cols(); ++k) {
      out(first + r, k) = std::max(0.0, center(k) + sigma * rng.normal());
    }
  }
}

inline void check_synth(const SynthParams& p) {
  if (p.dim < 1) throw InvalidParameter("dim must be >= 1");
  if (!(p.sigma >= 0.0)) throw InvalidParameter("sigma must be >= 0");
  if (!(p.center_scale >= 0.0)) throw InvalidParameter("center_scale must be >= 0");
}

}  // namespace detail

/**
 * Synthetic episode: w centers uniform in [0, center_scale]^dim, samples are
 * center + N(0, sigma^2 I), clamped at 0. Deterministic in `seed`.
 */
inline Episode synth_episode(const EpisodeSpec& spec, const SynthParams& p, std::uint64_t seed) {
  spec.validate();
  detail::check_synth(p);
  KeyedRng rng(seed, 0);
  const Matrix centers = detail::synth_centers(rng, spec.w, p);
  Matrix xs(spec.w * spec.s, p.dim);
  Matrix xq(spec.w * spec.q, p.dim);
  std::vector<int> ys;
  std::vector<int> yq;
  for (int j = 0; j < spec.w; ++j) {
    detail::synth_rows(rng, centers.row(j), p.sigma, xs, j * spec.s, spec.s);
    detail::synth_rows(rng, centers.row(j), p.sigma, xq, j * spec.q, spec.q);
    ys.insert(ys.end(), static_cast<std::size_t>(spec.s), j);
    yq.insert(yq.end(), static_cast<std::size_t>(spec.q), j);
  }
  return Episode{FeatureSet(std::move(xs), std::move(ys), spec.w),
                 FeatureSet(std::move(xq), std::move(yq), spec.w), spec.w, spec.s, spec.q, {}};
}

/// Synthetic labeled dataset with `per_class` rows for each of `classes`.
inline FeatureSet synth_dataset(int classes, int per_class, const SynthParams& p,
                                std::uint64_t seed) {
  if (classes < 1 || per_class < 1) throw InvalidParameter("classes and per_class must be >= 1");
  detail::check_synth(p);
  KeyedRng rng(seed, 0);
  const Matrix centers = detail::synth_centers(rng, classes, p);
  Matrix x(static_cast<Eigen::Index>(classes) * per_class, p.dim);
  std::vector<int> y;
  y.reserve(static_cast<std::size_t>(x.rows()));
  for (int j = 0; j < classes; ++j) {
    detail::synth_rows(rng, centers.row(j), p.sigma, x, static_cast<Eigen::Index>(j) * per_class,
                       per_class);
    y.insert(y.end(), static_cast<std::size_t>(per_class), j);
  }
  return FeatureSet(std::move(x), std::move(y), classes);
}

}  // namespace lstmap

#endif  // LSTMAP_EPISODES_HPP
