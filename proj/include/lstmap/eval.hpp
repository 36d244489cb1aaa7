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
#ifndef LSTMAP_EVAL_HPP
#define LSTMAP_EVAL_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lstmap/baselines.hpp"
#include "lstmap/core.hpp"
#include "lstmap/episodes.hpp"
#include "lstmap/lst.hpp"
#include "lstmap/map_classifier.hpp"
#include "lstmap/stats.hpp"

namespace lstmap {

enum class Method { map, kmeans, gmm, nn };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::map: return "map";
    case Method::kmeans: return "kmeans";
    case Method::gmm: return "gmm";
    case Method::nn: return "nn";
  }
  return "unknown";
}

inline std::optional<Method> parse_method(std::string_view s) {
  for (Method m : {Method::map, Method::kmeans, Method::gmm, Method::nn}) {
    if (method_name(m) == s) return m;
  }
  return std::nullopt;
}

struct BaselineParams {
  int kmeans_iter = 20;
  int gmm_iter = 20;
  double var_floor = 1e-6;
};

/// Labels the queries of an already transformed episode.
inline std::vector<int> classify(const Episode& e, Method method, const MapParams& map,
                                 const BaselineParams& base = {}) {
  switch (method) {
    case Method::map: return map_classify(e, map).labels;
    case Method::kmeans: return kmeans_classify(e, base.kmeans_iter).labels;
    case Method::gmm: return gmm_classify(e, base.gmm_iter, base.var_floor).labels;
    case Method::nn: return nn_classify(e);
  }
  throw InvalidParameter("unknown method");
}

/// Fraction of query rows whose predicted label matches.
inline double accuracy(const std::vector<int>& predicted, const FeatureSet& query) {
  if (predicted.size() != query.labels().size()) throw LengthMismatch("prediction count mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == query.labels()[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

struct EvalReport {
  std::vector<double> per_episode_acc;
  double mean_acc = 0.0;
  double ci95_half_width = 0.0;
  std::size_t n_episodes = 0;
  std::size_t skipped = 0;
  /// Mean wall time per episode (transform + classify), milliseconds.
  double mean_ms = 0.0;

  /// A report is usable when at most 1% of the requested episodes failed.
  bool valid() const {
    const std::size_t requested = n_episodes + skipped;
    return requested > 0 && n_episodes > 0 && skipped * 100 <= requested;
  }
};

/// Mean and 1.96 * sample standard error, reduced in index order.
inline EvalReport summarize(std::vector<double> acc, std::size_t skipped) {
  EvalReport r;
  r.n_episodes = acc.size();
  r.skipped = skipped;
  if (!acc.empty()) {
    double sum = 0.0;
    for (double a : acc) sum += a;
    r.mean_acc = sum / static_cast<double>(acc.size());
    if (acc.size() > 1) {
      double ss = 0.0;
      for (double a : acc) ss += (a - r.mean_acc) * (a - r.mean_acc);
      const double sd = std::sqrt(ss / static_cast<double>(acc.size() - 1));
      r.ci95_half_width = 1.96 * sd / std::sqrt(static_cast<double>(acc.size()));
    }
  }
  r.per_episode_acc = std::move(acc);
  return r;
}

struct EvalConfig {
  LstParams lst;
  MapParams map;
  BaselineParams baseline;
  std::size_t n_episodes = 10000;
  unsigned workers = 1;
  /// Skip the transform (features are already in final form).
  bool apply_lst = true;
};

/// Produces the episode for a draw index; must be a pure function.
using EpisodeSource = std::function<Episode(std::uint64_t)>;

namespace detail {

// Runs `body(i)` for i in [0, n) on up to `workers` threads. Work is handed
// out by an atomic counter; results must be written by index.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
  const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) body(i);
  };
  if (threads == 1) {
    loop();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(loop);
  for (auto& th : pool) th.join();
}

struct EpisodeOutcome {
  std::vector<double> acc;  // one per method
  bool ok = false;
  double ms = 0.0;
};

inline std::vector<EpisodeOutcome> run_methods(const EpisodeSource& source, const EvalConfig& cfg,
                                               const std::vector<Method>& methods) {
  cfg.lst.validate();
  cfg.map.validate();
  std::vector<EpisodeOutcome> out(cfg.n_episodes);
  parallel_for(cfg.n_episodes, cfg.workers, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    EpisodeOutcome& o = out[i];
    try {
      const Episode raw = source(static_cast<std::uint64_t>(i));
      const Episode e = cfg.apply_lst ? lst_transform(raw, cfg.lst) : raw;
      for (Method m : methods) o.acc.push_back(accuracy(classify(e, m, cfg.map, cfg.baseline), e.query));
      o.ok = true;
    } catch (const Error&) {
      o.ok = false;
    }
    o.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  });
  return out;
}

inline double mean_ms(const std::vector<EpisodeOutcome>& out) {
  if (out.empty()) return 0.0;
  double total = 0.0;
  for (const auto& o : out) total += o.ms;
  return total / static_cast<double>(out.size());
}

}  // namespace detail

/**
 * Runs `cfg.n_episodes` draws: sample, transform, classify, score.
 * Episodes that raise an lstmap::Error are counted in `skipped`.
 * Per-episode accuracies do not depend on `cfg.workers`.
 */
inline EvalReport evaluate(const EpisodeSource& source, Method method, const EvalConfig& cfg) {
  const auto outcomes = detail::run_methods(source, cfg, {method});
  std::vector<double> acc;
  std::size_t skipped = 0;
  for (const auto& o : outcomes) {
    if (o.ok) acc.push_back(o.acc[0]);
    else ++skipped;
  }
  EvalReport r = summarize(std::move(acc), skipped);
  r.mean_ms = detail::mean_ms(outcomes);
  return r;
}

inline EvalReport evaluate(const FeatureSet& dataset, const EpisodeSpec& spec, Method method,
                           const EvalConfig& cfg) {
  const EpisodeSampler sampler(dataset, spec);
  return evaluate([&](std::uint64_t i) { return sampler.sample(i); }, method, cfg);
}

struct CompareReport {
  EvalReport a;
  EvalReport b;
  stats::TTestResult test;
};

/**
 * Runs two methods on one shared episode stream and tests
 * H0: acc(a) >= acc(b). Only draws where both methods succeeded are paired;
 * a draw that fails is counted as skipped in both reports.
 */
inline CompareReport compare(const EpisodeSource& source, Method method_a, Method method_b,
                             const EvalConfig& cfg) {
  const auto outcomes = detail::run_methods(source, cfg, {method_a, method_b});
  std::vector<double> acc_a;
  std::vector<double> acc_b;
  std::size_t skipped = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++skipped;
      continue;
    }
    acc_a.push_back(o.acc[0]);
    acc_b.push_back(o.acc[1]);
  }
  CompareReport r;
  r.test = stats::paired_t_test(acc_a, acc_b);
  r.a = summarize(std::move(acc_a), skipped);
  r.b = summarize(std::move(acc_b), skipped);
  r.a.mean_ms = r.b.mean_ms = detail::mean_ms(outcomes);
  return r;
}

inline CompareReport compare(const FeatureSet& dataset, const EpisodeSpec& spec, Method method_a,
                             Method method_b, const EvalConfig& cfg) {
  const EpisodeSampler sampler(dataset, spec);
  return compare([&](std::uint64_t i) { return sampler.sample(i); }, method_a, method_b, cfg);
}

}  // namespace lstmap

#endif  // LSTMAP_EVAL_HPP
