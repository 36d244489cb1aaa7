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
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "lstmap/lstmap.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace lstmap;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

// Worst marginal violation and smallest entry seen over every plan the suite
// solves, checked by the feasibility criterion at the end.
struct FeasibilityLog {
  double worst_violation = 0.0;
  double min_entry = std::numeric_limits<double>::infinity();
  std::size_t plans = 0;
  std::size_t unconverged = 0;

  void record(const SinkhornResult& r, const Vector& a, const Vector& b) {
    if (!r.converged) {
      ++unconverged;
      return;
    }
    record(r.plan.m, a, b);
  }

  void record(const Matrix& m, const Vector& a, const Vector& b) {
    const double rows = (m.rowwise().sum() - a).cwiseAbs().maxCoeff();
    const double cols = (m.colwise().sum().transpose() - b).cwiseAbs().maxCoeff();
    worst_violation = std::max({worst_violation, rows, cols});
    min_entry = std::min(min_entry, m.minCoeff());
    ++plans;
  }
};

FeasibilityLog g_feasibility;

// Episode with centers base*1 + (sep/sqrt2)*e_j, so every pair of centers is
// `sep` apart, and isotropic noise of scale `sigma`.
Episode blob_episode(std::uint64_t seed, int w, int s, int q, int dim, double sep, double sigma,
                     double base) {
  KeyedRng rng(seed, 77);
  const double step = sep / std::sqrt(2.0);
  auto fill = [&](int per_class) {
    Matrix x(w * per_class, dim);
    for (int j = 0; j < w; ++j) {
      for (int r = 0; r < per_class; ++r) {
        for (int k = 0; k < dim; ++k) {
          x(j * per_class + r, k) = std::max(0.0, base + (k == j ? step : 0.0) + sigma * rng.normal());
        }
      }
    }
    return x;
  };
  Matrix xs = fill(s);
  Matrix xq = fill(q);
  return testing_helpers::make_episode(std::move(xs), std::move(xq), w, s, q);
}

Outcome sinkhorn_matches_polytope_oracle() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  double solver_seconds = 0.0;
  const double lambda = 2.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = trial % 2 == 0 ? 3 : 4;
    const Eigen::Index m = trial % 2 == 0 ? 2 : 3;
    const Matrix l = oracle::random_matrix(rng, n, m, 0.0, 1.0);
    std::uniform_real_distribution<double> mass(0.5, 1.5);
    Vector a(n);
    for (Eigen::Index i = 0; i < n; ++i) a(i) = mass(rng);
    Vector b(m);
    for (Eigen::Index j = 0; j < m; ++j) b(j) = mass(rng);
    b *= a.sum() / b.sum();
    b(m - 1) = a.sum() - b.head(m - 1).sum();

    const auto t0 = Clock::now();
    const SinkhornResult got = sinkhorn(CostMatrix{l}, a, b, lambda, {10000, 1e-12, false});
    solver_seconds += seconds_since(t0);
    g_feasibility.record(got, a, b);

    const oracle::Mat want = oracle::EntropicPolytope(l, a, b, lambda).solve(n == 3 ? 41 : 9);
    worst = std::max(worst, (got.plan.m - want).cwiseAbs().maxCoeff());
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "max entry error %.3g (tol 1e-3), solver time %.3f s (limit 1 s)", worst,
                solver_seconds);
  return {worst <= 1e-3 && solver_seconds < 1.0, buf};
}

Outcome qr_is_isometric() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> rows(2, 100);
  double worst = 0.0;
  bool widths_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = trial == 0 ? 80 : rows(rng);
    const FeatureSet x(oracle::random_matrix(rng, n, 640, 0.0, 1.0), std::vector<int>(n, 0), 1);
    const FeatureSet r = qr_reduce(x);
    widths_ok = widths_ok && r.dim() == std::min<Eigen::Index>(640, n);
    for (int i = 0; i < n; ++i) {
      for (int k = i + 1; k < n; ++k) {
        const double before = std::sqrt(oracle::sq_dist(x.data().row(i), x.data().row(k)));
        const double after = std::sqrt(oracle::sq_dist(r.data().row(i), r.data().row(k)));
        worst = std::max(worst, std::abs(after - before) / before);
      }
    }
  }
  const Episode e = synth_episode({5, 1, 15, 3}, {640, 10.0, 1.0}, 3);
  const Eigen::Index one_shot = lst_transform(e, LstParams{}).query.dim();
  char buf[160];
  std::snprintf(buf, sizeof buf, "max relative distance error %.3g (tol 1e-9), widths %s, 5/1/15 width %ld",
                worst, widths_ok ? "min(d,n)" : "WRONG", static_cast<long>(one_shot));
  return {worst <= 1e-9 && widths_ok && one_shot == 80, buf};
}

Outcome lst_reduces_norm_skewness() {
  double worst_ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    // Heavy log-normal entries; 640 of them are far from enough for the
    // row norms to look normal.
    auto batch = [&](int n) {
      Matrix x(n, 640);
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 640; ++k) x(i, k) = std::exp(2.0 * z(rng));
      }
      return x;
    };
    const Episode e = testing_helpers::make_episode(batch(25), batch(75), 5, 5, 15);
    const Episode out = lst_transform(e, LstParams{0.5, 0.3, 0.9, 1e-6});
    std::vector<double> before;
    std::vector<double> after;
    for (Eigen::Index i = 0; i < 100; ++i) {
      const bool s = i < 25;
      const Eigen::Index r = s ? i : i - 25;
      before.push_back((s ? e.support : e.query).data().row(r).norm());
      after.push_back((s ? out.support : out.query).data().row(r).norm());
    }
    worst_ratio = std::max(worst_ratio, std::abs(oracle::skewness(after)) / std::abs(oracle::skewness(before)));
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "worst |skew after|/|skew before| over 20 seeds %.3f (limit 0.5)", worst_ratio);
  return {worst_ratio <= 0.5, buf};
}

Outcome separable_all_methods() {
  const auto t0 = Clock::now();
  EvalConfig cfg;
  cfg.n_episodes = 1000;
  const EpisodeSource source = [](std::uint64_t i) { return blob_episode(i, 5, 1, 15, 16, 10.0, 1.0, 20.0); };
  std::string detail;
  bool ok = true;
  for (Method m : {Method::map, Method::kmeans, Method::gmm, Method::nn}) {
    const EvalReport r = evaluate(source, m, cfg);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%.4f ", std::string(method_name(m)).c_str(), r.mean_acc);
    detail += buf;
    ok = ok && r.skipped == 0 && r.mean_acc >= 0.995;
  }
  const double secs = seconds_since(t0);
  char buf[96];
  std::snprintf(buf, sizeof buf, "(min 0.995), %.2f s (limit 30 s)", secs);
  return {ok && secs < 30.0, detail + buf};
}

Outcome transductive_advantage() {
  EvalConfig cfg;
  cfg.n_episodes = 2000;
  const EpisodeSource source = [](std::uint64_t i) { return blob_episode(i, 5, 1, 15, 8, 2.0, 1.0, 10.0); };
  const CompareReport r = compare(source, Method::nn, Method::map, cfg);
  char buf[160];
  std::snprintf(buf, sizeof buf, "map %.4f vs nn %.4f over %zu episodes, t=%.2f p=%.3g (limit 0.01)", r.b.mean_acc,
                r.a.mean_acc, r.test.n, r.test.t_stat, r.test.p_value);
  return {r.test.n == 2000 && r.b.mean_acc > r.a.mean_acc && r.test.p_value < 0.01, buf};
}

Outcome lambda_limits() {
  std::mt19937_64 rng(11);
  const int w = 5;
  const int q = 4;
  const Vector a = Vector::Ones(w * q);
  const Vector b = Vector::Constant(w, q);
  double worst_uniform = 0.0;
  bool monotone = true;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix l = oracle::random_matrix(rng, w * q, w, 0.0, 1.0);
    const SinkhornResult flat = sinkhorn(CostMatrix{l}, a, b, 1e-6, {1000, 1e-9, false});
    g_feasibility.record(flat, a, b);
    const Matrix rows = flat.plan.m.array().colwise() / flat.plan.m.rowwise().sum().array();
    worst_uniform = std::max(worst_uniform, (rows.array() - 1.0 / w).abs().maxCoeff());
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {0.1, 1.0, 10.0, 100.0}) {
      // Scaling converges slowly at low temperature, hence the large cap.
      const SinkhornResult r = sinkhorn(CostMatrix{l}, a, b, lambda, {2000000, 1e-7, false});
      g_feasibility.record(r, a, b);
      const double h = plan_entropy(r.plan.m);
      monotone = monotone && h <= previous + 1e-12;
      previous = h;
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "max |row-normalized - 1/w| at 1e-6 = %.3g (tol 1e-3), entropy %s", worst_uniform,
                monotone ? "nonincreasing" : "NOT monotone");
  return {worst_uniform <= 1e-3 && monotone, buf};
}

Outcome map_plans_feasible() {
  // Adds the final plans of full MAP runs on episodes of several shapes.
  // Plans flagged as unconverged are reported but are not solutions.
  const MapParams params{10.0, 0.3, 20, 1000, 1e-6};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Episode e = lst_transform(synth_episode({5, 1 + static_cast<int>(seed % 5), 15, seed}, {64, 3.0, 1.0}, seed),
                                    LstParams{});
    const MapResult r = map_classify(e, params);
    if (r.unconverged_steps > 0) ++g_feasibility.unconverged;
    else g_feasibility.record(r.plan.m, Vector::Ones(e.query.rows()), Vector::Constant(e.w, e.q));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu plans, worst violation %.3g (tol 1e-6), min entry %.3g, %zu flagged unconverged",
                g_feasibility.plans, g_feasibility.worst_violation, g_feasibility.min_entry,
                g_feasibility.unconverged);
  return {g_feasibility.worst_violation <= 1e-6 && g_feasibility.min_entry > 0.0, buf};
}

Outcome t_test_tail_accuracy() {
  // (t, n) pairs from the center of the distribution out to p ~ 1e-9.
  const std::vector<std::pair<double, int>> cases = {
      {0.0, 10},  {0.1, 5},   {0.5, 30},  {1.0, 3},    {1.3, 12},  {2.0, 8},   {2.5, 50},
      {3.0, 20},  {4.0, 6},   {4.5, 100}, {5.0, 15},   {6.0, 40},  {7.0, 25},  {8.0, 60},
      {9.0, 200}, {10.0, 30}, {12.0, 18}, {6.5, 1000}, {20.0, 9},  {14.0, 13}};
  double worst = 0.0;
  double min_p = 1.0;
  double max_p = 0.0;
  for (const auto& [t, n] : cases) {
    const double nu = n - 1.0;
    const double got = stats::student_t_upper_tail(t, nu);
    const double want = oracle::t_upper_tail_quadrature(t, nu);
    worst = std::max(worst, std::abs(got - want));
    min_p = std::min(min_p, want);
    max_p = std::max(max_p, want);
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "max |p - oracle| %.3g (tol 1e-8), p range [%.3g, %.3g]", worst, min_p, max_p);
  return {worst <= 1e-8 && min_p <= 1e-9 && max_p >= 0.5, buf};
}

Outcome run_is_deterministic() {
  const auto dir = std::filesystem::temp_directory_path() / "lstmap_acceptance";
  std::filesystem::create_directories(dir);
  const std::string file = (dir / "blobs.fsf").string();
  io::write_features(synth_dataset(10, 40, {32, 4.0, 1.0}, 5), file);
  auto run = [&](const std::string& workers) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run({"run", "--features", file, "--episodes", "200", "--seed", "9", "--workers", workers},
                              out, err);
    return std::make_pair(code, out.str());
  };
  const auto one = run("1");
  const auto four = run("4");
  std::filesystem::remove_all(dir);
  return {one.first == 0 && four.first == 0 && one.second == four.second && !one.second.empty(),
          one.second == four.second ? "stdout identical for workers 1 and 4" : "stdout differs"};
}

Outcome episode_throughput() {
  const MapParams params;
  const LstParams lst;
  double worst_ms = 0.0;
  double total_ms = 0.0;
  const int reps = 20;
  for (int k = 0; k < reps; ++k) {
    const Episode raw = synth_episode({5, 1, 15, 0}, {640, 1.0, 0.3}, static_cast<std::uint64_t>(k));
    const auto t0 = Clock::now();
    const MapResult r = map_classify(lst_transform(raw, lst), params);
    const double ms = 1e3 * seconds_since(t0);
    if (r.labels.size() != 75) return {false, "wrong label count"};
    if (k > 0) worst_ms = std::max(worst_ms, ms);  // first run warms caches
    total_ms += ms;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "mean %.2f ms, worst %.2f ms per episode (limit 50 ms)", total_ms / reps, worst_ms);
  return {worst_ms <= 50.0, buf};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"sinkhorn_oracle", sinkhorn_matches_polytope_oracle},
      {"qr_isometry", qr_is_isometric},
      {"lst_norm_skewness", lst_reduces_norm_skewness},
      {"separable_classifiers", separable_all_methods},
      {"transductive_advantage", transductive_advantage},
      {"degenerate_lambda", lambda_limits},
      {"sinkhorn_feasibility", map_plans_feasible},
      {"t_test_tail", t_test_tail_accuracy},
      {"determinism", run_is_deterministic},
      {"throughput", episode_throughput},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
