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
#ifndef LSTMAP_TOOLS_CLI_HPP
#define LSTMAP_TOOLS_CLI_HPP

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lstmap/lstmap.hpp"

namespace lstmap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

struct EpisodeFlags {
  EpisodeSpec spec;
  EvalConfig cfg;
  bool no_lst = false;
};

inline void add_lst_flags(CLI::App* cmd, LstParams& lst) {
  cmd->add_option("--beta", lst.beta, "power exponent")->capture_default_str();
  cmd->add_option("--delta", lst.delta, "first semi-normalization strength")->capture_default_str();
  cmd->add_option("--gamma", lst.gamma, "second semi-normalization strength")->capture_default_str();
  cmd->add_option("--epsilon", lst.epsilon, "power transform shift")->capture_default_str();
  cmd->add_flag("--center-before-norm", lst.center_before_norm,
                "divide by the norm of the centered row in the last step");
}

inline void add_episode_flags(CLI::App* cmd, EpisodeFlags& f) {
  cmd->add_option("--w", f.spec.w, "classes per episode")->capture_default_str();
  cmd->add_option("--s", f.spec.s, "labeled shots per class")->capture_default_str();
  cmd->add_option("--q", f.spec.q, "queries per class")->capture_default_str();
  cmd->add_option("--episodes", f.cfg.n_episodes, "number of episodes")->capture_default_str();
  cmd->add_option("--seed", f.spec.seed, "episode stream seed")->capture_default_str();
  cmd->add_option("--workers", f.cfg.workers, "parallel episode workers")->capture_default_str();
  add_lst_flags(cmd, f.cfg.lst);
  cmd->add_option("--lambda", f.cfg.map.lambda, "Sinkhorn cost multiplier")->capture_default_str();
  cmd->add_option("--alpha", f.cfg.map.alpha, "center learning rate")->capture_default_str();
  cmd->add_option("--steps", f.cfg.map.n_steps, "outer MAP iterations")->capture_default_str();
  cmd->add_option("--sinkhorn-iter", f.cfg.map.sinkhorn_max_iter, "Sinkhorn iteration cap")
      ->capture_default_str();
  cmd->add_option("--sinkhorn-tol", f.cfg.map.sinkhorn_tol, "Sinkhorn marginal tolerance")
      ->capture_default_str();
  cmd->add_option("--kmeans-iter", f.cfg.baseline.kmeans_iter, "k-means rounds")->capture_default_str();
  cmd->add_option("--gmm-iter", f.cfg.baseline.gmm_iter, "GMM EM rounds")->capture_default_str();
  cmd->add_flag("--no-lst", f.no_lst, "classify raw features without the transform");
}

inline CLI::Validator method_validator() {
  return CLI::IsMember({"map", "kmeans", "gmm", "nn"});
}

inline io::ReportContext context(const EpisodeFlags& f, std::string method,
                                 const std::string& features) {
  return io::ReportContext{std::move(method), std::filesystem::path(features).filename().string(),
                           f.spec, f.cfg.lst, f.cfg.map};
}

inline void dump_norms(const FeatureSet& dataset, const EpisodeFlags& f,
                       const std::filesystem::path& path) {
  const Episode raw = sample_episode(dataset, f.spec, 0);
  const Episode out = lst_transform(raw, f.cfg.lst);
  std::ofstream csv(path, std::ios::trunc);
  if (!csv) throw io::IoError("cannot open " + path.string());
  csv << "row,split,label,norm_before,norm_after\n";
  char buf[96];
  auto emit = [&](const FeatureSet& before, const FeatureSet& after, const char* split,
                  Eigen::Index offset) {
    for (Eigen::Index i = 0; i < before.rows(); ++i) {
      std::snprintf(buf, sizeof buf, "%.9g,%.9g", before.data().row(i).norm(),
                    after.data().row(i).norm());
      csv << offset + i << ',' << split << ',' << before.labels()[static_cast<std::size_t>(i)] << ','
          << buf << '\n';
    }
  };
  emit(raw.support, out.support, "support", 0);
  emit(raw.query, out.query, "query", raw.support.rows());
}

inline std::vector<std::size_t> parse_episode_spec(const std::string& text, EpisodeSpec& spec) {
  std::vector<std::size_t> parts;
  std::stringstream ss(text);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) parts.push_back(std::stoull(item));
  } catch (const std::logic_error&) {
    throw CLI::ValidationError("--per-episode-spec", "expected w,s,q,seed");
  }
  if (parts.size() != 4) throw CLI::ValidationError("--per-episode-spec", "expected w,s,q,seed");
  spec.w = static_cast<int>(parts[0]);
  spec.s = static_cast<int>(parts[1]);
  spec.q = static_cast<int>(parts[2]);
  spec.seed = parts[3];
  return parts;
}

}  // namespace detail

/**
 * Entry point shared by the executable and the tests.
 *
 * Reports go to `out`; diagnostics, timing and usage text go to `err`.
 * Returns 0 on success, 1 on data errors (or an invalid report) and 2 on
 * usage errors.
 */
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transductive few-shot classification on pre-extracted features", "lstmap"};
  app.require_subcommand(1);

  // transform
  auto* transform = app.add_subcommand("transform", "apply the feature transform to a file");
  std::string t_in;
  std::string t_out;
  std::string t_episode;
  std::size_t t_draws = 1;
  LstParams t_lst;
  transform->add_option("--in", t_in, "input feature file")->required();
  transform->add_option("--out", t_out, "output feature file")->required();
  detail::add_lst_flags(transform, t_lst);
  transform->add_option("--per-episode-spec", t_episode,
                        "w,s,q,seed: write fully transformed episodes instead");
  transform->add_option("--draws", t_draws, "episodes to dump with --per-episode-spec")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  // run
  auto* run = app.add_subcommand("run", "evaluate one method over an episode stream");
  detail::EpisodeFlags r_flags;
  std::string r_features;
  std::string r_method = "map";
  std::string r_norms;
  run->add_option("--features", r_features, "feature file")->required();
  run->add_option("--method", r_method, "classifier")->capture_default_str()->check(detail::method_validator());
  run->add_option("--dump-norms", r_norms, "write row norms of draw 0 before/after the transform as CSV");
  detail::add_episode_flags(run, r_flags);

  // compare
  auto* cmp = app.add_subcommand("compare", "paired comparison of two methods on shared episodes");
  detail::EpisodeFlags c_flags;
  c_flags.cfg.n_episodes = 1000;
  std::string c_features;
  std::string c_a;
  std::string c_b;
  cmp->add_option("--features", c_features, "feature file")->required();
  cmp->add_option("--method-a", c_a, "baseline method (H0: acc(a) >= acc(b))")
      ->required()
      ->check(detail::method_validator());
  cmp->add_option("--method-b", c_b, "candidate method")->required()->check(detail::method_validator());
  detail::add_episode_flags(cmp, c_flags);

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic Gaussian-blob feature file");
  std::string s_out;
  int s_classes = 20;
  int s_per_class = 600;
  SynthParams s_params;
  std::uint64_t s_seed = 0;
  synth->add_option("--out", s_out, "output feature file")->required();
  synth->add_option("--classes", s_classes, "number of classes")->capture_default_str();
  synth->add_option("--per-class", s_per_class, "rows per class")->capture_default_str();
  synth->add_option("--dim", s_params.dim, "feature dimension")->capture_default_str();
  synth->add_option("--center-scale", s_params.center_scale, "centers uniform in [0, scale]^dim")
      ->capture_default_str();
  synth->add_option("--sigma", s_params.sigma, "noise standard deviation")->capture_default_str();
  synth->add_option("--seed", s_seed, "generator seed")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, err, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*transform) {
      const FeatureSet in = io::read_features(t_in);
      if (t_episode.empty()) {
        t_lst.validate();
        io::write_features(power_semi_normalize(in, t_lst), t_out);
        return kExitOk;
      }
      EpisodeSpec spec;
      detail::parse_episode_spec(t_episode, spec);
      const EpisodeSampler sampler(in, spec);
      for (std::size_t k = 0; k < t_draws; ++k) {
        const Episode e = lst_transform(sampler.sample(k), t_lst);
        std::vector<int> labels = e.support.labels();
        labels.insert(labels.end(), e.query.labels().begin(), e.query.labels().end());
        const FeatureSet joint(stack_rows(e.support.data(), e.query.data()), std::move(labels), e.w);
        const std::string path = t_draws == 1 ? t_out : t_out + "." + std::to_string(k);
        io::write_features(joint, path);
      }
      return kExitOk;
    }

    if (*run) {
      const FeatureSet data = io::read_features(r_features);
      const Method method = *parse_method(r_method);
      r_flags.cfg.apply_lst = !r_flags.no_lst;
      if (!r_norms.empty()) detail::dump_norms(data, r_flags, r_norms);
      const EvalReport report = evaluate(data, r_flags.spec, method, r_flags.cfg);
      out << io::format_report(report, detail::context(r_flags, r_method, r_features)) << '\n';
      err << "mean_ms_per_episode=" << report.mean_ms << '\n';
      if (!report.valid()) {
        err << "error: " << report.skipped << " of " << report.n_episodes + report.skipped
            << " episodes failed\n";
        return kExitData;
      }
      return kExitOk;
    }

    if (*cmp) {
      const FeatureSet data = io::read_features(c_features);
      c_flags.cfg.apply_lst = !c_flags.no_lst;
      const CompareReport report =
          compare(data, c_flags.spec, *parse_method(c_a), *parse_method(c_b), c_flags.cfg);
      out << io::format_report(report.a, detail::context(c_flags, c_a, c_features)) << '\n';
      out << io::format_report(report.b, detail::context(c_flags, c_b, c_features)) << '\n';
      out << io::format_comparison(report, c_a, c_b) << '\n';
      err << "mean_ms_per_episode=" << report.a.mean_ms << '\n';
      if (report.test.zero_variance) err << "warning: all paired differences are equal\n";
      if (!report.a.valid()) {
        err << "error: " << report.a.skipped << " episodes failed\n";
        return kExitData;
      }
      return kExitOk;
    }

    if (*synth) {
      io::write_features(synth_dataset(s_classes, s_per_class, s_params, s_seed), s_out);
      return kExitOk;
    }
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidParameter& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace lstmap::cli

#endif  // LSTMAP_TOOLS_CLI_HPP
