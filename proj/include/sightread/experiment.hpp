#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sightread/config.hpp"
#include "sightread/constraints.hpp"
#include "sightread/learner.hpp"
#include "sightread/notes.hpp"
#include "sightread/pomdp.hpp"

namespace sightread {

struct RunSeries {
  std::uint64_t seed = 0;
  std::vector<EpisodeResult> episodes;
  std::vector<double> final_values;       // terminal V snapshot
  std::vector<double> final_policy_rows;  // terminal pi, row-major
};

struct RunOutputs {
  std::vector<RunSeries> rate;
  std::vector<RunSeries> td;
  std::vector<std::filesystem::path> files;
};

namespace detail {

inline std::string method_name(LearnerConfig::Method m) {
  return m == LearnerConfig::Method::rate ? "rate" : "td";
}

inline std::string episodes_csv(const RunSeries& series) {
  std::ostringstream out;
  out << "episode,total_reward,mean_delta,mean_beta,mean_dc1,mean_dc2,"
         "min_product,zeta_selected\n";
  for (std::size_t i = 0; i < series.episodes.size(); ++i) {
    const EpisodeResult& e = series.episodes[i];
    out << i << ',' << detail::format_number(e.total_reward) << ','
        << detail::format_number(e.mean_delta) << ',' << detail::format_number(e.mean_beta)
        << ',' << detail::format_number(e.mean_dc1) << ',' << detail::format_number(e.mean_dc2)
        << ',' << detail::format_number(e.min_product) << ','
        << detail::format_number(e.zeta_selected) << '\n';
  }
  return out.str();
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace detail

inline std::string load_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// One full learning run: score -> segmented phrases -> environment -> episode
// loop. Deterministic in (config, seed, method).
inline RunSeries run_single(const ExperimentConfig& cfg,
                            LearnerConfig::Method method, std::uint64_t seed) {
  const Score score = parse_score(load_text_file(cfg.score_path));
  std::vector<Phrase> phrases = segment_phrases(score, cfg.phrase_window);
  GroupSet groups = cfg.make_groups();

  Environment env(std::move(phrases), std::move(groups), score.tempo, cfg.env,
                  derive_seed(seed, 0x454E56ULL /* env stream */));

  LearnerConfig learner = cfg.learner;
  learner.method = method;
  AgentState agent(env.groups().size(),
                   static_cast<std::size_t>(env.action_count()), learner);
  Rng agent_rng(derive_seed(seed, 0xA6E47ULL /* agent stream */));

  RunSeries series;
  series.seed = seed;
  series.episodes.reserve(cfg.episodes);
  for (std::size_t ep = 0; ep < cfg.episodes; ++ep)
    series.episodes.push_back(
        run_episode(env, agent, learner, cfg.solver, agent_rng, seed, ep));

  series.final_values = agent.values.values();
  for (std::size_t s = 0; s < agent.policy.state_count(); ++s) {
    const auto row = agent.policy.distribution(static_cast<int>(s));
    series.final_policy_rows.insert(series.final_policy_rows.end(), row.begin(),
                                    row.end());
  }
  return series;
}

// Runs every (seed, method) combination, seeds in parallel, and writes
// per-seed CSVs, per-seed manifests and an ascending-seed merged CSV per
// method. Identical config + seed gives byte-identical files regardless of
// scheduling.
inline RunOutputs run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);

  std::vector<LearnerConfig::Method> methods;
  if (cfg.method == RunMethod::rate || cfg.method == RunMethod::both)
    methods.push_back(LearnerConfig::Method::rate);
  if (cfg.method == RunMethod::td || cfg.method == RunMethod::both)
    methods.push_back(LearnerConfig::Method::td);

  RunOutputs outputs;
  for (const auto method : methods) {
    std::vector<RunSeries> all(cfg.seeds.size());
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(cfg.seeds.size());
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      workers.emplace_back([&, i] {
        try {
          all[i] = run_single(cfg, method, cfg.seeds[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& err : errors)
      if (err) std::rethrow_exception(err);

    // deterministic merge order
    std::vector<std::size_t> order(all.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return cfg.seeds[a] < cfg.seeds[b];
    });

    std::ostringstream merged;
    merged << "seed,episode,total_reward,mean_delta,mean_beta,mean_dc1,"
              "mean_dc2,min_product,zeta_selected\n";
    for (const std::size_t i : order) {
      const RunSeries& series = all[i];
      const std::string name = detail::method_name(method) + "_seed" +
                               std::to_string(series.seed);
      const fs::path csv_path = fs::path(cfg.output_dir) / (name + ".csv");
      detail::write_file(csv_path, detail::episodes_csv(series));
      outputs.files.push_back(csv_path);

      ExperimentConfig resolved = cfg;
      resolved.method = method == LearnerConfig::Method::rate ? RunMethod::rate
                                                              : RunMethod::td;
      resolved.seeds = {series.seed};
      const fs::path manifest_path =
          fs::path(cfg.output_dir) / (name + ".manifest.txt");
      detail::write_file(manifest_path, resolved.serialize());
      outputs.files.push_back(manifest_path);

      const std::string csv = detail::episodes_csv(series);
      std::istringstream lines(csv);
      std::string line;
      std::getline(lines, line);  // drop header
      while (std::getline(lines, line))
        merged << series.seed << ',' << line << '\n';
    }
    const fs::path merged_path =
        fs::path(cfg.output_dir) / (detail::method_name(method) + "_all.csv");
    detail::write_file(merged_path, merged.str());
    outputs.files.push_back(merged_path);

    auto& bucket =
        method == LearnerConfig::Method::rate ? outputs.rate : outputs.td;
    for (const std::size_t i : order) bucket.push_back(std::move(all[i]));
  }
  return outputs;
}

struct SeedComparison {
  std::uint64_t seed = 0;
  double rate_final_mean = 0.0;
  double td_final_mean = 0.0;
  long rate_episodes_to_threshold = -1;  // -1 encodes "never"
  long td_episodes_to_threshold = -1;
  long sign_rate_above = 0;  // episodes where rate reward > td reward
  long sign_td_above = 0;
  long sign_ties = 0;
};

struct Comparison {
  std::vector<SeedComparison> per_seed;
  double rate_final_mean = 0.0;
  double td_final_mean = 0.0;
  std::size_t final_window = 0;
  double threshold = 0.0;
};

namespace detail {

inline double final_window_mean(const std::vector<double>& rewards,
                                std::size_t window) {
  const std::size_t n = std::min(window, rewards.size());
  double sum = 0.0;
  for (std::size_t i = rewards.size() - n; i < rewards.size(); ++i)
    sum += rewards[i];
  return sum / static_cast<double>(n);
}

inline long episodes_to_threshold(const std::vector<double>& rewards,
                                  double threshold) {
  for (std::size_t i = 0; i < rewards.size(); ++i)
    if (rewards[i] >= threshold) return static_cast<long>(i);
  return -1;
}

}  // namespace detail

// Paired per-seed summary of the two methods; caller renders it, no verdict
// is attached.
inline Comparison compare_methods(const std::vector<RunSeries>& rate,
                                  const std::vector<RunSeries>& td,
                                  double threshold,
                                  std::size_t final_window = 100) {
  if (rate.size() != td.size())
    throw std::invalid_argument("compare_methods: seed count mismatch");
  Comparison cmp;
  cmp.threshold = threshold;
  cmp.final_window = final_window;
  double rate_sum = 0.0;
  double td_sum = 0.0;
  for (std::size_t i = 0; i < rate.size(); ++i) {
    if (rate[i].seed != td[i].seed)
      throw std::invalid_argument("compare_methods: seed sets differ");
    if (rate[i].episodes.size() != td[i].episodes.size())
      throw std::invalid_argument("compare_methods: episode count mismatch");
    std::vector<double> r_rewards;
    std::vector<double> t_rewards;
    for (const auto& e : rate[i].episodes) r_rewards.push_back(e.total_reward);
    for (const auto& e : td[i].episodes) t_rewards.push_back(e.total_reward);

    SeedComparison sc;
    sc.seed = rate[i].seed;
    sc.rate_final_mean = detail::final_window_mean(r_rewards, final_window);
    sc.td_final_mean = detail::final_window_mean(t_rewards, final_window);
    sc.rate_episodes_to_threshold =
        detail::episodes_to_threshold(r_rewards, threshold);
    sc.td_episodes_to_threshold =
        detail::episodes_to_threshold(t_rewards, threshold);
    for (std::size_t e = 0; e < r_rewards.size(); ++e) {
      if (r_rewards[e] > t_rewards[e])
        ++sc.sign_rate_above;
      else if (t_rewards[e] > r_rewards[e])
        ++sc.sign_td_above;
      else
        ++sc.sign_ties;
    }
    rate_sum += sc.rate_final_mean;
    td_sum += sc.td_final_mean;
    cmp.per_seed.push_back(sc);
  }
  cmp.rate_final_mean = rate_sum / static_cast<double>(rate.size());
  cmp.td_final_mean = td_sum / static_cast<double>(td.size());
  return cmp;
}

inline std::string format_comparison(const Comparison& cmp) {
  std::ostringstream out;
  auto to_thresh = [](long e) {
    return e < 0 ? std::string("inf") : std::to_string(e);
  };
  out << "seed,rate_final" << cmp.final_window << ",td_final"
      << cmp.final_window
      << ",rate_episodes_to_threshold,td_episodes_to_threshold,"
         "sign_rate_above,sign_td_above,sign_ties\n";
  for (const SeedComparison& sc : cmp.per_seed) {
    out << sc.seed << ',' << detail::format_number(sc.rate_final_mean) << ','
        << detail::format_number(sc.td_final_mean) << ','
        << to_thresh(sc.rate_episodes_to_threshold) << ','
        << to_thresh(sc.td_episodes_to_threshold) << ',' << sc.sign_rate_above
        << ',' << sc.sign_td_above << ',' << sc.sign_ties << '\n';
  }
  out << "aggregate," << detail::format_number(cmp.rate_final_mean) << ','
      << detail::format_number(cmp.td_final_mean) << ",,,,,\n";
  out << "threshold," << detail::format_number(cmp.threshold) << ",,,,,,\n";
  return out.str();
}

// Attention sweep for the constraint tradeoff plot: lambda, both errors and
// their product, with the uncertainty floor enforced on every row.
inline std::string tradeoff_curve_csv(const UncertaintyParams& params,
                                      double k1, double k2, double floor,
                                      std::size_t resolution) {
  if (resolution < 2)
    throw std::invalid_argument("tradeoff_curve: resolution must be >= 2");
  std::ostringstream out;
  out << "lambda,d_c1,d_c2,product\n";
  for (std::size_t i = 0; i < resolution; ++i) {
    const double lambda =
        static_cast<double>(i) / static_cast<double>(resolution - 1);
    const ErrorPair e = tradeoff_errors(lambda, params, k1, k2, floor);
    out << detail::format_number(lambda) << ',' << detail::format_number(e.d_c1) << ','
        << detail::format_number(e.d_c2) << ',' << detail::format_number(e.d_c1 * e.d_c2)
        << '\n';
  }
  return out.str();
}

inline std::filesystem::path emit_tradeoff_curve(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const fs::path path = fs::path(cfg.output_dir) / "tradeoff.csv";
  detail::write_file(
      path, tradeoff_curve_csv({cfg.tradeoff_delta, cfg.env.uncertainty_m},
                               cfg.tradeoff_k1, cfg.tradeoff_k2,
                               cfg.tradeoff_floor, cfg.tradeoff_resolution));
  return path;
}

}  // namespace sightread
