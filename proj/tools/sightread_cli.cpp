// Command-line front end: run experiments, compare the two learners, emit
// the constraint tradeoff sweep, and sanity-check score files.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sightread/sightread.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

struct CliOverrides {
  std::string config_path;
  std::string score_path;
  std::string out_dir;
  std::string method;
  std::vector<std::uint64_t> seeds;
  long episodes = -1;
};

sightread::ExperimentConfig load_config(const CliOverrides& cli) {
  namespace fs = std::filesystem;
  sightread::KeyValueConfig kv;
  fs::path base;
  if (!cli.config_path.empty()) {
    kv = sightread::KeyValueConfig::load(cli.config_path);
    base = fs::path(cli.config_path).parent_path();
  }
  auto cfg = sightread::ExperimentConfig::from_kv(kv, base);
  if (!cli.score_path.empty())
    cfg.score_path = fs::absolute(cli.score_path).lexically_normal().string();
  if (!cli.out_dir.empty()) cfg.output_dir = cli.out_dir;
  if (!cli.seeds.empty()) cfg.seeds = cli.seeds;
  if (cli.episodes > 0) cfg.episodes = static_cast<std::size_t>(cli.episodes);
  if (!cli.method.empty()) {
    if (cli.method == "rate")
      cfg.method = sightread::RunMethod::rate;
    else if (cli.method == "td")
      cfg.method = sightread::RunMethod::td;
    else if (cli.method == "both")
      cfg.method = sightread::RunMethod::both;
    else
      throw sightread::ConfigError("--method must be rate, td or both");
  }
  if (!fs::exists(cfg.score_path))
    throw sightread::ConfigError("score file does not exist: " +
                                 cfg.score_path);
  return cfg;
}

int cmd_run(const CliOverrides& cli) {
  const auto cfg = load_config(cli);
  const auto outputs = sightread::run_experiment(cfg);
  for (const auto& f : outputs.files) std::cout << f.string() << '\n';
  return kExitOk;
}

int cmd_compare(const CliOverrides& cli) {
  auto cfg = load_config(cli);
  cfg.method = sightread::RunMethod::both;
  const auto outputs = sightread::run_experiment(cfg);
  const auto cmp = sightread::compare_methods(outputs.rate, outputs.td,
                                              cfg.compare_threshold);
  const std::string table = sightread::format_comparison(cmp);
  const auto path = std::filesystem::path(cfg.output_dir) / "compare.csv";
  sightread::detail::write_file(path, table);
  std::cout << table;
  std::cout << path.string() << '\n';
  return kExitOk;
}

int cmd_tradeoff(const CliOverrides& cli, long resolution) {
  auto cfg = load_config(cli);
  if (resolution >= 2)
    cfg.tradeoff_resolution = static_cast<std::size_t>(resolution);
  const auto path = sightread::emit_tradeoff_curve(cfg);
  std::cout << path.string() << '\n';
  return kExitOk;
}

int cmd_parse_check(const std::string& score_path) {
  const auto text = sightread::load_text_file(score_path);
  const auto score = sightread::parse_score(text);
  std::cout << "phrases: " << score.phrases.size() << '\n';
  std::cout << "notes: " << score.note_count() << '\n';
  std::cout << "tempo: " << score.tempo << '\n';
  std::cout << "tonic: " << score.tonic_frequency << '\n';
  std::cout << "canonical:\n" << sightread::format_score(score);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sight-reading learning simulator"};
  app.require_subcommand(1);

  CliOverrides cli;
  long resolution = -1;
  std::string check_score;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("--config", cli.config_path, "config file");
    if (need_config) opt->required();
    sub->add_option("--score", cli.score_path, "score file override");
    sub->add_option("--seed", cli.seeds, "seed (repeatable)");
    sub->add_option("--episodes", cli.episodes, "episode count override");
    sub->add_option("--method", cli.method, "rate, td or both");
    sub->add_option("--out", cli.out_dir, "output directory override");
  };

  auto* run = app.add_subcommand("run", "run a learning experiment");
  add_common(run, true);
  auto* compare =
      app.add_subcommand("compare", "run both methods and tabulate them");
  add_common(compare, true);
  auto* tradeoff =
      app.add_subcommand("tradeoff", "emit the constraint tradeoff sweep");
  add_common(tradeoff, false);
  tradeoff->add_option("--resolution", resolution, "number of lambda points");
  auto* parse_check =
      app.add_subcommand("parse-check", "validate a score file");
  parse_check->add_option("--score", check_score, "score file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(cli);
    if (compare->parsed()) return cmd_compare(cli);
    if (tradeoff->parsed()) return cmd_tradeoff(cli, resolution);
    if (parse_check->parsed()) return cmd_parse_check(check_score);
  } catch (const sightread::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const sightread::ParseError& e) {
    std::cerr << "score error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return kExitOk;
}
