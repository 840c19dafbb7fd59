#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sightread/intervals.hpp"
#include "sightread/learner.hpp"
#include "sightread/notes.hpp"
#include "sightread/pomdp.hpp"

namespace sightread {

inline constexpr const char* kArtifactVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// split a bracketed list "[a, b, [c, d]]" into top-level elements
inline std::vector<std::string> split_list(const std::string& value,
                                           const std::string& key) {
  const std::string v = trim(value);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    throw ConfigError(key + ": expected a bracketed list, got '" + value + "'");
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    const char c = v[i];
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

inline double parse_number(const std::string& text, const std::string& key) {
  char* end = nullptr;
  const double x = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0')
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return x;
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Flat "key = value" configuration text: '#' comments, dotted section
// prefixes, vectors and matrices as bracketed lists on one line.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text) {
    KeyValueConfig cfg;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t eol = text.find('\n', pos);
      const std::string_view line =
          text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                         : eol - pos);
      pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
      ++line_no;

      std::string_view body = line;
      // '#' opens a comment only at line start or after whitespace, so sharp
      // pitch names like C# survive inside values
      for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] != '#') continue;
        if (i == 0 || body[i - 1] == ' ' || body[i - 1] == '\t') {
          body = body.substr(0, i);
          break;
        }
      }
      const std::string trimmed = detail::trim(body);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(line_no) +
                          ": expected 'key = value', got '" + trimmed + "'");
      const std::string key = detail::trim(trimmed.substr(0, eq));
      const std::string value = detail::trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ConfigError("line " + std::to_string(line_no) + ": empty key");
      if (cfg.values_.count(key))
        throw ConfigError("duplicate key '" + key + "'");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static KeyValueConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string str(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double f64(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : detail::parse_number(it->second, key);
  }

  long i64(const std::string& key, long fallback) const {
    const double x = f64(key, static_cast<double>(fallback));
    const long n = static_cast<long>(x);
    if (static_cast<double>(n) != x)
      throw ConfigError(key + ": expected an integer");
    return n;
  }

  bool boolean(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError(key + ": expected true/false");
  }

  std::vector<double> vec(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& el : detail::split_list(values_.at(key), key))
      out.push_back(detail::parse_number(el, key));
    return out;
  }

  Mat mat(const std::string& key) const {
    Mat out;
    for (const std::string& row : detail::split_list(values_.at(key), key)) {
      out.push_back({});
      for (const std::string& el : detail::split_list(row, key))
        out.back().push_back(detail::parse_number(el, key));
    }
    return out;
  }

  std::vector<std::string> str_list(const std::string& key) const {
    return detail::split_list(values_.at(key), key);
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

 private:
  std::map<std::string, std::string> values_;
};

namespace detail {

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "artifact.version",
      "score.path",
      "score.window",
      "score.origin",
      "run.method",
      "run.episodes",
      "run.seeds",
      "run.output_dir",
      "env.hidden_count",
      "env.hidden_prior",
      "env.hidden_transition",
      "env.emission",
      "env.emission_noise",
      "env.neighbor_radius",
      "reward.w1",
      "reward.w2",
      "reward.bonus",
      "perform.attention_lambda",
      "perform.pitch_noise_scale",
      "perform.onset_jitter_scale",
      "stft.window_len",
      "stft.hop",
      "stft.sample_rate",
      "stft.weights",
      "stft.weight_scale",
      "uncertainty.m",
      "uncertainty.delta_window",
      "uncertainty.pitch_epsilon",
      "solver.dt",
      "solver.sigma",
      "solver.zeta0",
      "solver.zeta_min",
      "solver.zeta_max",
      "solver.utility",
      "solver.utility_scale",
      "learner.gamma",
      "learner.alpha",
      "learner.alpha_schedule",
      "learner.epsilon",
      "learner.epsilon_decay",
      "learner.zeta_bootstrap",
      "learner.zeta_per_pair",
      "compare.reward_threshold",
      "tradeoff.delta",
      "tradeoff.k1",
      "tradeoff.k2",
      "tradeoff.floor",
      "tradeoff.resolution",
  };
  return keys;
}

inline PitchPair parse_pair_token(const std::string& token) {
  const auto dash = token.find('-');
  if (dash == std::string::npos)
    throw ConfigError("bad pitch pair '" + token + "' (expected e.g. A-E)");
  auto parse_pc = [&](const std::string& name) -> PitchClass {
    for (int i = 0; i < kPitchClassCount; ++i)
      if (name == pitch_class_name(static_cast<PitchClass>(i)))
        return static_cast<PitchClass>(i);
    throw ConfigError("unknown pitch class '" + name + "' in pair '" + token +
                      "'");
  };
  return PitchPair(parse_pc(trim(token.substr(0, dash))),
                   parse_pc(trim(token.substr(dash + 1))));
}

}  // namespace detail

enum class RunMethod { rate, td, both };

// Fully resolved experiment parameters; serializing and re-loading this is
// the reproducibility contract of the run manifest.
struct ExperimentConfig {
  std::string score_path = "scores/default.score";
  std::size_t phrase_window = 4;
  PitchClass origin_pitch = PitchClass::A;
  int origin_octave = 4;

  RunMethod method = RunMethod::rate;
  std::size_t episodes = 500;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string output_dir = "out";

  EnvConfig env;
  LearnerConfig learner;
  SolverSettings solver;
  double pitch_epsilon = 0.02;

  double compare_threshold = 3.5;
  double tradeoff_delta = 0.05;
  double tradeoff_k1 = 1.0;
  double tradeoff_k2 = 1.0;
  double tradeoff_floor = 1e-3;
  std::size_t tradeoff_resolution = 101;

  std::vector<IntervalGroup> group_override;  // empty -> default partition

  GroupSet make_groups() const {
    if (group_override.empty()) return default_interval_groups();
    return GroupSet(group_override);
  }

  static ExperimentConfig from_kv(const KeyValueConfig& kv,
                                  const std::filesystem::path& base_dir = {});
  std::string serialize() const;
};

inline ExperimentConfig ExperimentConfig::from_kv(
    const KeyValueConfig& kv, const std::filesystem::path& base_dir) {
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("groups.", 0) == 0) continue;
    if (!detail::known_keys().count(key))
      throw ConfigError("unknown config key '" + key + "'");
  }

  ExperimentConfig c;
  {
    std::filesystem::path p = kv.str("score.path", c.score_path);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    // manifests must stay loadable from anywhere, so pin the path down
    c.score_path = std::filesystem::absolute(p).lexically_normal().string();
  }
  c.phrase_window = static_cast<std::size_t>(kv.i64("score.window", 4));
  if (c.phrase_window == 0) throw ConfigError("score.window: must be >= 1");

  {
    const std::string origin = kv.str("score.origin", "A4");
    std::size_t p = 0;
    if (origin.empty() || origin[0] < 'A' || origin[0] > 'G')
      throw ConfigError("score.origin: bad note '" + origin + "'");
    static const int letter_semitone[7] = {9, 11, 0, 2, 4, 5, 7};
    int semis = letter_semitone[origin[0] - 'A'];
    p = 1;
    if (p < origin.size() && origin[p] == '#') {
      semis = (semis + 1) % 12;
      ++p;
    }
    if (p + 1 != origin.size() ||
        !std::isdigit(static_cast<unsigned char>(origin[p])))
      throw ConfigError("score.origin: bad note '" + origin + "'");
    c.origin_pitch = static_cast<PitchClass>(semis);
    c.origin_octave = origin[p] - '0';
  }

  {
    const std::string m = kv.str("run.method", "rate");
    if (m == "rate")
      c.method = RunMethod::rate;
    else if (m == "td")
      c.method = RunMethod::td;
    else if (m == "both")
      c.method = RunMethod::both;
    else
      throw ConfigError("run.method: expected rate, td or both, got '" + m + "'");
  }
  c.episodes = static_cast<std::size_t>(kv.i64("run.episodes", 500));
  if (c.episodes < 1) throw ConfigError("run.episodes: must be >= 1");
  if (kv.has("run.seeds")) {
    c.seeds.clear();
    for (double s : kv.vec("run.seeds"))
      c.seeds.push_back(static_cast<std::uint64_t>(s));
    if (c.seeds.empty()) throw ConfigError("run.seeds: need at least one seed");
  }
  c.output_dir = kv.str("run.output_dir", c.output_dir);

  c.env.hidden_count = static_cast<std::size_t>(kv.i64("env.hidden_count", 3));
  if (c.env.hidden_count < 1) throw ConfigError("env.hidden_count: must be >= 1");
  if (kv.has("env.hidden_prior")) c.env.hidden_prior = kv.vec("env.hidden_prior");
  if (kv.has("env.hidden_transition"))
    c.env.hidden_transition = kv.mat("env.hidden_transition");
  if (kv.has("env.emission")) c.env.emission = kv.mat("env.emission");
  c.env.emission_noise = kv.f64("env.emission_noise", 0.1);
  c.env.neighbor_radius =
      static_cast<int>(kv.i64("env.neighbor_radius", 4));
  c.env.reward_w1 = kv.f64("reward.w1", 0.5);
  c.env.reward_w2 = kv.f64("reward.w2", 0.5);
  c.env.reward_bonus = kv.f64("reward.bonus", 0.5);
  c.env.attention_lambda = kv.f64("perform.attention_lambda", 0.5);
  if (c.env.attention_lambda < 0.0 || c.env.attention_lambda > 1.0)
    throw ConfigError("perform.attention_lambda: outside [0, 1]");
  c.env.pitch_noise_scale = kv.f64("perform.pitch_noise_scale", 8.0);
  c.env.onset_jitter_scale = kv.f64("perform.onset_jitter_scale", 0.02);
  c.env.stft_window = static_cast<std::size_t>(kv.i64("stft.window_len", 64));
  c.env.stft_hop = static_cast<std::size_t>(kv.i64("stft.hop", 16));
  c.env.sample_rate = kv.f64("stft.sample_rate", 200.0);
  if (kv.has("stft.weights")) c.env.spectral_weights = kv.vec("stft.weights");
  c.env.spectral_weight_scale = kv.f64("stft.weight_scale", 1.0);
  if (!(c.env.spectral_weight_scale >= 0.0))
    throw ConfigError("stft.weight_scale: must be >= 0");
  c.env.uncertainty_m = kv.f64("uncertainty.m", 1.0);
  if (!(c.env.uncertainty_m > 0.0))
    throw ConfigError("uncertainty.m: must be > 0");
  c.env.delta_window =
      static_cast<std::size_t>(kv.i64("uncertainty.delta_window", 1));
  c.pitch_epsilon = kv.f64("uncertainty.pitch_epsilon", 0.02);
  c.env.origin_pitch = c.origin_pitch;
  c.env.origin_octave = c.origin_octave;

  c.solver.dt = kv.f64("solver.dt", 0.08);
  if (!(c.solver.dt > 0.0)) throw ConfigError("solver.dt: must be > 0");
  c.solver.sigma = kv.f64("solver.sigma", 0.01);
  if (c.solver.sigma < 0.0) throw ConfigError("solver.sigma: must be >= 0");
  c.solver.zeta0 = kv.f64("solver.zeta0", 0.5);
  c.solver.zeta_min = kv.f64("solver.zeta_min", 0.0);
  c.solver.zeta_max = kv.f64("solver.zeta_max", 1.0);
  if (!(c.solver.zeta_min <= c.solver.zeta_max))
    throw ConfigError("solver.zeta_min/zeta_max: empty clamp interval");
  {
    const std::string u = kv.str("solver.utility", "log_saturating");
    const double scale = kv.f64("solver.utility_scale", 50.0);
    if (!(scale > 0.0)) throw ConfigError("solver.utility_scale: must be > 0");
    if (u == "linear")
      c.solver.utility = UtilityFunction::linear(scale);
    else if (u == "log_saturating")
      c.solver.utility = UtilityFunction::log_saturating(scale);
    else
      throw ConfigError("solver.utility: expected linear or log_saturating");
  }

  c.learner.gamma = kv.f64("learner.gamma", 0.9);
  if (!(c.learner.gamma >= 0.0 && c.learner.gamma < 1.0))
    throw ConfigError("learner.gamma: outside [0, 1)");
  c.learner.alpha = kv.f64("learner.alpha", 0.1);
  if (!(c.learner.alpha > 0.0 && c.learner.alpha <= 1.0))
    throw ConfigError("learner.alpha: outside (0, 1]");
  {
    const std::string s = kv.str("learner.alpha_schedule", "constant");
    if (s == "constant")
      c.learner.alpha_schedule = LearnerConfig::AlphaSchedule::constant;
    else if (s == "inv_visits")
      c.learner.alpha_schedule = LearnerConfig::AlphaSchedule::inv_visits;
    else
      throw ConfigError("learner.alpha_schedule: expected constant or inv_visits");
  }
  c.learner.epsilon = kv.f64("learner.epsilon", 0.1);
  if (c.learner.epsilon < 0.0 || c.learner.epsilon > 1.0)
    throw ConfigError("learner.epsilon: outside [0, 1]");
  c.learner.epsilon_decay = kv.f64("learner.epsilon_decay", 0.995);
  c.learner.zeta_bootstrap = kv.f64("learner.zeta_bootstrap", 0.5);
  c.learner.zeta_per_pair = kv.boolean("learner.zeta_per_pair", false);

  c.compare_threshold = kv.f64("compare.reward_threshold", 3.5);
  c.tradeoff_delta = kv.f64("tradeoff.delta", 0.05);
  c.tradeoff_k1 = kv.f64("tradeoff.k1", 1.0);
  c.tradeoff_k2 = kv.f64("tradeoff.k2", 1.0);
  c.tradeoff_floor = kv.f64("tradeoff.floor", 1e-3);
  c.tradeoff_resolution =
      static_cast<std::size_t>(kv.i64("tradeoff.resolution", 101));
  if (c.tradeoff_resolution < 2)
    throw ConfigError("tradeoff.resolution: must be >= 2");

  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("groups.", 0) != 0) continue;
    IntervalGroup g;
    g.label = key.substr(7);
    for (const std::string& tok : kv.str_list(key))
      g.members.push_back(detail::parse_pair_token(tok));
    c.group_override.push_back(std::move(g));
  }
  return c;
}

inline std::string ExperimentConfig::serialize() const {
  using detail::format_number;
  std::ostringstream out;
  auto emit = [&](const std::string& k, const std::string& v) {
    out << k << " = " << v << "\n";
  };
  auto emit_vec = [&](const std::string& k, const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i)
      s += (i ? ", " : "") + format_number(v[i]);
    emit(k, s + "]");
  };
  auto emit_mat = [&](const std::string& k, const Mat& m) {
    std::string s = "[";
    for (std::size_t i = 0; i < m.size(); ++i) {
      s += i ? ", [" : "[";
      for (std::size_t j = 0; j < m[i].size(); ++j)
        s += (j ? ", " : "") + format_number(m[i][j]);
      s += "]";
    }
    emit(k, s + "]");
  };

  emit("artifact.version", kArtifactVersion);
  emit("score.path", score_path);
  emit("score.window", std::to_string(phrase_window));
  emit("score.origin", std::string(pitch_class_name(origin_pitch)) +
                           std::to_string(origin_octave));
  emit("run.method", method == RunMethod::rate  ? "rate"
                     : method == RunMethod::td ? "td"
                                               : "both");
  emit("run.episodes", std::to_string(episodes));
  {
    std::string s = "[";
    for (std::size_t i = 0; i < seeds.size(); ++i)
      s += (i ? ", " : "") + std::to_string(seeds[i]);
    emit("run.seeds", s + "]");
  }
  emit("run.output_dir", output_dir);
  emit("env.hidden_count", std::to_string(env.hidden_count));
  if (!env.hidden_prior.empty()) emit_vec("env.hidden_prior", env.hidden_prior);
  if (!env.hidden_transition.empty())
    emit_mat("env.hidden_transition", env.hidden_transition);
  if (!env.emission.empty()) emit_mat("env.emission", env.emission);
  emit("env.emission_noise", format_number(env.emission_noise));
  emit("env.neighbor_radius", std::to_string(env.neighbor_radius));
  emit("reward.w1", format_number(env.reward_w1));
  emit("reward.w2", format_number(env.reward_w2));
  emit("reward.bonus", format_number(env.reward_bonus));
  emit("perform.attention_lambda", format_number(env.attention_lambda));
  emit("perform.pitch_noise_scale", format_number(env.pitch_noise_scale));
  emit("perform.onset_jitter_scale", format_number(env.onset_jitter_scale));
  emit("stft.window_len", std::to_string(env.stft_window));
  emit("stft.hop", std::to_string(env.stft_hop));
  emit("stft.sample_rate", format_number(env.sample_rate));
  if (!env.spectral_weights.empty())
    emit_vec("stft.weights", env.spectral_weights);
  emit("stft.weight_scale", format_number(env.spectral_weight_scale));
  emit("uncertainty.m", format_number(env.uncertainty_m));
  emit("uncertainty.delta_window", std::to_string(env.delta_window));
  emit("uncertainty.pitch_epsilon", format_number(pitch_epsilon));
  emit("solver.dt", format_number(solver.dt));
  emit("solver.sigma", format_number(solver.sigma));
  emit("solver.zeta0", format_number(solver.zeta0));
  emit("solver.zeta_min", format_number(solver.zeta_min));
  emit("solver.zeta_max", format_number(solver.zeta_max));
  emit("solver.utility", solver.utility.kind == UtilityFunction::Kind::linear
                             ? "linear"
                             : "log_saturating");
  emit("solver.utility_scale", format_number(solver.utility.scale));
  emit("learner.gamma", format_number(learner.gamma));
  emit("learner.alpha", format_number(learner.alpha));
  emit("learner.alpha_schedule",
       learner.alpha_schedule == LearnerConfig::AlphaSchedule::constant
           ? "constant"
           : "inv_visits");
  emit("learner.epsilon", format_number(learner.epsilon));
  emit("learner.epsilon_decay", format_number(learner.epsilon_decay));
  emit("learner.zeta_bootstrap", format_number(learner.zeta_bootstrap));
  emit("learner.zeta_per_pair", learner.zeta_per_pair ? "true" : "false");
  emit("compare.reward_threshold", format_number(compare_threshold));
  emit("tradeoff.delta", format_number(tradeoff_delta));
  emit("tradeoff.k1", format_number(tradeoff_k1));
  emit("tradeoff.k2", format_number(tradeoff_k2));
  emit("tradeoff.floor", format_number(tradeoff_floor));
  emit("tradeoff.resolution", std::to_string(tradeoff_resolution));
  for (const IntervalGroup& g : group_override) {
    std::string s = "[";
    for (std::size_t i = 0; i < g.members.size(); ++i)
      s += (i ? ", " : "") + pair_label(g.members[i]);
    emit("groups." + g.label, s + "]");
  }
  return out.str();
}

}  // namespace sightread
