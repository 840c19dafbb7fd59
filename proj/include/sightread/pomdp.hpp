#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sightread/constraints.hpp"
#include "sightread/intervals.hpp"
#include "sightread/notes.hpp"
#include "sightread/rng.hpp"

namespace sightread {

using Mat = std::vector<std::vector<double>>;

// Composite state per the hidden/observable decomposition: the observable
// part is an interval-group index, the hidden part indexes a small finite
// alphabet that carries the perceptual component.
struct CompositeState {
  int observable = 0;
  int hidden = 0;

  friend bool operator==(CompositeState a, CompositeState b) {
    return a.observable == b.observable && a.hidden == b.hidden;
  }
};

namespace detail {

inline void check_distribution(std::span<const double> row, const char* what) {
  double sum = 0.0;
  for (double p : row) {
    if (p < 0.0)
      throw std::invalid_argument(std::string(what) + ": negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(what) + ": row sums to " +
                                std::to_string(sum) + ", expected 1");
}

}  // namespace detail

// All distribution parameters of the decision process: emission rows
// Pr(s0 | s_h), the hidden prior Pr(s_h) and the hidden transition matrix.
class ParamSet {
 public:
  ParamSet(Mat emission, std::vector<double> hidden_prior, Mat hidden_transition)
      : emission_(std::move(emission)),
        hidden_prior_(std::move(hidden_prior)),
        hidden_transition_(std::move(hidden_transition)) {
    const std::size_t h = hidden_prior_.size();
    if (h == 0) throw std::invalid_argument("ParamSet: empty hidden alphabet");
    if (emission_.size() != h || hidden_transition_.size() != h)
      throw std::invalid_argument("ParamSet: matrix row count != hidden count");
    const std::size_t g = emission_.front().size();
    if (g == 0) throw std::invalid_argument("ParamSet: empty observable alphabet");
    detail::check_distribution(hidden_prior_, "hidden_prior");
    for (const auto& row : emission_) {
      if (row.size() != g)
        throw std::invalid_argument("ParamSet: ragged emission matrix");
      detail::check_distribution(row, "emission");
    }
    for (const auto& row : hidden_transition_) {
      if (row.size() != h)
        throw std::invalid_argument("ParamSet: hidden_transition not square");
      detail::check_distribution(row, "hidden_transition");
    }
  }

  std::size_t hidden_count() const { return hidden_prior_.size(); }
  std::size_t observable_count() const { return emission_.front().size(); }

  double emission(int hidden, int observable) const {
    return emission_.at(static_cast<std::size_t>(hidden))
        .at(static_cast<std::size_t>(observable));
  }
  const std::vector<double>& emission_row(int hidden) const {
    return emission_.at(static_cast<std::size_t>(hidden));
  }
  const std::vector<double>& hidden_prior() const { return hidden_prior_; }
  const std::vector<double>& hidden_transition_row(int hidden) const {
    return hidden_transition_.at(static_cast<std::size_t>(hidden));
  }
  const Mat& emission_matrix() const { return emission_; }
  const Mat& hidden_transition_matrix() const { return hidden_transition_; }

 private:
  Mat emission_;                     // hidden x observable
  std::vector<double> hidden_prior_; // hidden
  Mat hidden_transition_;            // hidden x hidden
};

// Noisy-identity emission: hidden state i concentrates on group (i mod G)
// with the rest of the mass spread uniformly.
inline Mat noisy_identity_emission(std::size_t hidden_count,
                                   std::size_t group_count, double noise) {
  if (!(noise >= 0.0 && noise < 1.0))
    throw std::invalid_argument("noisy_identity_emission: noise outside [0, 1)");
  Mat m(hidden_count, std::vector<double>(group_count, noise / static_cast<double>(group_count)));
  for (std::size_t i = 0; i < hidden_count; ++i)
    m[i][i % group_count] += 1.0 - noise;
  return m;
}

// Pr(s | eta) = Pr(s0 | s_h) * Pr(s_h)
inline double state_likelihood(CompositeState s, const ParamSet& params) {
  if (s.hidden < 0 || static_cast<std::size_t>(s.hidden) >= params.hidden_count())
    throw std::out_of_range("state_likelihood: hidden index out of range");
  if (s.observable < 0 ||
      static_cast<std::size_t>(s.observable) >= params.observable_count())
    throw std::out_of_range("state_likelihood: observable index out of range");
  return params.emission(s.hidden, s.observable) *
         params.hidden_prior()[static_cast<std::size_t>(s.hidden)];
}

// Pr(E) = sum_i Pr(E | s_h_i) Pr(s_h_i)
inline double marginal_action_prob(std::span<const double> action_likelihoods,
                                   std::span<const double> prior) {
  if (action_likelihoods.size() != prior.size())
    throw std::invalid_argument(
        "marginal_action_prob: likelihood/prior length mismatch");
  detail::check_distribution(prior, "marginal_action_prob prior");
  double sum = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (action_likelihoods[i] < 0.0 || action_likelihoods[i] > 1.0)
      throw std::invalid_argument("marginal_action_prob: likelihood outside [0, 1]");
    sum += action_likelihoods[i] * prior[i];
  }
  return sum;
}

// beta_{s,t} = P(s_t = s, phi_t = 1 | s_h_1, ..., s_h_{t+1}).
//
// Under the model the observable at each step depends only on that step's
// hidden state, so conditioning on the full hidden history up to t+1 the
// filtered posterior of the observable at t is the emission row of h_t, and
// the chance a change occurred given s_t = s is the mass h_{t+1} puts off s.
inline double transition_weight(int target_state, std::span<const int> history,
                                const ParamSet& params) {
  if (history.size() < 2)
    throw std::invalid_argument(
        "transition_weight: history must contain at least two hidden states");
  if (target_state < 0 ||
      static_cast<std::size_t>(target_state) >= params.observable_count())
    throw std::out_of_range("transition_weight: state index out of range");
  const int h_t = history[history.size() - 2];
  const int h_next = history[history.size() - 1];
  for (int h : {h_t, h_next})
    if (h < 0 || static_cast<std::size_t>(h) >= params.hidden_count())
      throw std::out_of_range("transition_weight: hidden index out of range");
  return params.emission(h_t, target_state) *
         (1.0 - params.emission(h_next, target_state));
}

// Running average-reward baseline rho_t.
struct RewardBaseline {
  double rho = 0.0;
  long count = 0;

  void observe(double reward) {
    ++count;
    rho += (reward - rho) / static_cast<double>(count);
  }
};

// delta_{s,t} = beta * (r_{t+1} - rho_t); the baseline absorbs the reward
// afterwards, so rho_t is the mean of rewards seen before this one.
inline double weighted_prediction_error(double beta, double r_next,
                                        RewardBaseline& baseline) {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::invalid_argument("weighted_prediction_error: beta outside [0, 1]");
  const double delta = beta * (r_next - baseline.rho);
  baseline.observe(r_next);
  return delta;
}

struct TransitionRecord {
  CompositeState from;
  int action = -1;  // target-note index within the neighbor set
  CompositeState to;
  double reward = 0.0;
  int flag = 0;  // phi: 1 iff the observable group changed
};

// Everything a learner needs from one environment step.
struct StepOutcome {
  TransitionRecord record;
  ConstraintValues constraints;  // c1 (agent frame), c2, produced frequency
  ErrorPair errors;              // post-enforcement (Delta c1, Delta c2)
  double error_product = 0.0;    // errors.d_c1 * errors.d_c2
  double uncertainty_bound = 0.0;  // delta * M in force for this step
  bool matched_score = false;    // chosen target == the score's next note
};

struct EnvConfig {
  // hidden-state model
  std::size_t hidden_count = 3;
  std::vector<double> hidden_prior;  // empty -> uniform
  Mat hidden_transition;             // empty -> 0.8 diagonal
  Mat emission;                      // empty -> noisy identity
  double emission_noise = 0.1;

  // action set: semitone offsets -radius..+radius around the current note
  int neighbor_radius = 4;

  // reward shaping
  double reward_w1 = 0.5;
  double reward_w2 = 0.5;
  double reward_bonus = 0.5;

  // performance simulation: attention_lambda = 1 favors rhythm
  double attention_lambda = 0.5;
  double pitch_noise_scale = 8.0;    // Hz of produced-pitch noise at full inattention
  double onset_jitter_scale = 0.02;  // seconds of onset jitter at full inattention

  // rhythm feature extraction
  std::size_t stft_window = 64;
  std::size_t stft_hop = 16;
  double sample_rate = 200.0;
  std::vector<double> spectral_weights;  // empty -> weight_scale everywhere
  double spectral_weight_scale = 1.0;    // c1 is a sum of f(k)-weighted terms,
                                         // so this sets its overall magnitude

  // uncertainty coupling
  double uncertainty_m = 1.0;
  std::size_t delta_window = 1;  // averaging window for |delta|

  PitchClass origin_pitch = PitchClass::A;
  int origin_octave = 4;
};

// The sight-reading decision process over one score. An instance owns its
// RNG and history; run independent instances for independent seeds.
class Environment {
 public:
  Environment(std::vector<Phrase> phrases, GroupSet groups, double tempo,
              EnvConfig config, std::uint64_t seed)
      : phrases_(std::move(phrases)),
        groups_(std::move(groups)),
        tempo_(tempo),
        cfg_(std::move(config)),
        params_(build_params(cfg_, groups_.size())),
        rng_(derive_seed(seed, 0xE57EBD1ULL)) {
    if (phrases_.empty())
      throw std::invalid_argument("Environment: no phrases");
    if (!(tempo_ > 0.0)) throw std::invalid_argument("Environment: tempo <= 0");
    if (cfg_.neighbor_radius < 1)
      throw std::invalid_argument("Environment: neighbor_radius must be >= 1");
    if (cfg_.delta_window < 1)
      throw std::invalid_argument("Environment: delta_window must be >= 1");
    const std::size_t bins = cfg_.stft_window / 2 + 1;
    if (cfg_.spectral_weights.empty())
      weights_.assign(bins, cfg_.spectral_weight_scale);
    else if (cfg_.spectral_weights.size() == bins)
      weights_ = cfg_.spectral_weights;
    else
      throw std::invalid_argument(
          "Environment: spectral_weights length != window/2 + 1");
    reset(0);
  }

  std::size_t phrase_count() const { return phrases_.size(); }
  std::size_t phrase_length(std::size_t i) const {
    return phrases_.at(i).notes.size();
  }
  int action_count() const { return 2 * cfg_.neighbor_radius + 1; }
  const GroupSet& groups() const { return groups_; }
  const ParamSet& params() const { return params_; }
  const EnvConfig& config() const { return cfg_; }

  // Restart on the given phrase: agent back at the origin note, hidden state
  // redrawn from the prior, fresh performance (jittered onsets) for the
  // phrase. Learning state (|delta| window) persists across episodes.
  void reset(std::size_t phrase_index) {
    if (phrase_index >= phrases_.size())
      throw std::out_of_range("Environment::reset: phrase index out of range");
    phrase_ = phrase_index;
    position_ = 0;
    current_midi_ = midi_number(cfg_.origin_pitch, cfg_.origin_octave);
    const int h0 = rng_.sample_discrete(params_.hidden_prior());
    const int g0 = groups_.index_of(
        PitchPair(cfg_.origin_pitch, cfg_.origin_pitch));
    state_ = {g0, h0};
    history_.assign(1, h0);
    prepare_performance();
  }

  bool done() const { return position_ >= phrases_[phrase_].notes.size(); }
  CompositeState state() const { return state_; }
  std::span<const int> history() const { return history_; }
  const std::vector<double>& c1_trajectory() const { return c1_agent_; }
  const std::vector<double>& reference_c1_trajectory() const { return c1_ref_; }

  int target_midi(int action) const {
    return current_midi_ + (action - cfg_.neighbor_radius);
  }

  // Action whose target equals the score's next note, or -1 if it lies
  // outside the neighbor radius.
  int correct_action() const {
    const Note& next = phrases_[phrase_].notes[position_];
    const int diff = midi_number(next.pitch_class, next.octave) - current_midi_;
    if (std::abs(diff) > cfg_.neighbor_radius) return -1;
    return diff + cfg_.neighbor_radius;
  }

  // Noise-free one-step preview for value lookahead: the observable group the
  // action leads to and the reward it would earn with a perfect performance.
  struct Preview {
    int next_observable = 0;
    double expected_reward = 0.0;
    bool matches = false;
  };

  Preview preview(int action) const {
    const int midi = checked_target(action);
    const Note& truth = phrases_[phrase_].notes[position_];
    const double d_c2 = pitch_c2(midi_frequency(midi), truth.frequency);
    const bool match = midi == midi_number(truth.pitch_class, truth.octave);
    Preview p;
    p.next_observable = groups_.index_of(
        PitchPair(pitch_class_of_midi(current_midi_), pitch_class_of_midi(midi)));
    p.expected_reward = shaped_reward(0.0, d_c2, match);
    p.matches = match;
    return p;
  }

  // One transition: the agent produces its chosen target (with attention
  // noise), the constraint errors are measured and coupled, the reward is
  // shaped, and the hidden chain advances. The score position always moves
  // on to the true note, mistake or not.
  StepOutcome step(int action) {
    if (done())
      throw std::logic_error("Environment::step: phrase already finished");
    const int midi = checked_target(action);
    const Note& truth = phrases_[phrase_].notes[position_];

    // fixed draw order per step: pitch noise, then hidden transition
    const double pitch_sigma = cfg_.pitch_noise_scale * cfg_.attention_lambda;
    const double produced = std::max(
        1e-3, midi_frequency(midi) + pitch_sigma * rng_.gauss());
    const int h_next =
        rng_.sample_discrete(params_.hidden_transition_row(state_.hidden));

    const std::size_t frame = frame_of_position(position_);
    const double raw_c1 = std::abs(c1_agent_[frame] - c1_ref_[frame]);
    const double raw_c2 = pitch_c2(produced, truth.frequency);
    const double delta_mag = delta_average();
    const ErrorPair coupled = enforce_uncertainty(
        {raw_c1, raw_c2}, {delta_mag, cfg_.uncertainty_m});

    const bool match = midi == midi_number(truth.pitch_class, truth.octave);
    const double reward = shaped_reward(coupled.d_c1, coupled.d_c2, match);

    const int g_next = groups_.index_of(
        PitchPair(pitch_class_of_midi(current_midi_), pitch_class_of_midi(midi)));

    StepOutcome out;
    out.record.from = state_;
    out.record.action = action;
    out.record.to = {g_next, h_next};
    out.record.reward = reward;
    out.record.flag = (g_next != state_.observable) ? 1 : 0;
    out.constraints = {c1_agent_[frame], raw_c2, produced};
    out.errors = coupled;
    out.error_product = coupled.d_c1 * coupled.d_c2;
    out.uncertainty_bound = delta_mag * cfg_.uncertainty_m;
    out.matched_score = match;

    state_ = out.record.to;
    history_.push_back(h_next);
    current_midi_ = midi_number(truth.pitch_class, truth.octave);
    ++position_;
    return out;
  }

  // Feed back the learner's latest |delta|; used as the uncertainty bound
  // input delta*M on subsequent steps.
  void note_prediction_error(double abs_delta) {
    recent_delta_.push_back(std::abs(abs_delta));
    while (recent_delta_.size() > cfg_.delta_window) recent_delta_.pop_front();
  }

  double delta_average() const {
    if (recent_delta_.empty()) return 0.0;
    double sum = 0.0;
    for (double d : recent_delta_) sum += d;
    return sum / static_cast<double>(recent_delta_.size());
  }

 private:
  static ParamSet build_params(const EnvConfig& cfg, std::size_t group_count) {
    std::vector<double> prior = cfg.hidden_prior;
    if (prior.empty())
      prior.assign(cfg.hidden_count, 1.0 / static_cast<double>(cfg.hidden_count));
    Mat transition = cfg.hidden_transition;
    if (transition.empty()) {
      const std::size_t h = prior.size();
      const double off = h > 1 ? 0.2 / static_cast<double>(h - 1) : 0.0;
      transition.assign(h, std::vector<double>(h, off));
      for (std::size_t i = 0; i < h; ++i) transition[i][i] = h > 1 ? 0.8 : 1.0;
    }
    Mat emission = cfg.emission;
    if (emission.empty())
      emission = noisy_identity_emission(prior.size(), group_count,
                                         cfg.emission_noise);
    return ParamSet(std::move(emission), std::move(prior), std::move(transition));
  }

  int checked_target(int action) const {
    if (action < 0 || action >= action_count())
      throw std::out_of_range("Environment: action outside the neighbor set");
    const int midi = current_midi_ + (action - cfg_.neighbor_radius);
    const int octave = octave_of_midi(midi);
    if (octave < 0 || octave > 9)
      throw std::out_of_range("Environment: target note outside octave range");
    return midi;
  }

  double shaped_reward(double d_c1, double d_c2, bool match) const {
    const double penalty =
        std::clamp(cfg_.reward_w1 * d_c1 + cfg_.reward_w2 * d_c2, 0.0, 2.0) / 2.0;
    const double r = 1.0 - penalty + (match ? cfg_.reward_bonus : 0.0);
    return std::clamp(r, -1.0, 1.0);
  }

  double seconds_per_beat() const { return 60.0 / tempo_; }

  std::size_t frame_of_position(std::size_t pos) const {
    const double t = phrases_[phrase_].notes[pos].onset * seconds_per_beat();
    const auto idx = static_cast<std::size_t>(t * cfg_.sample_rate) / cfg_.stft_hop;
    return std::min(idx, c1_ref_.size() - 1);
  }

  // Reference frames come from the score onsets; the agent's performance
  // jitters each onset in proportion to how little attention rhythm gets.
  void prepare_performance() {
    const auto& notes = phrases_[phrase_].notes;
    std::vector<Impulse> ref;
    std::vector<Impulse> agent;
    const double jitter_sigma =
        cfg_.onset_jitter_scale * (1.0 - cfg_.attention_lambda);
    for (const Note& n : notes) {
      const double t = n.onset * seconds_per_beat();
      ref.push_back({t, 1.0});
      agent.push_back({std::max(0.0, t + jitter_sigma * rng_.gauss()), 1.0});
    }
    std::sort(agent.begin(), agent.end(),
              [](const Impulse& a, const Impulse& b) { return a.time < b.time; });

    const auto ref_frames =
        stft_magnitudes(ref, cfg_.stft_window, cfg_.stft_hop, cfg_.sample_rate);
    auto agent_frames = stft_magnitudes(agent, cfg_.stft_window, cfg_.stft_hop,
                                        cfg_.sample_rate);
    // equalize frame counts (jitter can shift the tail across a hop boundary)
    if (agent_frames.size() < ref_frames.size()) {
      const SpectralFrame last = agent_frames.back();
      agent_frames.resize(ref_frames.size(), last);
    }
    c1_ref_ = rhythm_trajectory(ref_frames, weights_);
    c1_agent_ = rhythm_trajectory(agent_frames, weights_);
    const double tail = c1_agent_.empty() ? 0.0 : c1_agent_.back();
    c1_agent_.resize(c1_ref_.size(), tail);
  }

  std::vector<Phrase> phrases_;
  GroupSet groups_;
  double tempo_;
  EnvConfig cfg_;
  ParamSet params_;
  Rng rng_;
  std::vector<double> weights_;

  std::size_t phrase_ = 0;
  std::size_t position_ = 0;
  int current_midi_ = 69;
  CompositeState state_{};
  std::vector<int> history_;
  std::vector<double> c1_ref_;
  std::vector<double> c1_agent_;
  std::deque<double> recent_delta_;
};

}  // namespace sightread
