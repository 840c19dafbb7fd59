#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "sightread/pomdp.hpp"
#include "sightread/rate_solver.hpp"
#include "sightread/rng.hpp"

namespace sightread {

class ValueTable {
 public:
  explicit ValueTable(std::size_t states, double init = 0.0)
      : values_(states, init) {}

  std::size_t size() const { return values_.size(); }
  double value(int s) const { return values_.at(static_cast<std::size_t>(s)); }
  void set(int s, double v) { values_.at(static_cast<std::size_t>(s)) = v; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
};

// Action preferences h(s, a) with the policy distribution derived per row by
// exponential normalization. Keeping the raw preferences additive lets the
// rate update stay a plain "+= zeta" while the distribution stays valid.
class PolicyTable {
 public:
  PolicyTable(std::size_t states, std::size_t actions)
      : states_(states), actions_(actions), prefs_(states * actions, 0.0) {
    if (states == 0 || actions == 0)
      throw std::invalid_argument("PolicyTable: empty state or action set");
  }

  std::size_t state_count() const { return states_; }
  std::size_t action_count() const { return actions_; }

  double preference(int s, int a) const { return prefs_.at(index(s, a)); }
  void add_preference(int s, int a, double dh) { prefs_.at(index(s, a)) += dh; }

  // softmax of the preference row
  std::vector<double> distribution(int s) const {
    check_state(s);
    std::vector<double> row(actions_);
    double hmax = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < actions_; ++a)
      hmax = std::max(hmax, prefs_[index(s, static_cast<int>(a))]);
    double z = 0.0;
    for (std::size_t a = 0; a < actions_; ++a) {
      row[a] = std::exp(prefs_[index(s, static_cast<int>(a))] - hmax);
      z += row[a];
    }
    for (double& p : row) p /= z;
    return row;
  }

  // greedy action of the derived distribution, lowest index on ties
  int argmax(int s) const {
    check_state(s);
    int best = 0;
    double best_h = prefs_[index(s, 0)];
    for (std::size_t a = 1; a < actions_; ++a) {
      const double h = prefs_[index(s, static_cast<int>(a))];
      if (h > best_h) {
        best_h = h;
        best = static_cast<int>(a);
      }
    }
    return best;
  }

  // draw an action from the distribution row; once one preference towers over
  // the rest the draw is deterministic in double precision
  int sample(int s, Rng& rng) const {
    const auto row = distribution(s);
    return rng.sample_discrete(row);
  }

 private:
  std::size_t index(int s, int a) const {
    check_state(s);
    if (a < 0 || static_cast<std::size_t>(a) >= actions_)
      throw std::out_of_range("PolicyTable: unknown action");
    return static_cast<std::size_t>(s) * actions_ + static_cast<std::size_t>(a);
  }
  void check_state(int s) const {
    if (s < 0 || static_cast<std::size_t>(s) >= states_)
      throw std::out_of_range("PolicyTable: unknown state");
  }

  std::size_t states_;
  std::size_t actions_;
  std::vector<double> prefs_;
};

// V(s) += zeta * delta  (Rescorla-Wagner surprise update)
inline void rw_update(ValueTable& table, int s, double zeta, double delta) {
  if (!(zeta >= 0.0 && zeta <= 1.0))
    throw std::invalid_argument("rw_update: zeta outside [0, 1]");
  const double v = table.value(s) + zeta * delta;
  if (!std::isfinite(v)) throw std::domain_error("rw_update: non-finite value");
  table.set(s, v);
}

// h(s, a) += sign(delta) * zeta*; the distribution row follows from the
// preferences, so normalization is preserved by construction.
inline void policy_update(PolicyTable& table, int s, int a, double zeta_star,
                          int delta_sign) {
  if (!(zeta_star >= 0.0 && zeta_star <= 1.0))
    throw std::invalid_argument("policy_update: zeta outside [0, 1]");
  if (delta_sign < -1 || delta_sign > 1)
    throw std::invalid_argument("policy_update: sign must be -1, 0 or 1");
  table.add_preference(s, a, static_cast<double>(delta_sign) * zeta_star);
}

// Damped one-transition value backup toward r + gamma * V(s_next); pass
// terminal_next = true to cut the bootstrap at episode ends.
inline void td_value_update(ValueTable& table, int s, double reward, int s_next,
                            double alpha, double gamma,
                            bool terminal_next = false) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("td_value_update: alpha outside (0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("td_value_update: gamma outside [0, 1)");
  const double bootstrap = terminal_next ? 0.0 : gamma * table.value(s_next);
  const double v = (1.0 - alpha) * table.value(s) + alpha * (reward + bootstrap);
  if (!std::isfinite(v))
    throw std::domain_error("td_value_update: non-finite value");
  table.set(s, v);
}

// One-step-lookahead greedy policy over a deterministic model. The model
// exposes state_count(), action_count(s), next_state(s, a) and reward(s, a).
template <typename Model>
std::vector<int> greedy_policy(const ValueTable& table, const Model& model,
                               double gamma) {
  std::vector<int> policy(model.state_count(), 0);
  for (std::size_t s = 0; s < model.state_count(); ++s) {
    int best = 0;
    double best_q = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < model.action_count(static_cast<int>(s)); ++a) {
      const double q = model.reward(static_cast<int>(s), a) +
                       gamma * table.value(model.next_state(static_cast<int>(s), a));
      if (q > best_q) {  // strict: ties keep the lowest action index
        best_q = q;
        best = a;
      }
    }
    policy[s] = best;
  }
  return policy;
}

// Full greedy sweep used by the TD baseline's offline form: every state is
// backed up through its best one-step lookahead.
template <typename Model>
void td_sweep(ValueTable& table, const Model& model, double alpha,
              double gamma) {
  const std::vector<int> policy = greedy_policy(table, model, gamma);
  for (std::size_t s = 0; s < model.state_count(); ++s) {
    const int a = policy[s];
    td_value_update(table, static_cast<int>(s),
                    model.reward(static_cast<int>(s), a),
                    model.next_state(static_cast<int>(s), a), alpha, gamma);
  }
}

struct LearnerConfig {
  enum class Method { rate, td };
  enum class AlphaSchedule { constant, inv_visits };

  Method method = Method::rate;
  double gamma = 0.9;
  AlphaSchedule alpha_schedule = AlphaSchedule::constant;
  double alpha = 0.1;
  double epsilon = 0.1;
  double epsilon_decay = 0.995;
  double zeta_bootstrap = 0.5;  // zeta for Eq-7 updates before the first
                                // double supremum is available
  bool zeta_per_pair = false;   // apply each pair's own terminal rate instead
                                // of the double-supremum scalar
};

struct SolverSettings {
  double dt = 0.08;
  double sigma = 0.01;
  double zeta0 = 0.5;
  double zeta_min = 0.0;
  double zeta_max = 1.0;
  UtilityFunction utility = UtilityFunction::log_saturating(50.0);
};

struct StepLog {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  double delta = 0.0;
  double beta = 0.0;
  double d_c1 = 0.0;
  double d_c2 = 0.0;
  double error_product = 0.0;
  double uncertainty_bound = 0.0;
  double zeta_star = 0.0;
};

struct EpisodeResult {
  std::vector<StepLog> steps;
  double total_reward = 0.0;
  double mean_delta = 0.0;
  double mean_beta = 0.0;
  double mean_dc1 = 0.0;
  double mean_dc2 = 0.0;
  double min_product = 0.0;
  double zeta_selected = 0.0;
  std::size_t gamma_size = 0;
};

// Mutable learning state threaded through episodes.
struct AgentState {
  ValueTable values;
  PolicyTable policy;
  RewardBaseline baseline;
  double zeta_current;
  double epsilon_current;
  long episodes_done = 0;
  std::vector<long> state_visits;

  AgentState(std::size_t states, std::size_t actions, const LearnerConfig& cfg)
      : values(states),
        policy(states, actions),
        zeta_current(cfg.zeta_bootstrap),
        epsilon_current(cfg.epsilon),
        state_visits(states, 0) {}
};

namespace detail {

inline int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

inline double mean_of(std::span<const StepLog> steps, double StepLog::*field) {
  if (steps.empty()) return 0.0;
  double sum = 0.0;
  for (const StepLog& s : steps) sum += s.*field;
  return sum / static_cast<double>(steps.size());
}

}  // namespace detail

// One episode = one pass over one phrase. The rate-based learner follows the
// surprise/rate scheme (value update per step, policy update at phrase end
// from the double supremum over Gamma); the TD baseline does epsilon-greedy
// one-step lookahead with damped value backups.
inline EpisodeResult run_episode(Environment& env, AgentState& agent,
                                 const LearnerConfig& cfg,
                                 const SolverSettings& solver, Rng& agent_rng,
                                 std::uint64_t master_seed,
                                 std::size_t episode_index) {
  env.reset(episode_index % env.phrase_count());

  EpisodeResult result;
  std::vector<RateSolution> solutions;
  struct Visit {
    StateActionKey key;
    int delta_sign;
  };
  std::vector<Visit> visits;

  double min_product = std::numeric_limits<double>::infinity();
  std::size_t t = 0;
  while (!env.done()) {
    const CompositeState from = env.state();
    agent.state_visits[static_cast<std::size_t>(from.observable)]++;

    int action;
    const bool explore = agent_rng.uniform01() < agent.epsilon_current;
    if (explore) {
      action = agent_rng.uniform_int(env.action_count());
    } else if (cfg.method == LearnerConfig::Method::rate) {
      action = agent.policy.sample(from.observable, agent_rng);
    } else {
      // greedy over the noise-free one-step preview
      action = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < env.action_count(); ++a) {
        const auto p = env.preview(a);
        const double q =
            p.expected_reward + cfg.gamma * agent.values.value(p.next_observable);
        if (q > best) {
          best = q;
          action = a;
        }
      }
    }

    const StepOutcome out = env.step(action);
    StepLog log;
    log.state = out.record.from.observable;
    log.action = action;
    log.reward = out.record.reward;
    log.d_c1 = out.errors.d_c1;
    log.d_c2 = out.errors.d_c2;
    log.error_product = out.error_product;
    log.uncertainty_bound = out.uncertainty_bound;
    min_product = std::min(min_product, out.error_product);

    if (cfg.method == LearnerConfig::Method::rate) {
      const double beta =
          transition_weight(out.record.from.observable, env.history(), env.params());
      const double delta =
          weighted_prediction_error(beta, out.record.reward, agent.baseline);
      env.note_prediction_error(std::abs(delta));

      std::vector<double> traj = env.c1_trajectory();
      if (traj.size() < 2) traj.resize(2, traj.empty() ? 0.0 : traj[0]);
      const StateActionKey key{out.record.from.observable, action};
      const MarkovNoise noise{
          solver.sigma,
          derive_seed(master_seed,
                      (static_cast<std::uint64_t>(episode_index) << 24) ^
                          (static_cast<std::uint64_t>(key.state) << 12) ^
                          static_cast<std::uint64_t>(key.action),
                      static_cast<std::uint64_t>(t))};
      const RateSolution sol =
          solve_rate_sde(traj, solver.utility, noise, solver.zeta0, solver.dt,
                         traj.size() - 1, solver.zeta_min, solver.zeta_max, key);
      log.zeta_star = sol.terminal();
      solutions.push_back(sol);
      visits.push_back({key, detail::sign_of(delta)});

      rw_update(agent.values, out.record.from.observable, agent.zeta_current,
                delta);
      log.beta = beta;
      log.delta = delta;
    } else {
      const double alpha =
          cfg.alpha_schedule == LearnerConfig::AlphaSchedule::constant
              ? cfg.alpha
              : 1.0 / static_cast<double>(
                    agent.state_visits[static_cast<std::size_t>(
                        out.record.from.observable)]);
      const bool terminal = env.done();
      log.delta = out.record.reward +
                  (terminal ? 0.0 : cfg.gamma * agent.values.value(
                                        out.record.to.observable)) -
                  agent.values.value(out.record.from.observable);
      td_value_update(agent.values, out.record.from.observable,
                      out.record.reward, out.record.to.observable, alpha,
                      cfg.gamma, terminal);
      log.beta = 1.0;
      log.zeta_star = alpha;
    }

    result.total_reward += out.record.reward;
    result.steps.push_back(log);
    ++t;
  }

  if (cfg.method == LearnerConfig::Method::rate && !solutions.empty()) {
    const RateSequence gamma = collect_gamma(solutions);
    const double zeta = double_supremum(gamma);
    for (const Visit& v : visits) {
      double step_size = zeta;
      if (cfg.zeta_per_pair) {
        for (const RateSolution& sol : solutions)
          if (sol.state == v.key) step_size = sol.terminal();
      }
      policy_update(agent.policy, v.key.state, v.key.action, step_size,
                    v.delta_sign);
    }
    agent.zeta_current = zeta;
    result.zeta_selected = zeta;
    result.gamma_size = gamma.size();
  } else {
    result.zeta_selected =
        cfg.method == LearnerConfig::Method::rate ? agent.zeta_current : cfg.alpha;
  }

  result.mean_delta = detail::mean_of(result.steps, &StepLog::delta);
  result.mean_beta = detail::mean_of(result.steps, &StepLog::beta);
  result.mean_dc1 = detail::mean_of(result.steps, &StepLog::d_c1);
  result.mean_dc2 = detail::mean_of(result.steps, &StepLog::d_c2);
  result.min_product =
      result.steps.empty() ? 0.0 : min_product;

  agent.episodes_done++;
  agent.epsilon_current *= cfg.epsilon_decay;
  return result;
}

}  // namespace sightread
