#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sightread/rng.hpp"

namespace sightread {

// Monotone utility applied to the rhythm feature; the saturating variant is
// bounded above so the drift cannot run away on large c1 swings.
struct UtilityFunction {
  enum class Kind { linear, log_saturating };

  Kind kind = Kind::log_saturating;
  double scale = 1.0;  // slope (linear) or saturation scale

  static UtilityFunction linear(double slope) {
    return {Kind::linear, slope};
  }
  static UtilityFunction log_saturating(double scale) {
    return {Kind::log_saturating, scale};
  }

  double value(double x) const {
    if (kind == Kind::linear) return scale * x;
    // logistic saturation, bounded in (0, 1)
    return 1.0 / (1.0 + std::exp(-x / scale));
  }

  double derivative(double x) const {
    if (kind == Kind::linear) return scale;
    const double s = value(x);
    return s * (1.0 - s) / scale;
  }
};

// Bounded zero-mean increment process: i.i.d. uniform draws on [-sigma, sigma]
// from the given seed.
struct MarkovNoise {
  double sigma = 0.01;
  std::uint64_t seed = 0;
};

struct StateActionKey {
  int state = -1;
  int action = -1;

  friend bool operator==(StateActionKey a, StateActionKey b) {
    return a.state == b.state && a.action == b.action;
  }
};

struct RateSolution {
  std::vector<double> values;  // zeta*(t) on the uniform grid, steps + 1 long
  StateActionKey state;        // the (s, a) context it was solved for
  double dt = 0.0;

  double terminal() const { return values.back(); }
};

// Explicit first-order integration of the policy-rate equation
//   d zeta = -d/dt U(c1(t)) dt + dm(t)
// with the drift evaluated at the left endpoint: U'(c1(t_n)) times the
// finite-difference slope of c1 over the step. Clamped to
// [zeta_min, zeta_max] after every step.
inline RateSolution solve_rate_sde(std::span<const double> c1_trajectory,
                                   const UtilityFunction& u,
                                   const MarkovNoise& noise, double zeta0,
                                   double dt, std::size_t steps,
                                   double zeta_min = 0.0, double zeta_max = 1.0,
                                   StateActionKey context = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("solve_rate_sde: dt must be > 0");
  if (steps < 1) throw std::invalid_argument("solve_rate_sde: steps must be >= 1");
  if (c1_trajectory.size() < steps + 1)
    throw std::invalid_argument("solve_rate_sde: c1 trajectory too short");
  if (!(zeta_min <= zeta_max))
    throw std::invalid_argument("solve_rate_sde: bad clamp bounds");
  if (noise.sigma < 0.0)
    throw std::invalid_argument("solve_rate_sde: sigma must be >= 0");

  Rng rng(noise.seed);
  RateSolution sol;
  sol.state = context;
  sol.dt = dt;
  sol.values.reserve(steps + 1);

  double zeta = std::clamp(zeta0, zeta_min, zeta_max);
  sol.values.push_back(zeta);
  for (std::size_t n = 0; n < steps; ++n) {
    const double slope = (c1_trajectory[n + 1] - c1_trajectory[n]) / dt;
    const double drift = u.derivative(c1_trajectory[n]) * slope;
    const double dm = noise.sigma * (2.0 * rng.uniform01() - 1.0);
    zeta = std::clamp(zeta - drift * dt + dm, zeta_min, zeta_max);
    sol.values.push_back(zeta);
  }
  return sol;
}

struct RateEntry {
  double value = 0.0;
  StateActionKey key;
};

// Gamma: the terminal rate of every solved (s, a), sorted descending.
struct RateSequence {
  std::vector<RateEntry> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

inline RateSequence collect_gamma(std::span<const RateSolution> solutions) {
  if (solutions.empty())
    throw std::invalid_argument("collect_gamma: no solutions");
  RateSequence gamma;
  gamma.entries.reserve(solutions.size());
  for (const RateSolution& sol : solutions)
    gamma.entries.push_back({sol.terminal(), sol.state});
  std::sort(gamma.entries.begin(), gamma.entries.end(),
            [](const RateEntry& a, const RateEntry& b) {
              if (a.value != b.value) return a.value > b.value;
              if (a.key.state != b.key.state) return a.key.state < b.key.state;
              return a.key.action < b.key.action;
            });
  return gamma;
}

// sup over states of (sup over actions): for the finite sequence this is the
// attained global maximum.
inline double double_supremum(const RateSequence& gamma) {
  if (gamma.empty())
    throw std::invalid_argument("double_supremum: empty rate sequence");
  // inner supremum per state
  std::vector<std::pair<int, double>> per_state;
  for (const RateEntry& e : gamma.entries) {
    auto it = std::find_if(per_state.begin(), per_state.end(),
                           [&](const auto& p) { return p.first == e.key.state; });
    if (it == per_state.end())
      per_state.emplace_back(e.key.state, e.value);
    else
      it->second = std::max(it->second, e.value);
  }
  // outer supremum over states
  double best = per_state.front().second;
  for (const auto& [state, v] : per_state) best = std::max(best, v);
  return best;
}

// Reported alongside the supremum; the sequence's extreme entries.
struct RateBounds {
  double upper = 0.0;
  double lower = 0.0;
};

inline RateBounds gamma_bounds(const RateSequence& gamma) {
  if (gamma.empty())
    throw std::invalid_argument("gamma_bounds: empty rate sequence");
  return {gamma.entries.front().value, gamma.entries.back().value};
}

}  // namespace sightread
