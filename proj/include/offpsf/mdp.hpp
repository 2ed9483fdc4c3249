#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "offpsf/errors.hpp"
#include "offpsf/rng.hpp"

namespace offpsf {

using StateIndex = std::size_t;
using ActionIndex = std::size_t;

inline constexpr StateIndex kTerminalState = 0;
inline constexpr std::size_t kDefaultHorizonCap = 200;
inline constexpr double kDefaultBehaviorFloor = 1e-3;
inline constexpr double kRowSumTolerance = 1e-12;

/// Finite episodic MDP. State 0 is the absorbing, zero-reward termination
/// state. Rewards sit on transitions (s, a, s'). Immutable after construction.
class TabularMdp {
 public:
  /// `transition` and `reward` are dense row-major tables of shape
  /// (num_states, num_actions, num_states).
  TabularMdp(std::size_t num_states, std::size_t num_actions, std::vector<double> transition,
             std::vector<double> reward, StateIndex start_state, double gamma)
      : num_states_(num_states),
        num_actions_(num_actions),
        transition_(std::move(transition)),
        reward_(std::move(reward)),
        start_state_(start_state),
        gamma_(gamma) {
    validate();
  }

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  StateIndex start_state() const noexcept { return start_state_; }
  double gamma() const noexcept { return gamma_; }

  double transition(StateIndex s, ActionIndex a, StateIndex next) const noexcept {
    return transition_[index(s, a, next)];
  }
  double reward(StateIndex s, ActionIndex a, StateIndex next) const noexcept {
    return reward_[index(s, a, next)];
  }
  std::span<const double> transition_row(StateIndex s, ActionIndex a) const noexcept {
    return {transition_.data() + index(s, a, 0), num_states_};
  }
  std::span<const double> reward_row(StateIndex s, ActionIndex a) const noexcept {
    return {reward_.data() + index(s, a, 0), num_states_};
  }
  const std::vector<double>& transition_table() const noexcept { return transition_; }
  const std::vector<double>& reward_table() const noexcept { return reward_; }

  /// Largest absolute reward in the table.
  double max_abs_reward() const noexcept {
    double r = 0.0;
    for (double x : reward_) r = std::max(r, std::abs(x));
    return r;
  }

 private:
  std::size_t index(StateIndex s, ActionIndex a, StateIndex next) const noexcept {
    return (s * num_actions_ + a) * num_states_ + next;
  }

  void validate() const {
    if (num_states_ < 2) throw ConfigError("MDP needs the terminal state plus at least one other state");
    if (num_actions_ < 1) throw ConfigError("MDP needs at least one action");
    const std::size_t cells = num_states_ * num_actions_ * num_states_;
    if (transition_.size() != cells)
      throw ConfigError("transition table has " + std::to_string(transition_.size()) +
                        " entries, expected " + std::to_string(cells));
    if (reward_.size() != cells)
      throw ConfigError("reward table has " + std::to_string(reward_.size()) + " entries, expected " +
                        std::to_string(cells));
    if (start_state_ >= num_states_ || start_state_ == kTerminalState)
      throw ConfigError("start state must be a non-terminal state index");
    if (!(gamma_ > 0.0 && gamma_ <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");

    for (StateIndex s = 0; s < num_states_; ++s) {
      for (ActionIndex a = 0; a < num_actions_; ++a) {
        double sum = 0.0;
        for (StateIndex t = 0; t < num_states_; ++t) {
          const double p = transition(s, a, t);
          if (!(p >= 0.0) || !std::isfinite(p))
            throw ConfigError("transition probability out of range at (" + std::to_string(s) + ", " +
                              std::to_string(a) + ", " + std::to_string(t) + ")");
          if (!std::isfinite(reward(s, a, t))) throw ConfigError("rewards must be finite");
          sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance)
          throw ConfigError("transition row (" + std::to_string(s) + ", " + std::to_string(a) +
                            ") does not sum to 1");
      }
    }
    for (ActionIndex a = 0; a < num_actions_; ++a) {
      if (transition(kTerminalState, a, kTerminalState) != 1.0)
        throw ConfigError("terminal state 0 must be absorbing");
      for (StateIndex t = 0; t < num_states_; ++t)
        if (reward(kTerminalState, a, t) != 0.0) throw ConfigError("terminal state 0 must carry zero reward");
    }
    check_termination_reachable();
  }

  // Any full-support behavior policy can take every action, so termination is
  // reachable under the behavior policy iff it is reachable in the union graph.
  // A shortest path has at most num_states - 1 edges.
  void check_termination_reachable() const {
    std::vector<bool> reaches(num_states_, false);
    reaches[kTerminalState] = true;
    for (std::size_t sweep = 0; sweep + 1 < num_states_; ++sweep) {
      bool changed = false;
      for (StateIndex s = 1; s < num_states_; ++s) {
        if (reaches[s]) continue;
        for (ActionIndex a = 0; a < num_actions_ && !reaches[s]; ++a)
          for (StateIndex t = 0; t < num_states_; ++t)
            if (transition(s, a, t) > 0.0 && reaches[t]) {
              reaches[s] = true;
              changed = true;
              break;
            }
      }
      if (!changed) break;
    }
    for (StateIndex s = 1; s < num_states_; ++s)
      if (!reaches[s])
        throw ConfigError("state " + std::to_string(s) + " cannot reach the terminal state");
  }

  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> transition_;
  std::vector<double> reward_;
  StateIndex start_state_;
  double gamma_;
};

/// Layout of the softmax logit vector: one logit per (non-terminal state, action).
struct PolicyShape {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;

  std::size_t dim() const noexcept { return (num_states - 1) * num_actions; }
  std::size_t offset(StateIndex s) const noexcept { return (s - 1) * num_actions; }

  static PolicyShape of(const TabularMdp& mdp) noexcept { return {mdp.num_states(), mdp.num_actions()}; }
  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

/// Logits theta of a tabular softmax target policy.
class PolicyParams {
 public:
  PolicyParams(PolicyShape shape, std::vector<double> theta) : shape_(shape), theta_(std::move(theta)) {
    if (shape_.num_states < 2 || shape_.num_actions < 1) throw ConfigError("invalid policy shape");
    if (theta_.size() != shape_.dim())
      throw ConfigError("policy parameter has dimension " + std::to_string(theta_.size()) + ", expected " +
                        std::to_string(shape_.dim()));
    for (double x : theta_)
      if (!std::isfinite(x)) throw ConfigError("policy parameters must be finite");
  }

  static PolicyParams zeros(const TabularMdp& mdp) {
    const auto shape = PolicyShape::of(mdp);
    return {shape, std::vector<double>(shape.dim(), 0.0)};
  }

  const PolicyShape& shape() const noexcept { return shape_; }
  std::span<const double> theta() const noexcept { return theta_; }
  std::size_t dim() const noexcept { return theta_.size(); }

 private:
  PolicyShape shape_;
  std::vector<double> theta_;
};

inline void require_shape(const TabularMdp& mdp, const PolicyShape& shape) {
  if (!(PolicyShape::of(mdp) == shape)) throw ConfigError("policy parameters do not match the MDP dimensions");
}

/// log pi_theta(action | state) for the softmax over the state's logits.
inline double log_target_prob(const PolicyShape& shape, std::span<const double> theta, StateIndex state,
                              ActionIndex action) {
  if (theta.size() != shape.dim()) throw ConfigError("policy parameter dimension mismatch");
  if (state == kTerminalState) throw DomainError("target policy is undefined at the terminal state");
  if (state >= shape.num_states || action >= shape.num_actions)
    throw DomainError("state or action index out of range");
  const auto logits = theta.subspan(shape.offset(state), shape.num_actions);
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double x : logits) z += std::exp(x - top);
  return logits[action] - top - std::log(z);
}

inline double target_policy_prob(const PolicyShape& shape, std::span<const double> theta, StateIndex state,
                                 ActionIndex action) {
  return std::exp(log_target_prob(shape, theta, state, action));
}

inline double target_policy_prob(const PolicyParams& params, StateIndex state, ActionIndex action) {
  return target_policy_prob(params.shape(), params.theta(), state, action);
}

/// Softmax distribution over actions at `state`.
inline std::vector<double> target_policy_row(const PolicyShape& shape, std::span<const double> theta,
                                             StateIndex state) {
  std::vector<double> row(shape.num_actions);
  for (ActionIndex a = 0; a < shape.num_actions; ++a) row[a] = target_policy_prob(shape, theta, state, a);
  return row;
}

/// Fixed behavior policy with full support above a probability floor.
class BehaviorPolicy {
 public:
  /// `probs` is row-major (num_states, num_actions); every row, including
  /// the terminal state's, must be a distribution with entries >= floor.
  BehaviorPolicy(std::size_t num_states, std::size_t num_actions, std::vector<double> probs,
                 double floor = kDefaultBehaviorFloor)
      : num_states_(num_states), num_actions_(num_actions), probs_(std::move(probs)), floor_(floor) {
    if (!(floor_ > 0.0)) throw ConfigError("behavior probability floor must be positive");
    if (probs_.size() != num_states_ * num_actions_)
      throw ConfigError("behavior table has " + std::to_string(probs_.size()) + " entries, expected " +
                        std::to_string(num_states_ * num_actions_));
    for (StateIndex s = 0; s < num_states_; ++s) {
      double sum = 0.0;
      for (ActionIndex a = 0; a < num_actions_; ++a) {
        const double p = prob(s, a);
        if (!(p >= floor_) || !std::isfinite(p))
          throw ConfigError("behavior probability at (" + std::to_string(s) + ", " + std::to_string(a) +
                            ") is below the floor");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance)
        throw ConfigError("behavior row " + std::to_string(s) + " does not sum to 1");
    }
    tag_ = compute_tag();
  }

  static BehaviorPolicy uniform(std::size_t num_states, std::size_t num_actions,
                                double floor = kDefaultBehaviorFloor) {
    return {num_states, num_actions,
            std::vector<double>(num_states * num_actions, 1.0 / static_cast<double>(num_actions)), floor};
  }
  static BehaviorPolicy uniform(const TabularMdp& mdp, double floor = kDefaultBehaviorFloor) {
    return uniform(mdp.num_states(), mdp.num_actions(), floor);
  }

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  double floor() const noexcept { return floor_; }
  double prob(StateIndex s, ActionIndex a) const noexcept { return probs_[s * num_actions_ + a]; }
  std::span<const double> row(StateIndex s) const noexcept {
    return {probs_.data() + s * num_actions_, num_actions_};
  }
  const std::vector<double>& table() const noexcept { return probs_; }

  /// Provenance fingerprint stamped on every trajectory this policy generates.
  std::uint64_t tag() const noexcept { return tag_; }

  /// Logits that make the softmax target policy reproduce this policy.
  std::vector<double> matching_logits() const {
    std::vector<double> theta;
    theta.reserve((num_states_ - 1) * num_actions_);
    for (StateIndex s = 1; s < num_states_; ++s)
      for (ActionIndex a = 0; a < num_actions_; ++a) theta.push_back(std::log(prob(s, a)));
    return theta;
  }

 private:
  std::uint64_t compute_tag() const noexcept {
    std::uint64_t h = mix64(num_states_ * 0x100000001b3ULL + num_actions_);
    for (double p : probs_) h = mix64(h ^ std::bit_cast<std::uint64_t>(p));
    return h;
  }

  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> probs_;
  double floor_;
  std::uint64_t tag_ = 0;
};

inline void require_compatible(const TabularMdp& mdp, const BehaviorPolicy& behavior) {
  if (behavior.num_states() != mdp.num_states() || behavior.num_actions() != mdp.num_actions())
    throw ConfigError("behavior policy does not match the MDP dimensions");
}

struct Step {
  StateIndex state = 0;
  ActionIndex action = 0;
  double reward = 0.0;  // received on entering the next state

  friend bool operator==(const Step&, const Step&) = default;
};

/// One behavior-policy episode.
struct Trajectory {
  std::vector<Step> steps;
  std::uint64_t behavior_tag = 0;

  std::size_t length() const noexcept { return steps.size(); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

namespace detail {

// Inverse-CDF draw; the last index with positive mass absorbs rounding.
template <class Urbg>
std::size_t sample_index(std::span<const double> probs, Urbg& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace detail

/// Rolls out one episode under `behavior`, stopping at the terminal state or
/// after `horizon_cap` steps.
template <class Urbg>
Trajectory sample_trajectory(const TabularMdp& mdp, const BehaviorPolicy& behavior, Urbg& rng,
                             std::size_t horizon_cap = kDefaultHorizonCap) {
  require_compatible(mdp, behavior);
  if (horizon_cap < 1) throw ConfigError("horizon_cap must be at least 1");
  Trajectory traj;
  traj.behavior_tag = behavior.tag();
  StateIndex s = mdp.start_state();
  for (std::size_t t = 0; t < horizon_cap; ++t) {
    const ActionIndex a = detail::sample_index(behavior.row(s), rng);
    const StateIndex next = detail::sample_index(mdp.transition_row(s, a), rng);
    traj.steps.push_back({s, a, mdp.reward(s, a, next)});
    if (next == kTerminalState) break;
    s = next;
  }
  return traj;
}

/// J(theta) by backward induction over `horizon_cap` remaining steps.
inline double exact_value(const TabularMdp& mdp, const PolicyShape& shape, std::span<const double> theta,
                          std::size_t horizon_cap = kDefaultHorizonCap) {
  require_shape(mdp, shape);
  if (theta.size() != shape.dim()) throw ConfigError("policy parameter dimension mismatch");
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();

  std::vector<double> pi(S * A, 0.0);
  for (StateIndex s = 1; s < S; ++s) {
    const auto row = target_policy_row(shape, theta, s);
    std::copy(row.begin(), row.end(), pi.begin() + static_cast<std::ptrdiff_t>(s * A));
  }

  std::vector<double> v(S, 0.0), next_v(S, 0.0);
  for (std::size_t h = 0; h < horizon_cap; ++h) {
    next_v[kTerminalState] = 0.0;
    for (StateIndex s = 1; s < S; ++s) {
      double value = 0.0;
      for (ActionIndex a = 0; a < A; ++a) {
        const auto p = mdp.transition_row(s, a);
        const auto r = mdp.reward_row(s, a);
        double q = 0.0;
        for (StateIndex t = 0; t < S; ++t)
          if (p[t] > 0.0) q += p[t] * (r[t] + mdp.gamma() * v[t]);
        value += pi[s * A + a] * q;
      }
      next_v[s] = value;
    }
    std::swap(v, next_v);
  }
  return v[mdp.start_state()];
}

inline double exact_value(const TabularMdp& mdp, const PolicyParams& params,
                          std::size_t horizon_cap = kDefaultHorizonCap) {
  return exact_value(mdp, params.shape(), params.theta(), horizon_cap);
}

}  // namespace offpsf
