#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "offpsf/errors.hpp"
#include "offpsf/mdp.hpp"
#include "offpsf/rng.hpp"
#include "offpsf/stats.hpp"

namespace offpsf {

/// Sum of gamma^t r_{t+1} along the trajectory.
inline double discounted_return(const Trajectory& trajectory, double gamma) {
  double total = 0.0;
  double discount = 1.0;
  for (const Step& step : trajectory.steps) {
    total += discount * step.reward;
    discount *= gamma;
  }
  return total;
}

/// m behavior-policy trajectories shared by every off-policy evaluation of
/// one optimizer iteration.
class EvalBatch {
 public:
  EvalBatch(std::vector<Trajectory> trajectories, BehaviorPolicy behavior, double gamma)
      : trajectories_(std::move(trajectories)), behavior_(std::move(behavior)), gamma_(gamma) {
    if (trajectories_.empty()) throw ConfigError("evaluation batch must hold at least one trajectory");
    if (!(gamma_ > 0.0 && gamma_ <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
    for (std::size_t n = 0; n < trajectories_.size(); ++n) {
      if (trajectories_[n].behavior_tag != behavior_.tag())
        throw DataIntegrityError("trajectory " + std::to_string(n) +
                                 " was not generated by the batch's behavior policy");
      if (trajectories_[n].steps.empty())
        throw DataIntegrityError("trajectory " + std::to_string(n) + " is empty");
    }
  }

  std::size_t size() const noexcept { return trajectories_.size(); }
  const std::vector<Trajectory>& trajectories() const noexcept { return trajectories_; }
  const BehaviorPolicy& behavior() const noexcept { return behavior_; }
  double gamma() const noexcept { return gamma_; }
  PolicyShape shape() const noexcept { return {behavior_.num_states(), behavior_.num_actions()}; }

 private:
  std::vector<Trajectory> trajectories_;
  BehaviorPolicy behavior_;
  double gamma_;
};

/// Draws m trajectories; trajectory j uses the stream derived from (batch_seed, j)
/// so the batch does not depend on how the draws are scheduled.
inline EvalBatch sample_batch(const TabularMdp& mdp, const BehaviorPolicy& behavior, std::size_t m,
                              std::uint64_t batch_seed, std::size_t horizon_cap = kDefaultHorizonCap) {
  if (m < 1) throw ConfigError("batch size m must be at least 1");
  std::vector<Trajectory> trajectories;
  trajectories.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    Rng rng = make_stream(batch_seed, {j});
    trajectories.push_back(sample_trajectory(mdp, behavior, rng, horizon_cap));
  }
  return {std::move(trajectories), behavior, mdp.gamma()};
}

/// Per-decision importance-sampling estimate of J(theta):
///   (1/m) sum_n sum_t gamma^t r^n_{t+1} prod_{i<=t} pi_theta(a_i|s_i) / b(a_i|s_i).
/// Cumulative ratios are accumulated in log space. Per-trajectory terms are
/// combined by pairwise summation in trajectory order.
inline double pdis_estimate(const EvalBatch& batch, std::span<const double> theta) {
  const PolicyShape shape = batch.shape();
  if (theta.size() != shape.dim())
    throw ConfigError("policy parameter has dimension " + std::to_string(theta.size()) + ", expected " +
                      std::to_string(shape.dim()));
  const BehaviorPolicy& b = batch.behavior();
  const std::size_t A = shape.num_actions;

  // log pi_theta - log b for every (state, action); row 0 is never used.
  std::vector<double> log_ratio(shape.num_states * A, 0.0);
  for (StateIndex s = 1; s < shape.num_states; ++s)
    for (ActionIndex a = 0; a < A; ++a)
      log_ratio[s * A + a] = log_target_prob(shape, theta, s, a) - std::log(b.prob(s, a));

  std::vector<double> per_trajectory;
  per_trajectory.reserve(batch.size());
  for (const Trajectory& traj : batch.trajectories()) {
    double log_weight = 0.0;
    double discount = 1.0;
    double total = 0.0;
    for (const Step& step : traj.steps) {
      if (step.state == kTerminalState || step.state >= shape.num_states || step.action >= A)
        throw DataIntegrityError("trajectory step has an invalid state or action");
      if (!(b.prob(step.state, step.action) >= b.floor()))
        throw DataIntegrityError("recorded action has behavior probability below the floor");
      log_weight += log_ratio[step.state * A + step.action];
      const double weight = std::exp(log_weight);
      if (!std::isfinite(weight)) throw NumericError("importance weight overflowed");
      total += discount * step.reward * weight;
      discount *= batch.gamma();
    }
    per_trajectory.push_back(total);
  }
  const double estimate = pairwise_sum(per_trajectory) / static_cast<double>(batch.size());
  if (!std::isfinite(estimate)) throw NumericError("importance-sampling estimate is not finite");
  return estimate;
}

inline double pdis_estimate(const EvalBatch& batch, const PolicyParams& params) {
  if (!(params.shape() == batch.shape())) throw ConfigError("policy parameters do not match the batch's MDP");
  return pdis_estimate(batch, params.theta());
}

}  // namespace offpsf
