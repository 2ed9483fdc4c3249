#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "offpsf/errors.hpp"
#include "offpsf/mdp.hpp"
#include "offpsf/off_policy_eval.hpp"
#include "offpsf/rng.hpp"
#include "offpsf/sf_grad.hpp"
#include "offpsf/stats.hpp"

namespace offpsf {

/// Axis-aligned box [lower_j, upper_j] for the projected iterates.
class BoxSet {
 public:
  BoxSet(std::vector<double> lower, std::vector<double> upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size()) throw ConfigError("box bounds have different lengths");
    if (lower_.empty()) throw ConfigError("box must have dimension at least 1");
    for (std::size_t j = 0; j < lower_.size(); ++j)
      if (!(lower_[j] < upper_[j]) || !std::isfinite(lower_[j]) || !std::isfinite(upper_[j]))
        throw ConfigError("box bound " + std::to_string(j) + " needs finite lower < upper");
  }

  static BoxSet cube(std::size_t d, double lower, double upper) {
    return {std::vector<double>(d, lower), std::vector<double>(d, upper)};
  }

  std::size_t dim() const noexcept { return lower_.size(); }
  std::span<const double> lower() const noexcept { return lower_; }
  std::span<const double> upper() const noexcept { return upper_; }

  bool contains(std::span<const double> theta) const noexcept {
    if (theta.size() != dim()) return false;
    for (std::size_t j = 0; j < dim(); ++j)
      if (!(theta[j] >= lower_[j] && theta[j] <= upper_[j])) return false;
    return true;
  }

  std::vector<double> center() const {
    std::vector<double> c(dim());
    for (std::size_t j = 0; j < dim(); ++j) c[j] = 0.5 * (lower_[j] + upper_[j]);
    return c;
  }

  /// Coordinates sitting on a face of the box.
  std::vector<std::size_t> active_faces(std::span<const double> theta) const {
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < dim(); ++j)
      if (theta[j] <= lower_[j] || theta[j] >= upper_[j]) active.push_back(j);
    return active;
  }

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// Per-coordinate clamp onto the box.
inline std::vector<double> project_box(std::span<const double> theta, const BoxSet& box) {
  if (theta.size() != box.dim()) throw ConfigError("projection dimension mismatch");
  std::vector<double> out(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) out[j] = std::clamp(theta[j], box.lower()[j], box.upper()[j]);
  return out;
}

/// Gradient mapping (1/alpha) [Proj(theta + alpha g) - theta].
inline std::vector<double> prox_map(std::span<const double> theta, std::span<const double> g, double alpha,
                                    const BoxSet& box) {
  if (!(alpha > 0.0)) throw DomainError("prox map needs alpha > 0");
  if (theta.size() != box.dim() || g.size() != box.dim()) throw ConfigError("prox map dimension mismatch");
  std::vector<double> out(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double stepped = std::clamp(theta[j] + alpha * g[j], box.lower()[j], box.upper()[j]);
    out[j] = (stepped - theta[j]) / alpha;
  }
  return out;
}

/// Step sizes alpha_k, smoothing radii mu_k, direction counts n_k and the
/// fixed batch size m, materialized for k = 0 .. size()-1.
struct Schedule {
  std::string kind;
  std::vector<double> alpha;
  std::vector<double> mu;
  std::vector<std::size_t> n;
  std::size_t m = 1;

  std::size_t size() const noexcept { return alpha.size(); }

  // Positivity conditions every schedule must meet.
  void validate() const {
    if (alpha.size() != mu.size() || alpha.size() != n.size())
      throw ConfigError("schedule sequences have different lengths");
    if (m < 1) throw ConfigError("batch size m must be at least 1");
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      if (!(alpha[k] > 0.0) || !std::isfinite(alpha[k]))
        throw ConfigError("alpha_" + std::to_string(k) + " must be positive");
      if (!(mu[k] > 0.0) || !std::isfinite(mu[k])) throw ConfigError("mu_" + std::to_string(k) + " must be positive");
      if (n[k] < 1) throw ConfigError("n_" + std::to_string(k) + " must be at least 1");
    }
  }
};

/// Constant schedule alpha = c1/sqrt(N), mu = c2/sqrt(N), n = ceil(c3 N).
inline Schedule corollary_schedule(std::size_t N, double c1, double c2, double c3, std::size_t m) {
  if (N < 1) throw ConfigError("iteration budget N must be at least 1");
  if (!(c1 > 0.0) || !(c2 > 0.0) || !(c3 > 0.0)) throw ConfigError("schedule constants c1, c2, c3 must be positive");
  if (m < 1) throw ConfigError("batch size m must be at least 1");
  const double root = std::sqrt(static_cast<double>(N));
  const double mu = c2 / root;
  if (mu > 1.0) throw ConfigError("c2 / sqrt(N) exceeds the maximum smoothing radius 1");
  // Guard ceil against c3*N landing a few ulps above an integer.
  const double raw_n = c3 * static_cast<double>(N);
  const double n = std::max(1.0, std::ceil(raw_n - 1e-9 * std::max(1.0, raw_n)));
  Schedule s;
  s.kind = "corollary";
  s.alpha.assign(N, c1 / root);
  s.mu.assign(N, mu);
  s.n.assign(N, static_cast<std::size_t>(n));
  s.m = m;
  s.validate();
  return s;
}

/// Power-law decay exponents alpha_k ~ (k+1)^-a, mu_k ~ (k+1)^-b, n_k ~ (k+1)^c.
struct AsymptoticRates {
  double alpha_exponent = 1.0;
  double mu_exponent = 0.25;
  double n_exponent = 0.5;

  // alpha, mu -> 0 and n -> infinity; sum alpha diverges iff a <= 1 and
  // sum alpha^2 converges iff a > 1/2.
  bool satisfies_step_conditions() const noexcept {
    return alpha_exponent > 0.5 && alpha_exponent <= 1.0 && mu_exponent > 0.0 && n_exponent > 0.0;
  }
};

inline constexpr AsymptoticRates kAsymptoticPreset{};

/// alpha_k = a0/(k+1), mu_k = mu0/(k+1)^{1/4}, n_k = ceil(n_growth sqrt(k+1)), k < length.
inline Schedule asymptotic_schedule(std::size_t length, double a0, double mu0, double n_growth, std::size_t m) {
  if (!(a0 > 0.0) || !(mu0 > 0.0) || !(n_growth > 0.0))
    throw ConfigError("asymptotic schedule constants must be positive");
  if (m < 1) throw ConfigError("batch size m must be at least 1");
  Schedule s;
  s.kind = "asymptotic";
  s.m = m;
  s.alpha.resize(length);
  s.mu.resize(length);
  s.n.resize(length);
  for (std::size_t k = 0; k < length; ++k) {
    const double kk = static_cast<double>(k + 1);
    s.alpha[k] = a0 * std::pow(kk, -kAsymptoticPreset.alpha_exponent);
    s.mu[k] = mu0 * std::pow(kk, -kAsymptoticPreset.mu_exponent);
    s.n[k] = static_cast<std::size_t>(std::max(1.0, std::ceil(n_growth * std::pow(kk, kAsymptoticPreset.n_exponent))));
  }
  s.validate();
  return s;
}

/// Draws R in {0, ..., N-1} with P(R = k) proportional to alpha_k.
template <class Urbg>
std::size_t sample_stationarity_index(const Schedule& schedule, std::size_t N, Urbg& rng) {
  if (N < 1) throw ConfigError("N must be at least 1");
  if (schedule.size() < N) throw ConfigError("schedule is shorter than N");
  std::vector<double> cumulative(N);
  double total = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    total += std::max(0.0, schedule.alpha[k]);
    cumulative[k] = total;
  }
  if (!(total > 0.0)) throw DomainError("step sizes carry no mass");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double target = unif(rng) * total;
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  const auto k = static_cast<std::size_t>(it - cumulative.begin());
  return k < N ? k : N - 1;
}

using ObjectiveFn = std::function<double(std::span<const double>)>;

/// Optional per-iteration diagnostics computed from an exact objective.
struct Diagnostics {
  bool exact = false;       // exact J and stationarity ||P(theta_k, grad J, alpha_k)||^2
  bool bias_noise = false;  // ||xi_k|| and ||beta_k||
  std::size_t oracle_samples = 2000;
  double fd_step = 1e-5;
  double converge_tol = 1e-3;
  std::size_t converge_window = 50;
};

struct RunResult {
  std::vector<std::vector<double>> theta_trace;     // N + 1 iterates
  std::vector<std::vector<double>> estimate_trace;  // N gradient estimates
  std::vector<double> exact_j_trace;                // N + 1 when diagnostics.exact
  std::vector<double> stationarity_trace;           // N when diagnostics.exact
  std::vector<double> xi_norm_trace;                // N when diagnostics.bias_noise
  std::vector<double> beta_norm_trace;              // N when diagnostics.bias_noise
  std::vector<double> beta_se_trace;                // ||SE|| of the grad J_mu oracle behind beta
  std::size_t sampled_index = 0;
  std::vector<double> final_theta;
  std::uint64_t master_seed = 0;
  Schedule schedule;
  std::size_t iterations = 0;
  std::optional<std::size_t> converged_at;
  std::vector<std::size_t> active_constraints;

  bool has_exact() const noexcept { return !exact_j_trace.empty(); }
  bool has_bias_noise() const noexcept { return !xi_norm_trace.empty(); }
};

/// ||P(theta, grad, alpha)||^2.
inline double stationarity_measure(std::span<const double> theta, std::span<const double> grad, double alpha,
                                   const BoxSet& box) {
  return squared_norm(prox_map(theta, grad, alpha, box));
}

/// First k at which ||P|| < tol holds for `window` consecutive iterations.
inline std::optional<std::size_t> detect_convergence(std::span<const double> stationarity_sq, double tol,
                                                     std::size_t window) {
  if (window == 0) return std::nullopt;
  std::size_t run = 0;
  for (std::size_t k = 0; k < stationarity_sq.size(); ++k) {
    run = std::sqrt(stationarity_sq[k]) < tol ? run + 1 : 0;
    if (run >= window) return k + 1 - window;
  }
  return std::nullopt;
}

/// Projected smoothed-functional ascent over an arbitrary per-iteration
/// objective estimate. `make_estimate(k, batch_seed)` returns the value
/// function for iteration k; both perturbations of every direction are
/// evaluated on that same function. `exact` backs the diagnostics.
template <class EstimateFactory>
RunResult projected_sf_ascent(EstimateFactory&& make_estimate, const ObjectiveFn& exact, const BoxSet& box,
                              const Schedule& schedule, std::span<const double> theta0, std::size_t N,
                              std::uint64_t master_seed, const Diagnostics& diagnostics = {}) {
  schedule.validate();
  if (N < 1) throw ConfigError("iteration budget N must be at least 1");
  if (schedule.size() < N)
    throw ConfigError("schedule has " + std::to_string(schedule.size()) + " entries, need " + std::to_string(N));
  if (!box.contains(theta0)) throw ConfigError("initial parameters must lie inside the box");
  if ((diagnostics.exact || diagnostics.bias_noise) && !exact)
    throw ConfigError("diagnostics need an exact objective");

  const std::size_t d = theta0.size();
  RunResult result;
  result.master_seed = master_seed;
  result.schedule = schedule;
  result.iterations = N;
  result.theta_trace.reserve(N + 1);
  result.estimate_trace.reserve(N);

  std::vector<double> theta(theta0.begin(), theta0.end());
  result.theta_trace.push_back(theta);

  auto exact_gradient = [&](std::span<const double> at) {
    return finite_diff_gradient(exact, at, diagnostics.fd_step);
  };

  for (std::size_t k = 0; k < N; ++k) {
    try {
      auto value_fn = make_estimate(k, derive_seed(master_seed, {stream::kBatch, k}));
      Rng direction_rng = make_stream(master_seed, {stream::kDirections, k});
      const SfConfig cfg{schedule.mu[k], schedule.n[k], d};
      GradEstimate est = sf_gradient_estimate(value_fn, theta, cfg, direction_rng);

      if (diagnostics.exact) {
        result.exact_j_trace.push_back(exact(theta));
        const auto grad = exact_gradient(theta);
        result.stationarity_trace.push_back(stationarity_measure(theta, grad, schedule.alpha[k], box));
      }
      if (diagnostics.bias_noise) {
        Rng oracle_rng = make_stream(master_seed, {stream::kOracle, k});
        const auto smoothed =
            sf_gradient_mean_oracle(exact, theta, schedule.mu[k], diagnostics.oracle_samples, oracle_rng);
        const auto grad = exact_gradient(theta);
        std::vector<double> xi(d), beta(d);
        for (std::size_t j = 0; j < d; ++j) {
          xi[j] = est.grad[j] - smoothed.mean[j];
          beta[j] = smoothed.mean[j] - grad[j];
        }
        result.xi_norm_trace.push_back(norm(xi));
        result.beta_norm_trace.push_back(norm(beta));
        result.beta_se_trace.push_back(norm(smoothed.std_error));
      }

      std::vector<double> stepped(d);
      for (std::size_t j = 0; j < d; ++j) stepped[j] = theta[j] + schedule.alpha[k] * est.grad[j];
      theta = project_box(stepped, box);
      result.estimate_trace.push_back(std::move(est.grad));
      result.theta_trace.push_back(theta);
    } catch (...) {
      detail::rethrow_with_context("iteration " + std::to_string(k));
    }
  }

  if (diagnostics.exact) {
    result.exact_j_trace.push_back(exact(theta));
    result.converged_at =
        detect_convergence(result.stationarity_trace, diagnostics.converge_tol, diagnostics.converge_window);
  }
  Rng index_rng = make_stream(master_seed, {stream::kIndex});
  result.sampled_index = sample_stationarity_index(schedule, N, index_rng);
  result.final_theta = theta;
  result.active_constraints = box.active_faces(theta);
  return result;
}

/// Objective J(theta) for the MDP, via backward induction.
inline ObjectiveFn exact_objective(const TabularMdp& mdp, std::size_t horizon_cap = kDefaultHorizonCap) {
  return [&mdp, horizon_cap](std::span<const double> theta) {
    return exact_value(mdp, PolicyShape::of(mdp), theta, horizon_cap);
  };
}

/// Gradient of J by central differences on the exact value.
inline std::vector<double> exact_gradient(const TabularMdp& mdp, std::span<const double> theta,
                                          std::size_t horizon_cap = kDefaultHorizonCap, double h = 1e-5) {
  return finite_diff_gradient(exact_objective(mdp, horizon_cap), theta, h);
}

/// Off-policy smoothed-functional policy gradient: each iteration draws m
/// behavior trajectories, estimates the gradient from importance-sampled
/// values at theta +/- mu v_i on that shared batch, and takes a projected step.
inline RunResult offp_sf_run(const TabularMdp& mdp, const BehaviorPolicy& behavior, const BoxSet& box,
                             const Schedule& schedule, std::span<const double> theta0, std::size_t N,
                             std::uint64_t master_seed, const Diagnostics& diagnostics = {},
                             std::size_t horizon_cap = kDefaultHorizonCap) {
  require_compatible(mdp, behavior);
  const PolicyShape shape = PolicyShape::of(mdp);
  if (theta0.size() != shape.dim() || box.dim() != shape.dim())
    throw ConfigError("initial parameters and box must have dimension " + std::to_string(shape.dim()));
  const std::size_t m = schedule.m;
  auto make_estimate = [&](std::size_t, std::uint64_t batch_seed) {
    return [batch = sample_batch(mdp, behavior, m, batch_seed, horizon_cap)](std::span<const double> theta) {
      return pdis_estimate(batch, theta);
    };
  };
  return projected_sf_ascent(make_estimate, exact_objective(mdp, horizon_cap), box, schedule, theta0, N,
                             master_seed, diagnostics);
}

}  // namespace offpsf
