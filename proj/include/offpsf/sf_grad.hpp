#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "offpsf/errors.hpp"
#include "offpsf/stats.hpp"

namespace offpsf {

/// Anything that maps a parameter vector to a scalar value estimate.
template <class F>
concept ValueFunction = std::invocable<F&, std::span<const double>> &&
                        std::convertible_to<std::invoke_result_t<F&, std::span<const double>>, double>;

/// Two-point estimator settings: smoothing radius mu in (0, 1], n directions.
struct SfConfig {
  double mu = 0.1;
  std::size_t n = 1;
  std::size_t d = 1;

  void validate() const {
    if (!(mu > 0.0)) throw ConfigError("smoothing radius mu must be positive");
    if (mu > 1.0) throw ConfigError("smoothing radius mu must not exceed 1 (perturbations leave the unit enlargement of the box)");
    if (n < 1) throw ConfigError("number of sphere directions n must be at least 1");
    if (d < 1) throw ConfigError("parameter dimension d must be at least 1");
  }
};

struct GradEstimate {
  std::vector<double> grad;
  std::size_t directions_used = 0;
  double mu_used = 0.0;
};

/// Uniform draw from the unit sphere in R^d (normalized standard normal).
template <class Urbg>
std::vector<double> sample_unit_sphere(Urbg& rng, std::size_t d) {
  if (d == 0) throw DomainError("unit sphere needs dimension d >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(d);
  double len = 0.0;
  while (!(len > 0.0)) {
    for (double& x : v) x = normal(rng);
    len = norm(v);
  }
  for (double& x : v) x /= len;
  return v;
}

/// Uniform draw from the unit ball: sphere point scaled by U^{1/d}.
template <class Urbg>
std::vector<double> sample_unit_ball(Urbg& rng, std::size_t d) {
  auto v = sample_unit_sphere(rng, d);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double radius = std::pow(unif(rng), 1.0 / static_cast<double>(d));
  for (double& x : v) x *= radius;
  return v;
}

/// (d/n) sum_i [f(theta + mu v_i) - f(theta - mu v_i)] / (2 mu) v_i over the
/// given unit directions.
template <ValueFunction F>
GradEstimate sf_gradient_from_directions(F&& value_fn, std::span<const double> theta, double mu,
                                         std::span<const std::vector<double>> directions) {
  const std::size_t d = theta.size();
  SfConfig{mu, directions.size(), d}.validate();

  std::vector<double> plus(d), minus(d), grad(d, 0.0);
  for (const auto& v : directions) {
    if (v.size() != d) throw ConfigError("direction dimension does not match theta");
    for (std::size_t j = 0; j < d; ++j) {
      plus[j] = theta[j] + mu * v[j];
      minus[j] = theta[j] - mu * v[j];
    }
    const double up = value_fn(std::span<const double>(plus));
    const double down = value_fn(std::span<const double>(minus));
    const double slope = (up - down) / (2.0 * mu);
    for (std::size_t j = 0; j < d; ++j) grad[j] += slope * v[j];
  }
  const double scale = static_cast<double>(d) / static_cast<double>(directions.size());
  for (double& g : grad) {
    g *= scale;
    if (!std::isfinite(g)) throw NumericError("gradient estimate is not finite");
  }
  return {std::move(grad), directions.size(), mu};
}

/// Two-point smoothed-functional gradient estimate with cfg.n fresh directions.
template <ValueFunction F, class Urbg>
GradEstimate sf_gradient_estimate(F&& value_fn, std::span<const double> theta, const SfConfig& cfg, Urbg& rng) {
  cfg.validate();
  if (cfg.d != theta.size())
    throw ConfigError("SfConfig dimension " + std::to_string(cfg.d) + " does not match theta dimension " +
                      std::to_string(theta.size()));
  std::vector<std::vector<double>> directions;
  directions.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) directions.push_back(sample_unit_sphere(rng, cfg.d));
  return sf_gradient_from_directions(value_fn, theta, cfg.mu, directions);
}

/// Monte-Carlo estimate of J_mu(theta) = E_{u ~ unit ball}[f(theta + mu u)].
template <ValueFunction F, class Urbg>
MeanWithError smoothed_value_oracle(F&& value_fn, std::span<const double> theta, double mu,
                                    std::size_t num_samples, Urbg& rng) {
  if (num_samples < 1) throw ConfigError("num_samples must be at least 1");
  if (!(mu > 0.0)) throw ConfigError("smoothing radius mu must be positive");
  const std::size_t d = theta.size();
  RunningStats stats;
  std::vector<double> point(d);
  for (std::size_t s = 0; s < num_samples; ++s) {
    const auto u = sample_unit_ball(rng, d);
    for (std::size_t j = 0; j < d; ++j) point[j] = theta[j] + mu * u[j];
    stats.add(value_fn(std::span<const double>(point)));
  }
  return {stats.mean(), stats.std_error()};
}

/// Monte-Carlo estimate of grad J_mu(theta) via the one-point sphere identity
/// grad J_mu = E_v[(d/mu) f(theta + mu v) v]. f(theta) is subtracted as a
/// baseline; E[v] = 0 keeps the mean unchanged while removing the O(d/mu)
/// noise floor.
template <ValueFunction F, class Urbg>
VectorMeanWithError sf_gradient_mean_oracle(F&& value_fn, std::span<const double> theta, double mu,
                                            std::size_t num_samples, Urbg& rng) {
  if (num_samples < 1) throw ConfigError("num_samples must be at least 1");
  if (!(mu > 0.0)) throw ConfigError("smoothing radius mu must be positive");
  const std::size_t d = theta.size();
  const double baseline = value_fn(theta);
  const double scale = static_cast<double>(d) / mu;
  VectorStats stats(d);
  std::vector<double> point(d), sample(d);
  for (std::size_t s = 0; s < num_samples; ++s) {
    const auto v = sample_unit_sphere(rng, d);
    for (std::size_t j = 0; j < d; ++j) point[j] = theta[j] + mu * v[j];
    const double delta = value_fn(std::span<const double>(point)) - baseline;
    for (std::size_t j = 0; j < d; ++j) sample[j] = scale * delta * v[j];
    stats.add(sample);
  }
  return {stats.mean(), stats.std_error()};
}

/// Central differences along each coordinate axis.
template <ValueFunction F>
std::vector<double> finite_diff_gradient(F&& value_fn, std::span<const double> theta, double h) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
  std::vector<double> point(theta.begin(), theta.end());
  std::vector<double> grad(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    point[j] = theta[j] + h;
    const double up = value_fn(std::span<const double>(point));
    point[j] = theta[j] - h;
    const double down = value_fn(std::span<const double>(point));
    point[j] = theta[j];
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace offpsf
