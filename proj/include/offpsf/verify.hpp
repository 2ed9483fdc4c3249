#pragma once

// Fixed-seed statistical self-checks behind `offpsf verify <suite>`.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "offpsf/errors.hpp"
#include "offpsf/fixtures.hpp"
#include "offpsf/format.hpp"
#include "offpsf/mdp.hpp"
#include "offpsf/off_policy_eval.hpp"
#include "offpsf/optimizer.hpp"
#include "offpsf/rng.hpp"
#include "offpsf/sf_grad.hpp"
#include "offpsf/stats.hpp"

namespace offpsf {

struct Check {
  std::string suite;
  std::string name;
  double statistic = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool passed() const noexcept { return statistic >= lower && statistic <= upper; }
};

struct VerifyReport {
  std::vector<Check> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed(); });
  }
  void append(const VerifyReport& other) { checks.insert(checks.end(), other.checks.begin(), other.checks.end()); }
};

inline const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> suites{"is-unbiased", "sf-unbiased", "bias-bound", "variance-scaling",
                                               "prox-props"};
  return suites;
}

// Synthetic objectives with known derivatives.
namespace synthetic {

// sum_j sin(theta_j): gradient cos(theta_j), Hessian bounded by 1 (L = 1).
inline double sin_sum(std::span<const double> theta) {
  double s = 0.0;
  for (double x : theta) s += std::sin(x);
  return s;
}

// theta_0^3 - 3 theta_0 theta_1^2 is harmonic, so its ball average equals its
// value and grad J_mu(0) = grad J(0) = 0; two-point samples at 0 have zero mean.
inline double harmonic_cubic(std::span<const double> theta) {
  return theta[0] * theta[0] * theta[0] - 3.0 * theta[0] * theta[1] * theta[1];
}

}  // namespace synthetic

struct VerifyOptions {
  std::uint64_t seed = 20240601;
  std::size_t is_batches = 10000;
  std::size_t is_batch_size = 50;
  std::size_t sf_repetitions = 10000;
  std::size_t oracle_samples = 1000000;
  std::size_t variance_repetitions = 4000;
  std::size_t prox_triples = 10000;
};

/// Mean and SE of pdis_estimate over independent batches.
inline MeanWithError pdis_batch_mean(const TabularMdp& mdp, const BehaviorPolicy& behavior,
                                     std::span<const double> theta, std::size_t batches, std::size_t m,
                                     std::uint64_t seed, std::size_t horizon_cap = kDefaultHorizonCap) {
  RunningStats stats;
  for (std::size_t i = 0; i < batches; ++i)
    stats.add(pdis_estimate(sample_batch(mdp, behavior, m, derive_seed(seed, {i}), horizon_cap), theta));
  return {stats.mean(), stats.std_error()};
}

inline VerifyReport verify_is_unbiased(const VerifyOptions& opt = {}) {
  VerifyReport report;
  {
    const auto mdp = fixtures::chain3();
    const auto b = BehaviorPolicy::uniform(mdp);
    const auto batch = sample_batch(mdp, b, opt.is_batch_size, derive_seed(opt.seed, {0}));
    double mean_return = 0.0;
    for (const auto& t : batch.trajectories()) mean_return += discounted_return(t, mdp.gamma());
    mean_return /= static_cast<double>(batch.size());
    const double diff = std::abs(pdis_estimate(batch, b.matching_logits()) - mean_return);
    report.checks.push_back({"is-unbiased", "target equals behavior: |estimate - mean return|", diff, 0.0, 1e-12});
  }
  struct Case {
    const char* name;
    TabularMdp mdp;
    std::vector<double> theta;
  };
  const std::vector<Case> cases{
      {"bandit", fixtures::bandit(), {1.0, -0.5}},
      {"chain3", fixtures::chain3(), {1.0, -0.5, 0.8, -0.4, -0.6, 0.3}},
      {"gridlet", fixtures::gridlet(), {0.4, 0.1, -0.5, 0.2, 0.3, -0.4, 0.1, 0.4, -0.3, 0.3, 0.2, -0.5}},
  };
  std::uint64_t tag = 1;
  for (const auto& c : cases) {
    const auto b = BehaviorPolicy::uniform(c.mdp);
    const auto est = pdis_batch_mean(c.mdp, b, c.theta, opt.is_batches, opt.is_batch_size, derive_seed(opt.seed, {tag++}));
    const double exact = exact_value(c.mdp, PolicyShape::of(c.mdp), c.theta);
    report.checks.push_back({"is-unbiased", std::string(c.name) + ": |mean estimate - J| / SE",
                             std::abs(est.mean - exact) / est.std_error, 0.0, 4.0});
  }
  return report;
}

inline VerifyReport verify_sf_unbiased(const VerifyOptions& opt = {}) {
  VerifyReport report;
  const auto mdp = fixtures::bandit();
  const auto b = BehaviorPolicy::uniform(mdp);
  const std::vector<double> theta{0.3, -0.2};
  const double mu = 0.2;
  const std::size_t n = 20, m = 10;

  VectorStats est(theta.size());
  for (std::size_t r = 0; r < opt.sf_repetitions; ++r) {
    const auto batch = sample_batch(mdp, b, m, derive_seed(opt.seed, {stream::kBatch, r}));
    Rng rng = make_stream(opt.seed, {stream::kDirections, r});
    const auto g = sf_gradient_estimate([&](std::span<const double> t) { return pdis_estimate(batch, t); }, theta,
                                        SfConfig{mu, n, theta.size()}, rng);
    est.add(g.grad);
  }
  Rng oracle_rng = make_stream(opt.seed, {stream::kOracle});
  const auto oracle = sf_gradient_mean_oracle(exact_objective(mdp), theta, mu, opt.oracle_samples, oracle_rng);
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double se = std::hypot(est[j].std_error(), oracle.std_error[j]);
    report.checks.push_back({"sf-unbiased", "component " + std::to_string(j) + ": |mean estimate - grad J_mu| / SE",
                             std::abs(est[j].mean() - oracle.mean[j]) / se, 0.0, 5.0});
  }
  return report;
}

inline VerifyReport verify_bias_bound(const VerifyOptions& opt = {}) {
  VerifyReport report;
  constexpr double L = 1.0;
  for (const std::size_t d : {std::size_t{2}, std::size_t{5}}) {
    std::vector<double> theta(d), grad(d);
    for (std::size_t j = 0; j < d; ++j) {
      theta[j] = 0.4 + 0.3 * static_cast<double>(j);
      grad[j] = std::cos(theta[j]);
    }
    for (const double mu : {0.5, 0.25, 0.1, 0.05}) {
      Rng rng = make_stream(opt.seed, {d, static_cast<std::uint64_t>(mu * 1000)});
      const auto smoothed = sf_gradient_mean_oracle(synthetic::sin_sum, theta, mu, opt.oracle_samples, rng);
      std::vector<double> diff(d);
      for (std::size_t j = 0; j < d; ++j) diff[j] = smoothed.mean[j] - grad[j];
      report.checks.push_back({"bias-bound",
                               "d=" + std::to_string(d) + " mu=" + format_double(mu) + ": ||grad J_mu - grad J||",
                               norm(diff), 0.0, mu * static_cast<double>(d) * L / 2.0 + 5.0 * norm(smoothed.std_error)});
    }
  }
  return report;
}

/// Monte-Carlo E||estimate||^2 of the two-point estimator at n directions.
template <ValueFunction F>
MeanWithError sf_second_moment(F&& value_fn, std::span<const double> theta, double mu, std::size_t n,
                               std::size_t repetitions, std::uint64_t seed) {
  RunningStats stats;
  for (std::size_t r = 0; r < repetitions; ++r) {
    Rng rng = make_stream(seed, {n, r});
    stats.add(squared_norm(sf_gradient_estimate(value_fn, theta, SfConfig{mu, n, theta.size()}, rng).grad));
  }
  return {stats.mean(), stats.std_error()};
}

inline VerifyReport verify_variance_scaling(const VerifyOptions& opt = {}) {
  VerifyReport report;
  const std::vector<double> theta{0.0, 0.0};
  const double mu = 0.5;
  const std::vector<std::size_t> ns{10, 40, 160};
  std::vector<double> moments;
  for (std::size_t n : ns)
    moments.push_back(sf_second_moment(synthetic::harmonic_cubic, theta, mu, n, opt.variance_repetitions, opt.seed).mean);
  for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
    report.checks.push_back({"variance-scaling",
                             "second moment ratio n=" + std::to_string(ns[i]) + " / n=" + std::to_string(ns[i + 1]),
                             moments[i] / moments[i + 1], 3.0, 5.5});
  }
  double increases = 0.0;
  for (std::size_t i = 0; i + 1 < moments.size(); ++i)
    if (moments[i + 1] > moments[i]) increases += 1.0;
  report.checks.push_back({"variance-scaling", "increases of the second moment across n = 10, 40, 160", increases,
                           0.0, 0.0});
  return report;
}

struct ProxViolations {
  std::size_t bounded = 0;    // ||P(theta, g, a)|| <= ||g||
  std::size_t lipschitz = 0;  // ||P(theta, f, a) - P(theta, g, a)|| <= ||f - g||
  std::size_t ascent = 0;     // <g, P(theta, g, a)> >= ||P(theta, g, a)||^2
};

/// Random (theta in box, f, g, alpha in (0, 1]) triples on random boxes.
inline ProxViolations count_prox_violations(std::size_t triples, std::uint64_t seed, double slack = 1e-9) {
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 3.0);
  ProxViolations v;
  for (std::size_t t = 0; t < triples; ++t) {
    const std::size_t d = dim(rng);
    std::vector<double> lo(d), hi(d), theta(d), f(d), g(d);
    for (std::size_t j = 0; j < d; ++j) {
      lo[j] = normal(rng);
      hi[j] = lo[j] + 0.01 + 4.0 * unit(rng);
      theta[j] = lo[j] + (hi[j] - lo[j]) * unit(rng);
      f[j] = normal(rng);
      g[j] = normal(rng);
    }
    if (t % 4 == 0) theta[0] = unit(rng) < 0.5 ? lo[0] : hi[0];  // exercise the faces
    const double alpha = 1.0 - unit(rng);                       // (0, 1]
    const BoxSet box(lo, hi);
    const auto pg = prox_map(theta, g, alpha, box);
    const auto pf = prox_map(theta, f, alpha, box);
    std::vector<double> dp(d), dfg(d);
    for (std::size_t j = 0; j < d; ++j) {
      dp[j] = pf[j] - pg[j];
      dfg[j] = f[j] - g[j];
    }
    if (norm(pg) > norm(g) + slack) ++v.bounded;
    if (norm(dp) > norm(dfg) + slack) ++v.lipschitz;
    if (dot(g, pg) < squared_norm(pg) - slack) ++v.ascent;
  }
  return v;
}

inline VerifyReport verify_prox_props(const VerifyOptions& opt = {}) {
  const auto v = count_prox_violations(opt.prox_triples, opt.seed);
  VerifyReport report;
  report.checks.push_back({"prox-props", "(i) ||P|| <= ||g|| violations", static_cast<double>(v.bounded), 0.0, 0.0});
  report.checks.push_back(
      {"prox-props", "(ii) nonexpansive in g violations", static_cast<double>(v.lipschitz), 0.0, 0.0});
  report.checks.push_back(
      {"prox-props", "(iii) <g, P> >= ||P||^2 violations", static_cast<double>(v.ascent), 0.0, 0.0});
  return report;
}

inline VerifyReport verify(const std::string& suite, const VerifyOptions& opt = {}) {
  if (suite == "is-unbiased") return verify_is_unbiased(opt);
  if (suite == "sf-unbiased") return verify_sf_unbiased(opt);
  if (suite == "bias-bound") return verify_bias_bound(opt);
  if (suite == "variance-scaling") return verify_variance_scaling(opt);
  if (suite == "prox-props") return verify_prox_props(opt);
  if (suite == "all") {
    VerifyReport all;
    for (const auto& s : verify_suites()) all.append(verify(s, opt));
    return all;
  }
  throw ConfigError("unknown verify suite '" + suite + "'");
}

inline void print_report(std::ostream& out, const VerifyReport& report) {
  for (const auto& c : report.checks) {
    out << (c.passed() ? "PASS  " : "FAIL  ") << c.suite << ": " << c.name << "  statistic=" << format_double(c.statistic);
    if (std::isfinite(c.lower) && c.lower != 0.0) out << "  lower=" << format_double(c.lower);
    if (std::isfinite(c.upper)) out << "  bound=" << format_double(c.upper);
    out << "\n";
  }
}

}  // namespace offpsf
