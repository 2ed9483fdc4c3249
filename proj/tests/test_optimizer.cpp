#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "offpsf/experiment.hpp"
#include "offpsf/fixtures.hpp"
#include "offpsf/optimizer.hpp"
#include "offpsf/verify.hpp"

using namespace offpsf;

TEST(ProjectBox, Examples) {
  const auto box = BoxSet::cube(2, -1.0, 1.0);
  const std::vector<double> inside{0.3, -0.9};
  EXPECT_EQ(project_box(inside, box), inside);
  EXPECT_EQ(project_box(std::vector<double>{5.0, -5.0}, box), (std::vector<double>{1.0, -1.0}));
}

TEST(ProjectBox, IdempotentAndInside) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> lo(4), hi(4), x(4);
    for (std::size_t j = 0; j < 4; ++j) {
      lo[j] = normal(rng);
      hi[j] = lo[j] + 0.1 + std::abs(normal(rng));
      x[j] = normal(rng);
    }
    const BoxSet box(lo, hi);
    const auto once = project_box(x, box);
    EXPECT_TRUE(box.contains(once));
    EXPECT_EQ(project_box(once, box), once);
  }
}

TEST(BoxSet, RejectsEmptyInterior) {
  EXPECT_THROW(BoxSet({0.0, 1.0}, {1.0, 1.0}), ConfigError);
  EXPECT_THROW(BoxSet({0.0}, {1.0, 2.0}), ConfigError);
  EXPECT_THROW(BoxSet({}, {}), ConfigError);
}

TEST(ProxMap, Examples) {
  const auto box = BoxSet::cube(2, -1.0, 1.0);
  const std::vector<double> g{0.3, -0.2};
  const auto interior = prox_map(std::vector<double>{0.0, 0.1}, g, 0.1, box);
  EXPECT_NEAR(interior[0], 0.3, 1e-12);
  EXPECT_NEAR(interior[1], -0.2, 1e-12);

  const auto face = prox_map(std::vector<double>{1.0, 0.0}, std::vector<double>{2.0, 0.5}, 0.5, box);
  EXPECT_EQ(face[0], 0.0);
  EXPECT_NEAR(face[1], 0.5, 1e-12);

  const auto one_d = prox_map(std::vector<double>{0.9}, std::vector<double>{1.0}, 0.2, BoxSet::cube(1, -1.0, 1.0));
  EXPECT_NEAR(one_d[0], 0.5, 1e-12);

  EXPECT_THROW(prox_map(std::vector<double>{0.0}, std::vector<double>{1.0}, 0.0, BoxSet::cube(1, -1, 1)), DomainError);
  EXPECT_THROW(prox_map(std::vector<double>{0.0}, std::vector<double>{1.0}, -1.0, BoxSet::cube(1, -1, 1)), DomainError);
}

TEST(ProxMap, ContractionProperties) {
  const auto v = count_prox_violations(10000, 99);
  EXPECT_EQ(v.bounded, 0u);
  EXPECT_EQ(v.lipschitz, 0u);
  EXPECT_EQ(v.ascent, 0u);
}

TEST(CorollarySchedule, Examples) {
  const auto s = corollary_schedule(100, 1.0, 1.0, 1.0, 5);
  ASSERT_EQ(s.size(), 100u);
  for (std::size_t k = 0; k < 100; ++k) {
    EXPECT_DOUBLE_EQ(s.alpha[k], 0.1);
    EXPECT_DOUBLE_EQ(s.mu[k], 0.1);
    EXPECT_EQ(s.n[k], 100u);
  }
  EXPECT_EQ(s.m, 5u);
  EXPECT_EQ(corollary_schedule(4, 1.0, 1.0, 0.3, 1).n[0], 2u);
  EXPECT_EQ(corollary_schedule(10, 1.0, 1.0, 0.01, 1).n[0], 1u);
  for (std::size_t N : {1, 2, 7, 1000}) EXPECT_NO_THROW(corollary_schedule(N, 0.5, 0.9, 0.5, 3).validate());
}

TEST(CorollarySchedule, Errors) {
  EXPECT_THROW(corollary_schedule(1, 1.0, 2.0, 1.0, 1), ConfigError);  // mu = 2 > 1
  EXPECT_THROW(corollary_schedule(0, 1.0, 1.0, 1.0, 1), ConfigError);
  EXPECT_THROW(corollary_schedule(10, 0.0, 1.0, 1.0, 1), ConfigError);
  EXPECT_THROW(corollary_schedule(10, 1.0, 1.0, 1.0, 0), ConfigError);
}

TEST(AsymptoticSchedule, Examples) {
  const auto s = asymptotic_schedule(1001, 1.0, 0.5, 4.0, 10);
  EXPECT_DOUBLE_EQ(s.alpha[0], 1.0);
  EXPECT_DOUBLE_EQ(s.alpha[9], 0.1);
  for (std::size_t k = 1; k < s.size(); ++k) {
    EXPECT_LT(s.mu[k], s.mu[k - 1]);
    EXPECT_GE(s.n[k], s.n[k - 1]);
  }
  EXPECT_TRUE(kAsymptoticPreset.satisfies_step_conditions());
  EXPECT_FALSE((AsymptoticRates{0.5, 0.25, 0.5}.satisfies_step_conditions()));  // sum alpha^2 diverges
  EXPECT_FALSE((AsymptoticRates{1.5, 0.25, 0.5}.satisfies_step_conditions()));  // sum alpha converges
  EXPECT_FALSE((AsymptoticRates{1.0, 0.0, 0.5}.satisfies_step_conditions()));
}

TEST(AsymptoticSchedule, SquaredStepSumBelowBaselSeries) {
  const double a0 = 0.7;
  const auto s = asymptotic_schedule(1000000, a0, 0.5, 1.0, 1);
  double sum = 0.0;
  for (double a : s.alpha) sum += a * a;
  EXPECT_LT(sum, a0 * a0 * std::numbers::pi * std::numbers::pi / 6.0);
}

TEST(StationarityIndex, UniformForConstantSteps) {
  const auto s = corollary_schedule(5, 1.0, 1.0, 1.0, 1);
  Rng rng(3);
  const int draws = 100000;
  std::vector<int> counts(5, 0);
  for (int i = 0; i < draws; ++i) ++counts[sample_stationarity_index(s, 5, rng)];
  const double se = std::sqrt(0.2 * 0.8 / draws);
  for (int c : counts) EXPECT_LE(std::abs(c / static_cast<double>(draws) - 0.2), 4.0 * se);
}

TEST(StationarityIndex, DegenerateMassOnFirstStep) {
  Schedule s;
  s.alpha = {1.0, 1e-300, 1e-300, 0.0};
  s.mu.assign(4, 0.1);
  s.n.assign(4, 1);
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_stationarity_index(s, 4, rng), 0u);
}

TEST(StationarityIndex, HarmonicStepsNormalize) {
  // alpha = (1, 1/2): P(R = 0) = 1 / (1 + 1/2) = 2/3.
  const auto s = asymptotic_schedule(2, 1.0, 0.5, 1.0, 1);
  Rng rng(5);
  const int draws = 100000;
  int zeros = 0;
  for (int i = 0; i < draws; ++i) zeros += sample_stationarity_index(s, 2, rng) == 0;
  EXPECT_LE(std::abs(zeros / static_cast<double>(draws) - 2.0 / 3.0), 4.0 * std::sqrt(2.0 / 9.0 / draws));
  EXPECT_THROW(sample_stationarity_index(s, 3, rng), ConfigError);
}

TEST(OffpSfRun, ZeroRewardKeepsTheta) {
  const auto base = fixtures::chain3();
  const TabularMdp mdp(4, 2, base.transition_table(), std::vector<double>(32, 0.0), 1, 0.9);
  const auto b = BehaviorPolicy::uniform(mdp);
  const auto box = BoxSet::cube(6, -2.0, 2.0);
  const std::vector<double> theta0{0.1, -0.1, 0.2, 0.0, 0.5, -0.5};
  const auto run = offp_sf_run(mdp, b, box, corollary_schedule(50, 1.0, 1.0, 4.0, 10), theta0, 50, 1);
  for (const auto& theta : run.theta_trace)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(theta[j], theta0[j], 1e-2);
}

TEST(OffpSfRun, BanditAscends) {
  const auto mdp = fixtures::bandit();
  const auto b = BehaviorPolicy::uniform(mdp);
  const auto box = BoxSet::cube(2, -5.0, 5.0);
  const auto schedule = corollary_schedule(200, 1.0, 1.0, 0.5, 20);
  const auto run = offp_sf_run(mdp, b, box, schedule, box.center(), 200, 17, Diagnostics{.exact = true});
  EXPECT_GT(run.exact_j_trace.back(), 0.9);
  // Smoothed exact-value trace climbs.
  const auto smoothed = trailing_mean(run.exact_j_trace, kSmoothingWindow);
  for (std::size_t k = kSmoothingWindow; k < smoothed.size(); ++k) EXPECT_GE(smoothed[k], smoothed[k - 1]) << k;
}

TEST(OffpSfRun, TracesAndInvariants) {
  for (const auto& name : fixtures::names()) {
    const auto mdp = fixtures::by_name(name);
    const auto d = PolicyShape::of(mdp).dim();
    const auto b = BehaviorPolicy::uniform(mdp);
    const auto box = BoxSet::cube(d, -0.5, 0.5);
    const std::size_t N = 30;
    const auto run = offp_sf_run(mdp, b, box, corollary_schedule(N, 3.0, 1.0, 0.5, 10), box.center(), N, 8,
                                 Diagnostics{.exact = true});
    ASSERT_EQ(run.theta_trace.size(), N + 1) << name;
    ASSERT_EQ(run.estimate_trace.size(), N) << name;
    ASSERT_EQ(run.exact_j_trace.size(), N + 1) << name;
    ASSERT_EQ(run.stationarity_trace.size(), N) << name;
    EXPECT_LT(run.sampled_index, N);
    for (const auto& theta : run.theta_trace) EXPECT_TRUE(box.contains(theta)) << name;
    EXPECT_EQ(run.final_theta, run.theta_trace.back());
  }
}

TEST(OffpSfRun, DeterministicUnderMasterSeed) {
  const auto mdp = fixtures::gridlet();
  const auto b = BehaviorPolicy::uniform(mdp);
  const auto box = BoxSet::cube(12, -3.0, 3.0);
  const auto schedule = asymptotic_schedule(40, 0.5, 0.5, 3.0, 8);
  const Diagnostics diag{.exact = true, .bias_noise = true, .oracle_samples = 50};
  const auto a = offp_sf_run(mdp, b, box, schedule, box.center(), 40, 123, diag);
  const auto c = offp_sf_run(mdp, b, box, schedule, box.center(), 40, 123, diag);
  EXPECT_EQ(a.theta_trace, c.theta_trace);
  EXPECT_EQ(a.estimate_trace, c.estimate_trace);
  EXPECT_EQ(a.exact_j_trace, c.exact_j_trace);
  EXPECT_EQ(a.xi_norm_trace, c.xi_norm_trace);
  EXPECT_EQ(a.sampled_index, c.sampled_index);
  const auto other = offp_sf_run(mdp, b, box, schedule, box.center(), 40, 124, diag);
  EXPECT_NE(a.theta_trace, other.theta_trace);
}

TEST(OffpSfRun, Errors) {
  const auto mdp = fixtures::bandit();
  const auto b = BehaviorPolicy::uniform(mdp);
  const auto box = BoxSet::cube(2, -1.0, 1.0);
  const auto schedule = corollary_schedule(10, 1.0, 1.0, 0.5, 2);
  EXPECT_THROW(offp_sf_run(mdp, b, box, schedule, std::vector<double>{2.0, 0.0}, 10, 1), ConfigError);
  EXPECT_THROW(offp_sf_run(mdp, b, box, schedule, box.center(), 11, 1), ConfigError);
  EXPECT_THROW(offp_sf_run(mdp, b, BoxSet::cube(3, -1, 1), schedule, std::vector<double>(3, 0.0), 10, 1),
               ConfigError);
  // mu_0 = 2 exceeds the unit enlargement: reported with the iteration.
  try {
    offp_sf_run(mdp, b, box, asymptotic_schedule(10, 1.0, 2.0, 1.0, 2), box.center(), 10, 1);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration 0"), std::string::npos);
  }
}

TEST(OffpSfRun, ConvergenceAndActiveFaces) {
  // Bandit optimum sits on the box boundary: theta_0 -> upper, theta_1 -> lower.
  const auto mdp = fixtures::bandit();
  const auto b = BehaviorPolicy::uniform(mdp);
  const auto box = BoxSet::cube(2, -1.0, 1.0);
  const auto run = offp_sf_run(mdp, b, box, corollary_schedule(400, 4.0, 1.0, 0.25, 20), box.center(), 400, 5,
                               Diagnostics{.exact = true, .converge_tol = 1e-3, .converge_window = 50});
  ASSERT_TRUE(run.converged_at.has_value());
  EXPECT_EQ(run.active_constraints, (std::vector<std::size_t>{0, 1}));
  EXPECT_NEAR(run.final_theta[0], 1.0, 1e-12);
  EXPECT_NEAR(run.final_theta[1], -1.0, 1e-12);
}

TEST(DetectConvergence, NeedsSustainedWindow) {
  const std::vector<double> sq{1.0, 1e-8, 1e-8, 1.0, 1e-8, 1e-8, 1e-8};
  EXPECT_EQ(detect_convergence(sq, 1e-3, 3), std::optional<std::size_t>(4));
  EXPECT_EQ(detect_convergence(sq, 1e-3, 4), std::nullopt);
}

TEST(NoiseDiagnostic, XiHasZeroMeanAtFixedTheta) {
  // xi = estimate - E[estimate | theta]; the conditional mean is grad J_mu.
  const auto mdp = fixtures::chain3();
  const auto b = BehaviorPolicy::uniform(mdp);
  const std::vector<double> theta{0.5, -0.5, 0.3, -0.2, -0.4, 0.4};
  const double mu = 0.3;
  const auto box = BoxSet::cube(6, -2.0, 2.0);
  Schedule one{"fixed", {0.1}, {mu}, {8}, 20};
  VectorStats est(6);
  for (std::uint64_t rep = 0; rep < 1000; ++rep)
    est.add(offp_sf_run(mdp, b, box, one, theta, 1, rep).estimate_trace[0]);
  Rng rng(31);
  const auto oracle = sf_gradient_mean_oracle(exact_objective(mdp), theta, mu, 200000, rng);
  for (std::size_t j = 0; j < 6; ++j)
    EXPECT_LE(std::abs(est[j].mean() - oracle.mean[j]), 4.0 * std::hypot(est[j].std_error(), oracle.std_error[j]))
        << j;
}

TEST(BiasDiagnostic, BoundedAlongTheLoopOnSinSum) {
  const std::size_t d = 3;
  const auto box = BoxSet::cube(d, -3.0, 3.0);
  const auto schedule = asymptotic_schedule(30, 0.5, 0.8, 2.0, 1);
  const std::vector<double> theta0{0.2, -0.4, 1.0};
  const ObjectiveFn objective = synthetic::sin_sum;
  auto make_estimate = [](std::size_t, std::uint64_t) { return synthetic::sin_sum; };
  const auto run = projected_sf_ascent(make_estimate, objective, box, schedule, theta0, 30, 9,
                                       Diagnostics{.bias_noise = true, .oracle_samples = 20000});
  ASSERT_EQ(run.beta_norm_trace.size(), 30u);
  for (std::size_t k = 0; k < 30; ++k)
    EXPECT_LE(run.beta_norm_trace[k], schedule.mu[k] * d * 1.0 / 2.0 + 5.0 * run.beta_se_trace[k]) << k;
}
