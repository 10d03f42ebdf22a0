#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fret/analytic.hpp"
#include "fret/smp.hpp"
#include "fret/verify.hpp"

using namespace fret;

namespace {

MarkovRenewalKernel drift_kernel(double eps) {
  const SojournDistribution d = Exponential{eps};
  return MarkovRenewalKernel(1, {1.0 - eps, eps}, {d, d});
}

MarkovRenewalKernel two_state_kernel(double eps) {
  const StochasticMatrix p{{0.5, 0.5}, {0.7, 0.3}};
  const std::vector<double> rare{eps, 2.0 * eps};
  const double p_eps = 17.0 / 12.0 * eps;
  const SojournDistribution s0 = Exponential{12.0 / 7.0 * p_eps};
  const SojournDistribution s1 = Atom{1.0, 12.0 / 5.0 * p_eps};
  return independent_flag_kernel(p, rare, [&](int i, int, int) { return i == 0 ? s0 : s1; });
}

}  // namespace

TEST(Kernel, ValidatesRows) {
  const SojournDistribution d = Exponential{1.0};
  EXPECT_THROW(MarkovRenewalKernel(1, {0.5, 0.4}, {d, d}), InvalidArgument);
  EXPECT_THROW(MarkovRenewalKernel(1, {1.1, -0.1}, {d, d}), InvalidArgument);
  EXPECT_THROW(MarkovRenewalKernel(2, {1.0, 0.0}, {d, d}), DimensionMismatch);
}

TEST(Kernel, EmbeddedChainAndRareProbabilities) {
  const auto k = two_state_kernel(0.01);
  EXPECT_NEAR(k.embedded()(0, 1), 0.5, 1e-15);
  EXPECT_NEAR(k.rare_prob(1), 0.02, 1e-15);
  EXPECT_NEAR(stationary_rare_prob(k), 17.0 / 12.0 * 0.01, 1e-15);
}

TEST(Kernel, TransitionFrequencies) {
  const auto k = two_state_kernel(0.1);
  RngStream rng(3);
  const int n = 200000;
  int to1_flag = 0;
  for (int r = 0; r < n; ++r) {
    const auto [j, f] = k.draw_transition(0, rng);
    to1_flag += (j == 1 && f == 1) ? 1 : 0;
  }
  const double p = k.prob(0, 1, 1);  // 0.05
  EXPECT_NEAR(static_cast<double>(to1_flag) / n, p, 4.5 * std::sqrt(p * (1 - p) / n));
}

TEST(Simulate, PathShapeAndJumpMoments) {
  const auto k = two_state_kernel(0.1);
  RngStream rng(11);
  const auto path = simulate_path(k, ProbabilityVector::point_mass(2, 1), 500, rng);
  ASSERT_EQ(path.states.size(), 501u);
  ASSERT_EQ(path.sojourns.size(), 500u);
  EXPECT_EQ(path.states.front(), 1);
  EXPECT_EQ(path.jump_moments.front(), 0.0);
  double tau = 0.0;
  for (std::size_t n = 0; n < path.steps(); ++n) {
    tau += path.sojourns[n];
    EXPECT_NEAR(path.jump_moments[n + 1], tau, 1e-12);
  }
}

TEST(FirstRareEvent, DriftXiIsExponentialOne) {
  // Geometric sum of Exp(mean eps) with success eps is exactly Exp(1).
  const auto k = drift_kernel(0.01);
  const auto q = ProbabilityVector::point_mass(1, 0);
  const RngStream root(5);
  std::vector<double> xi;
  for (int r = 0; r < 20000; ++r) {
    RngStream rng = root.substream(static_cast<std::uint64_t>(r));
    xi.push_back(sample_first_rare_event(k, q, {}, default_max_steps(k), rng).xi);
  }
  EXPECT_LT(ks_statistic(xi, exponential_cdf), 1.63 / std::sqrt(20000.0));  // 1% level
}

TEST(FirstRareEvent, GridContinuesPastNu) {
  const auto k = drift_kernel(0.05);
  const auto q = ProbabilityVector::point_mass(1, 0);
  RngStream rng(8);
  const std::vector<double> t{0.0, 0.5, 1.0, 2.0};
  for (int r = 0; r < 200; ++r) {
    const auto s = sample_first_rare_event(k, q, t, 1000000, rng);
    ASSERT_EQ(s.xi_grid.size(), 4u);
    EXPECT_EQ(s.xi_grid[0], 0.0);
    EXPECT_NEAR(s.xi_grid[2], s.xi, 1e-12);
    EXPECT_GE(s.xi_grid[3], s.xi_grid[2]);
    EXPECT_LE(s.xi_grid[1], s.xi_grid[2]);
  }
}

TEST(FirstRareEvent, MaxStepsExceeded) {
  const auto k = drift_kernel(1e-9);
  RngStream rng(1);
  EXPECT_THROW(sample_first_rare_event(k, ProbabilityVector::point_mass(1, 0), {}, 10, rng),
               MaxStepsExceeded);
  EXPECT_THROW(sample_nu(k, ProbabilityVector::point_mass(1, 0), 10, rng), MaxStepsExceeded);
}

TEST(FirstRareEvent, DegenerateWhenNoFlag) {
  const SojournDistribution d = Exponential{1.0};
  const MarkovRenewalKernel k(1, {1.0, 0.0}, {d, d});
  EXPECT_THROW(default_max_steps(k), DegenerateRareEvent);
}

TEST(Nu, MeanIsInverseFlagProbability) {
  const auto k = drift_kernel(0.02);
  const auto q = ProbabilityVector::point_mass(1, 0);
  RngStream rng(21);
  const int n = 50000;
  double sum = 0.0;
  for (int r = 0; r < n; ++r) sum += static_cast<double>(sample_nu(k, q, 1000000, rng));
  // Geometric(0.02): mean 50, sd sqrt(0.98)/0.02.
  EXPECT_NEAR(sum / n, 50.0, 4.5 * std::sqrt(0.98) / 0.02 / std::sqrt(n));
}

TEST(RewardProcess, FloorConventionAndTooShort) {
  PathSample path;
  path.sojourns = {1.0, 2.0, 3.0, 4.0};
  path.states = {0, 0, 0, 0, 0};
  const std::vector<double> t{0.0, 0.5, 0.99, 1.0};
  const auto k = reward_process_grid(path, 4.0, t);
  EXPECT_EQ(k, (std::vector<double>{0.0, 3.0, 6.0, 10.0}));
  const std::vector<double> too_far{1.5};
  EXPECT_THROW(reward_process_grid(path, 4.0, too_far), PathTooShort);
}

TEST(Decomposition, HoldsOnRandomPaths) {
  const auto k = two_state_kernel(0.01);
  const double v = 1.0 / stationary_rare_prob(k);
  const std::vector<double> t{0.1, 0.5, 1.0, 5.0};
  const RngStream root(77);
  for (int r = 0; r < 50; ++r) {
    RngStream rng = root.substream(static_cast<std::uint64_t>(r));
    const auto path = simulate_path(k, ProbabilityVector::point_mass(2, 0), 400, rng);
    const auto check = hitting_decomposition_check(path, 2, v, t);
    EXPECT_TRUE(check.pass) << check.max_discrepancy;
  }
}

TEST(Decomposition, HandPath) {
  // States 0,1,0 start sojourns 1, 10, 100: state 0 owns 1 + 100, state 1 owns 10.
  PathSample path;
  path.states = {0, 1, 0, 1};
  path.sojourns = {1.0, 10.0, 100.0};
  const std::vector<double> t{1.0 / 3.0, 1.0};
  const auto ok = hitting_decomposition_check(path, 2, 3.0, t);
  EXPECT_TRUE(ok.pass);
  EXPECT_EQ(ok.max_discrepancy, 0.0);
}

TEST(DeterministicReward, RareProbRewardHasUnitMean) {
  // E sum_{n<=nu} p(eta_{n-1}) = 1 for m = 1 (Wald).
  const auto k = drift_kernel(0.01);
  const std::vector<double> reward{0.01};
  RngStream rng(4);
  const int n = 20000;
  double sum = 0.0;
  for (int r = 0; r < n; ++r) {
    sum += deterministic_reward_to_rare_event(k, ProbabilityVector::point_mass(1, 0), reward,
                                              10000000, rng);
  }
  EXPECT_NEAR(sum / n, 1.0, 4.5 * std::sqrt(0.99) / std::sqrt(n));
}

TEST(Prefix, MatchesExactTransformAndSurvival) {
  const auto k = two_state_kernel(0.05);
  const auto q = ProbabilityVector::point_mass(2, 0);
  const std::vector<std::int64_t> cps{0, 5, 20};
  const RngStream root(12);
  const int n = 40000;
  std::vector<double> e(n);
  std::vector<double> alive(n);
  for (int r = 0; r < n; ++r) {
    RngStream rng = root.substream(static_cast<std::uint64_t>(r));
    const auto rec = run_prefix(k, q, cps, rng);
    ASSERT_EQ(rec.sums[0], 0.0);
    ASSERT_EQ(rec.survived[0], 1);
    e[r] = std::exp(-rec.sums[2]);
    alive[r] = rec.survived[2];
  }
  const auto est = mean_with_error(e);
  EXPECT_NEAR(est.value, exact_laplace_kappa(k, q, 1.0, 20), 4.5 * est.std_error);
  const auto surv = mean_with_error(alive);
  EXPECT_NEAR(surv.value, survival_nu_exact(k, q, 20), 4.5 * surv.std_error);
}
