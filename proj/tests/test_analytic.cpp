#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fret/analytic.hpp"
#include "fret/verify.hpp"

using namespace fret;

namespace {

MarkovRenewalKernel single(double eps, const SojournDistribution& d) {
  return MarkovRenewalKernel(1, {1.0 - eps, eps}, {d, d});
}

const ProbabilityVector q1 = ProbabilityVector::point_mass(1, 0);

}  // namespace

TEST(ExactXi, DriftCollapsesToOneOverOnePlusS) {
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const auto k = single(eps, Exponential{eps});
    for (double s : {0.5, 1.0, 2.0}) EXPECT_NEAR(exact_laplace_xi(k, q1, s), 1.0 / (1.0 + s), 1e-12);
  }
}

TEST(ExactXi, GeometricClosedForm) {
  // One state, phi(s) = 1 - eps + eps e^{-s}: E e^{-s xi} = eps phi / (1 - (1-eps) phi).
  for (double eps : {1e-2, 1e-3}) {
    const auto k = single(eps, Atom{1.0, eps});
    for (double s : {0.5, 1.0, 2.0}) {
      const double phi = 1.0 - eps + eps * std::exp(-s);
      EXPECT_NEAR(exact_laplace_xi(k, q1, s), eps * phi / (1.0 - (1.0 - eps) * phi), 1e-13);
    }
  }
}

TEST(ExactXi, MatchesMonteCarloOnTwoStates) {
  const StochasticMatrix p{{0.2, 0.8}, {0.6, 0.4}};
  const std::vector<double> rare{0.05, 0.1};
  const auto k = independent_flag_kernel(p, rare, [](int i, int j, int) -> SojournDistribution {
    if (i == 0) return Gamma{2.0, 0.1 + 0.1 * j};
    return Exponential{0.3};
  });
  const auto q = ProbabilityVector(std::vector<double>{0.3, 0.7});
  const RngStream root(31);
  std::vector<double> xi;
  for (int r = 0; r < 40000; ++r) {
    RngStream rng = root.substream(static_cast<std::uint64_t>(r));
    xi.push_back(sample_first_rare_event(k, q, {}, 10000000, rng).xi);
  }
  for (double s : {0.3, 1.0}) {
    const auto est = empirical_laplace(xi, s);
    EXPECT_NEAR(est.value, exact_laplace_xi(k, q, s), 4.5 * est.std_error);
  }
}

TEST(ExactXi, SingularWhenRareEventUnreachable) {
  // State 1 never flags and never leaves: Phi_0(0) has spectral radius 1.
  const SojournDistribution d = Exponential{1.0};
  const MarkovRenewalKernel k(2, {0.4, 0.1, 0.5, 0.0, 0.0, 0.0, 1.0, 0.0},
                              std::vector<SojournDistribution>(8, d));
  EXPECT_THROW(exact_laplace_xi(k, ProbabilityVector::point_mass(2, 0), 0.0), SingularSystem);
}

TEST(Survival, GeometricPower) {
  const double eps = 1e-3;
  const auto k = single(eps, Exponential{eps});
  EXPECT_NEAR(survival_nu_exact(k, q1, 1000), std::pow(1.0 - eps, 1000), 1e-14);
  EXPECT_EQ(survival_nu_exact(k, q1, 0), 1.0);
  // (1 - eps)^{floor(1/eps)} is within O(eps) of e^{-1}.
  EXPECT_NEAR(survival_nu_exact(k, q1, 1000), std::exp(-1.0), 1e-3);
}

TEST(JointSurvival, ReducesToSurvivalAtZero) {
  const StochasticMatrix p{{0.5, 0.5}, {0.7, 0.3}};
  const std::vector<double> rare{0.01, 0.02};
  const auto k = independent_flag_kernel(p, rare, [](int, int, int) { return SojournDistribution(Exponential{0.01}); });
  const auto q = ProbabilityVector::point_mass(2, 0);
  for (std::int64_t n : {0, 1, 10, 705}) {
    EXPECT_NEAR(joint_survival_transform(k, q, 0.0, n), survival_nu_exact(k, q, n), 1e-15);
    EXPECT_NEAR(joint_survival_transform(k, q, 1e-12, n), survival_nu_exact(k, q, n), 1e-9);
  }
}

TEST(JointSurvival, DriftProductForm) {
  // m = 1: (1-eps)^n (1 + eps s)^{-n}.
  const double eps = 1e-3;
  const auto k = single(eps, Exponential{eps});
  const double expect = std::pow((1.0 - eps) / (1.0 + eps), 1000);
  EXPECT_NEAR(joint_survival_transform(k, q1, 1.0, 1000), expect, 1e-13);
  EXPECT_NEAR(expect, std::exp(-2.0), 0.01);
}

TEST(Kappa, IidPowerForOneState) {
  const double eps = 1e-3;
  const auto k = single(eps, Atom{1.0, eps});
  const double phi = 1.0 - eps + eps * std::exp(-1.0);
  EXPECT_NEAR(exact_laplace_kappa(k, q1, 1.0, 1000), std::pow(phi, 1000), 1e-13);
  EXPECT_NEAR(std::pow(phi, 1000), std::exp(-(1.0 - std::exp(-1.0))), 0.01);
}

TEST(RowPower, RepeatedSquaringAgreesWithNaive) {
  Eigen::MatrixXd a(2, 2);
  a << 0.3, 0.6, 0.5, 0.4;
  Eigen::RowVectorXd q(2);
  q << 0.25, 0.75;
  Eigen::RowVectorXd naive = q;
  for (int n = 0; n < 37; ++n) naive = naive * a;
  EXPECT_LT((row_times_power(q, a, 37) - naive).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(row_times_power(q, a, -1), InvalidArgument);
}

TEST(SpectralRadius, KnownMatrices) {
  Eigen::MatrixXd a(2, 2);
  a << 0.5, 0.5, 0.0, 0.25;
  EXPECT_NEAR(spectral_radius_estimate(a), 0.5, 1e-9);
  EXPECT_EQ(spectral_radius_estimate(Eigen::MatrixXd::Zero(3, 3)), 0.0);
}

TEST(Tilted, NormalizesSurvivingTransitions) {
  const StochasticMatrix p{{0.5, 0.5}, {0.7, 0.3}};
  const std::vector<double> rare{0.1, 0.2};
  const auto k = independent_flag_kernel(p, rare, [](int, int, int) { return SojournDistribution(Exponential{1.0}); });
  // With an independent flag the tilted chain equals the embedded one.
  const auto t = tilted_survival_matrix(k);
  EXPECT_NEAR(t(1, 0), 0.7, 1e-15);
  EXPECT_NEAR(t(0, 1), 0.5, 1e-15);
}
