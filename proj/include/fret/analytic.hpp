#pragma once

// Exact finite-epsilon quantities from flag-split transform matrices:
//   Phi_flag(s)_{ij} = p(i,j,flag) * E exp(-s kappa | i, j, flag).
// No Monte Carlo is involved; these values are the oracle the verifiers
// compare simulation against.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>

#include "fret/chain.hpp"
#include "fret/dist.hpp"
#include "fret/error.hpp"
#include "fret/smp.hpp"

namespace fret {

inline Eigen::MatrixXd flag_transform_matrix(const MarkovRenewalKernel& k, double s, int flag) {
  if (!(s >= 0.0)) throw InvalidArgument("transform argument must be >= 0");
  if (flag != 0 && flag != 1) throw InvalidArgument("flag must be 0 or 1");
  const int m = k.m();
  Eigen::MatrixXd phi(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double p = k.prob(i, j, flag);
      phi(i, j) = p > 0.0 ? p * laplace(k.sojourn(i, j, flag), s) : 0.0;
    }
  }
  return phi;
}

/// Substochastic survival matrix M_ij = p(i,j,0).
inline Eigen::MatrixXd survival_matrix(const MarkovRenewalKernel& k) {
  const int m = k.m();
  Eigen::MatrixXd out(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) out(i, j) = k.prob(i, j, 0);
  }
  return out;
}

/// Spectral radius of a nonnegative matrix by power iteration
/// (50 iterations, stops early once successive estimates agree to 1e-10).
inline double spectral_radius_estimate(const Eigen::MatrixXd& a) {
  const auto m = a.rows();
  Eigen::VectorXd x = Eigen::VectorXd::Ones(m);
  double estimate = 0.0;
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd y = a * x;
    const double norm = y.cwiseAbs().maxCoeff();
    if (norm == 0.0) return 0.0;
    const double next = norm / x.cwiseAbs().maxCoeff();
    x = y / norm;
    if (it > 0 && std::abs(next - estimate) <= 1e-10 * std::max(1.0, next)) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  return estimate;
}

/// q * A^n computed by repeated squaring.
inline Eigen::RowVectorXd row_times_power(const Eigen::RowVectorXd& q, Eigen::MatrixXd a,
                                          std::int64_t n) {
  if (n < 0) throw InvalidArgument("power must be >= 0");
  Eigen::RowVectorXd acc = q;
  while (n > 0) {
    if (n & 1) acc = acc * a;
    n >>= 1;
    if (n > 0) a = a * a;
  }
  return acc;
}

/// E exp(-s xi) = q (I - Phi_0(s))^{-1} Phi_1(s) 1.
inline double exact_laplace_xi(const MarkovRenewalKernel& k, const ProbabilityVector& q, double s) {
  check_initial(k, q);
  if (!(s >= 0.0)) throw InvalidArgument("laplace argument must be >= 0");
  const Eigen::MatrixXd phi0 = flag_transform_matrix(k, s, 0);
  const Eigen::MatrixXd phi1 = flag_transform_matrix(k, s, 1);
  const double rho = spectral_radius_estimate(phi0);
  if (!(rho < 1.0 - 1e-13)) {
    throw SingularSystem("I - Phi_0(s) is singular: spectral radius of Phi_0 is " +
                         std::to_string(rho));
  }
  const auto m = phi0.rows();
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m) - phi0;
  const Eigen::VectorXd rhs = phi1 * Eigen::VectorXd::Ones(m);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (!(lu.rcond() > 1e-15)) {
    throw SingularSystem("I - Phi_0(s) is numerically singular (spectral radius " +
                         std::to_string(rho) + ")");
  }
  const Eigen::VectorXd x = lu.solve(rhs);
  return q.vector().dot(x);
}

/// P{nu > n} = q M^n 1.
inline double survival_nu_exact(const MarkovRenewalKernel& k, const ProbabilityVector& q,
                                std::int64_t n) {
  check_initial(k, q);
  const Eigen::RowVectorXd r = row_times_power(q.vector().transpose(), survival_matrix(k), n);
  return r.sum();
}

/// E I(nu > n) exp(-s (kappa_1 + ... + kappa_n)) = q Phi_0(s)^n 1.
/// At s = 0 this is survival_nu_exact.
inline double joint_survival_transform(const MarkovRenewalKernel& k, const ProbabilityVector& q,
                                       double s, std::int64_t n) {
  check_initial(k, q);
  const Eigen::RowVectorXd r =
      row_times_power(q.vector().transpose(), flag_transform_matrix(k, s, 0), n);
  return r.sum();
}

/// E exp(-s (kappa_1 + ... + kappa_n)) = q (Phi_0(s) + Phi_1(s))^n 1.
inline double exact_laplace_kappa(const MarkovRenewalKernel& k, const ProbabilityVector& q,
                                  double s, std::int64_t n) {
  check_initial(k, q);
  const Eigen::MatrixXd phi = flag_transform_matrix(k, s, 0) + flag_transform_matrix(k, s, 1);
  const Eigen::RowVectorXd r = row_times_power(q.vector().transpose(), phi, n);
  return r.sum();
}

/// Transition matrix of the chain conditioned on no rare event in one step:
/// p~_ij = p(i,j,0) / (1 - p_i).
inline StochasticMatrix tilted_survival_matrix(const MarkovRenewalKernel& k) {
  const int m = k.m();
  Eigen::MatrixXd out(m, m);
  for (int i = 0; i < m; ++i) {
    const double stay = 1.0 - k.rare_prob(i);
    if (!(stay > 0.0)) throw DegenerateRareEvent("state " + std::to_string(i) + " always flags");
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
      out(i, j) = k.prob(i, j, 0) / stay;
      sum += out(i, j);
    }
    out.row(i) /= sum;
  }
  return StochasticMatrix(std::move(out));
}

}  // namespace fret
