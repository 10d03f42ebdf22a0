#pragma once

// Finite-state Markov chain core: stochastic matrices, stationary
// distributions, ring-chain ergodicity over an epsilon grid, occupation
// counts and hitting times of state paths.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "fret/error.hpp"

namespace fret {

inline constexpr double kProbTolerance = 1e-12;

/// Row-stochastic m x m matrix. Immutable after construction.
class StochasticMatrix {
 public:
  explicit StochasticMatrix(Eigen::MatrixXd rows) : p_(std::move(rows)) {
    if (p_.rows() < 1 || p_.rows() != p_.cols()) {
      throw InvalidArgument("stochastic matrix must be square with m >= 1");
    }
    for (Eigen::Index i = 0; i < p_.rows(); ++i) {
      double sum = 0.0;
      for (Eigen::Index j = 0; j < p_.cols(); ++j) {
        const double x = p_(i, j);
        if (!(x >= 0.0 && x <= 1.0 + kProbTolerance)) {
          throw InvalidArgument("stochastic matrix entry (" + std::to_string(i) + "," +
                                std::to_string(j) + ") outside [0,1]");
        }
        sum += x;
      }
      if (std::abs(sum - 1.0) > kProbTolerance) {
        throw InvalidArgument("stochastic matrix row " + std::to_string(i) +
                              " does not sum to 1");
      }
    }
  }

  StochasticMatrix(std::initializer_list<std::initializer_list<double>> rows)
      : StochasticMatrix(from_rows(rows)) {}

  int m() const noexcept { return static_cast<int>(p_.rows()); }
  double operator()(int i, int j) const { return p_(i, j); }
  const Eigen::MatrixXd& matrix() const noexcept { return p_; }

 private:
  static Eigen::MatrixXd from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const auto m = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd out(m, m);
    Eigen::Index i = 0;
    for (const auto& row : rows) {
      if (static_cast<Eigen::Index>(row.size()) != m) {
        throw InvalidArgument("stochastic matrix must be square");
      }
      Eigen::Index j = 0;
      for (double x : row) out(i, j++) = x;
      ++i;
    }
    return out;
  }

  Eigen::MatrixXd p_;
};

/// Nonnegative vector summing to one.
class ProbabilityVector {
 public:
  explicit ProbabilityVector(Eigen::VectorXd probs) : p_(std::move(probs)) {
    if (p_.size() < 1) throw InvalidArgument("probability vector must be nonempty");
    for (Eigen::Index i = 0; i < p_.size(); ++i) {
      if (!(p_(i) >= 0.0)) throw InvalidArgument("probability vector has a negative entry");
    }
    if (std::abs(p_.sum() - 1.0) > kProbTolerance) {
      throw InvalidArgument("probability vector does not sum to 1");
    }
  }

  explicit ProbabilityVector(const std::vector<double>& probs)
      : ProbabilityVector(Eigen::Map<const Eigen::VectorXd>(
            probs.data(), static_cast<Eigen::Index>(probs.size()))) {}

  static ProbabilityVector point_mass(int m, int state) {
    if (state < 0 || state >= m) throw InvalidArgument("point mass state out of range");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
    v(state) = 1.0;
    return ProbabilityVector(std::move(v));
  }

  int size() const noexcept { return static_cast<int>(p_.size()); }
  double operator[](int i) const { return p_(i); }
  const Eigen::VectorXd& vector() const noexcept { return p_; }
  std::vector<double> to_std() const { return {p_.data(), p_.data() + p_.size()}; }

 private:
  Eigen::VectorXd p_;
};

namespace detail {

/// Vertices reachable from `start` along edges with weight >= floor.
inline std::vector<int> bfs_parents(const Eigen::MatrixXd& w, int start, double floor) {
  const int m = static_cast<int>(w.rows());
  std::vector<int> parent(m, -2);
  parent[start] = -1;
  std::queue<int> frontier;
  frontier.push(start);
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (int j = 0; j < m; ++j) {
      if (parent[j] == -2 && w(i, j) >= floor && w(i, j) > 0.0) {
        parent[j] = i;
        frontier.push(j);
      }
    }
  }
  return parent;
}

inline bool strongly_connected(const Eigen::MatrixXd& w, double floor) {
  const int m = static_cast<int>(w.rows());
  if (m == 1) return w(0, 0) >= floor && w(0, 0) > 0.0;
  const auto fwd = bfs_parents(w, 0, floor);
  const Eigen::MatrixXd wt = w.transpose();
  const auto bwd = bfs_parents(wt, 0, floor);
  for (int i = 0; i < m; ++i) {
    if (fwd[i] == -2 || bwd[i] == -2) return false;
  }
  return true;
}

/// Closed walk 0 -> 1 -> ... -> m-1 -> 0 stitched from BFS shortest paths over
/// edges with weight >= floor. Requires strong connectivity.
inline std::vector<int> covering_walk(const Eigen::MatrixXd& w, double floor) {
  const int m = static_cast<int>(w.rows());
  if (m == 1) return {0, 0};
  std::vector<int> walk{0};
  for (int k = 1; k <= m; ++k) {
    const int from = walk.back();
    const int to = k % m;
    if (from == to) continue;
    const auto parent = bfs_parents(w, from, floor);
    std::vector<int> leg;
    for (int v = to; v != from; v = parent[v]) leg.push_back(v);
    walk.insert(walk.end(), leg.rbegin(), leg.rend());
  }
  if (walk.back() != 0) walk.push_back(0);
  return walk;
}

/// Grassmann-Taksar-Heyman elimination: state reduction using only sums of
/// off-diagonal mass, so no 1 - p_ii cancellation occurs. Requires every
/// reduced state to keep positive exit mass, which irreducibility guarantees.
inline Eigen::VectorXd gth_stationary(Eigen::MatrixXd a) {
  const auto m = a.rows();
  for (Eigen::Index k = m - 1; k > 0; --k) {
    const double exit = a.row(k).head(k).sum();
    a.col(k).head(k) /= exit;
    a.topLeftCorner(k, k).noalias() += a.col(k).head(k) * a.row(k).head(k);
  }
  Eigen::VectorXd pi(m);
  pi(0) = 1.0;
  for (Eigen::Index k = 1; k < m; ++k) pi(k) = pi.head(k).dot(a.col(k).head(k));
  return pi / pi.sum();
}

}  // namespace detail

/// True when the positive-entry graph of P is strongly connected, i.e. a ring
/// chain with strictly positive edges covers every state.
inline bool is_ergodic(const StochasticMatrix& p) {
  return detail::strongly_connected(p.matrix(), std::numeric_limits<double>::min());
}

/// Unique solution of pi = pi P, sum(pi) = 1 for an ergodic (irreducible) P,
/// by GTH elimination (accurate even for nearly decoupled chains).
inline ProbabilityVector stationary_distribution(const StochasticMatrix& p) {
  if (!is_ergodic(p)) {
    throw NotErgodic("no ring chain with positive transition probabilities covers all states");
  }
  const int m = p.m();
  if (m == 1) return ProbabilityVector::point_mass(1, 0);
  Eigen::VectorXd pi = detail::gth_stationary(p.matrix());
  for (int i = 0; i < m; ++i) {
    if (!(pi(i) > 0.0)) throw NotErgodic("stationary solve produced a nonpositive component");
  }
  return ProbabilityVector(std::move(pi));
}

/// Outcome of a ring-chain search over an epsilon grid.
struct RingChainReport {
  std::vector<int> ring;                  ///< closed walk i0, ..., iN = i0 (empty on fail)
  std::vector<double> eps_grid;
  std::vector<double> min_edge_prob;      ///< per epsilon, along `ring`
  double best_bottleneck = 0.0;           ///< max over rings of min over grid and edges
  double threshold = 0.0;
  bool pass = false;
};

/// Searches for a ring chain covering every state whose smallest transition
/// probability stays >= threshold at every epsilon of the grid.
///
/// The best achievable bottleneck is found exactly: it is the largest value
/// b such that the graph of edges with min-over-grid probability >= b is
/// strongly connected. The reported ring is a covering closed walk in that
/// graph.
inline RingChainReport check_ring_ergodicity(std::span<const double> eps_grid,
                                             std::span<const StochasticMatrix> matrices,
                                             double threshold) {
  if (eps_grid.empty()) throw InvalidArgument("ring search needs a nonempty epsilon grid");
  if (eps_grid.size() != matrices.size()) {
    throw DimensionMismatch("one matrix per epsilon is required");
  }
  if (!(threshold > 0.0)) throw InvalidArgument("ring threshold must be positive");
  const int m = matrices.front().m();
  Eigen::MatrixXd floor_w = matrices.front().matrix();
  for (const auto& mat : matrices) {
    if (mat.m() != m) throw DimensionMismatch("matrices along the grid differ in size");
    floor_w = floor_w.cwiseMin(mat.matrix());
  }

  RingChainReport report;
  report.eps_grid.assign(eps_grid.begin(), eps_grid.end());
  report.threshold = threshold;

  std::vector<double> candidates(floor_w.data(), floor_w.data() + floor_w.size());
  std::sort(candidates.begin(), candidates.end(), std::greater<>());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  double best = 0.0;
  for (double c : candidates) {
    if (c <= 0.0) break;
    if (detail::strongly_connected(floor_w, c)) {
      best = c;
      break;
    }
  }
  report.best_bottleneck = best;
  if (best <= 0.0) return report;

  report.ring = detail::covering_walk(floor_w, best);
  for (const auto& mat : matrices) {
    double lo = 1.0;
    for (std::size_t k = 1; k < report.ring.size(); ++k) {
      lo = std::min(lo, mat(report.ring[k - 1], report.ring[k]));
    }
    report.min_edge_prob.push_back(lo);
  }
  report.pass = best >= threshold;
  return report;
}

/// mu_i(k) = #{1 <= l <= k : eta_{l-1} = i} for k = 0..n, where the path is
/// eta_0..eta_n.
inline std::vector<std::int64_t> occupation_counts(std::span<const int> path, int state, int m) {
  if (state < 0 || state >= m) throw InvalidArgument("state out of range");
  std::vector<std::int64_t> mu(path.empty() ? 1 : path.size(), 0);
  for (std::size_t k = 1; k < path.size(); ++k) {
    const int prev = path[k - 1];
    if (prev < 0 || prev >= m) throw InvalidArgument("path state out of range");
    mu[k] = mu[k - 1] + (prev == state ? 1 : 0);
  }
  if (!path.empty() && (path.back() < 0 || path.back() >= m)) {
    throw InvalidArgument("path state out of range");
  }
  return mu;
}

/// Successive moments k at which eta_k = state, in increasing order.
inline std::vector<std::int64_t> hitting_times(std::span<const int> path, int state) {
  std::vector<std::int64_t> tau;
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (path[k] == state) tau.push_back(static_cast<std::int64_t>(k));
  }
  return tau;
}

}  // namespace fret
