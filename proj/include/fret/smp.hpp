#pragma once

// Markov renewal / semi-Markov model: the transition kernel, path simulation,
// the first-rare-event functionals (nu, xi, xi(t)) and step-sum reward
// processes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fret/chain.hpp"
#include "fret/dist.hpp"
#include "fret/error.hpp"
#include "fret/rng.hpp"

namespace fret {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Joint law of (next state, flag, sojourn) given the current state:
/// P{eta_1 = j, zeta_1 = flag, kappa_1 <= t | eta_0 = i} = p(i,j,flag) F_{i,j,flag}(t).
class MarkovRenewalKernel {
 public:
  /// `joint` is indexed [i][j][flag]; `sojourn` likewise (flattened in the
  /// same order by the other constructor).
  MarkovRenewalKernel(int m, std::vector<double> joint, std::vector<SojournDistribution> sojourn)
      : m_(m), joint_(std::move(joint)), sojourn_(std::move(sojourn)) {
    if (m_ < 1) throw InvalidArgument("kernel needs m >= 1");
    const auto cells = static_cast<std::size_t>(m_) * static_cast<std::size_t>(m_) * 2;
    if (joint_.size() != cells || sojourn_.size() != cells) {
      throw DimensionMismatch("kernel arrays must have m*m*2 entries");
    }
    cumulative_.resize(cells);
    for (int i = 0; i < m_; ++i) {
      double sum = 0.0;
      for (int c = 0; c < 2 * m_; ++c) {
        const double x = joint_[index(i, c / 2, c % 2)];
        if (!(x >= 0.0)) {
          throw InvalidArgument("kernel probability for state " + std::to_string(i) +
                                " is negative");
        }
        sum += x;
        cumulative_[static_cast<std::size_t>(i) * 2 * m_ + c] = sum;
      }
      if (std::abs(sum - 1.0) > kProbTolerance) {
        throw InvalidArgument("kernel row " + std::to_string(i) + " does not sum to 1");
      }
    }
  }

  int m() const noexcept { return m_; }

  double prob(int i, int j, int flag) const { return joint_[index(i, j, flag)]; }
  const SojournDistribution& sojourn(int i, int j, int flag) const {
    return sojourn_[index(i, j, flag)];
  }

  /// p_i = P_i{zeta_1 = 1}.
  double rare_prob(int i) const {
    double p = 0.0;
    for (int j = 0; j < m_; ++j) p += prob(i, j, 1);
    return p;
  }

  std::vector<double> rare_probs() const {
    std::vector<double> out(m_);
    for (int i = 0; i < m_; ++i) out[i] = rare_prob(i);
    return out;
  }

  /// Embedded chain p_ij = p(i,j,0) + p(i,j,1).
  StochasticMatrix embedded() const {
    Eigen::MatrixXd p(m_, m_);
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < m_; ++j) p(i, j) = prob(i, j, 0) + prob(i, j, 1);
    }
    return StochasticMatrix(std::move(p));
  }

  /// Law of kappa_1 given eta_0 = i: mixture over (j, flag).
  SojournDistribution state_sojourn(int i) const {
    std::vector<double> w;
    std::vector<SojournDistribution> c;
    for (int j = 0; j < m_; ++j) {
      for (int f = 0; f < 2; ++f) {
        w.push_back(prob(i, j, f));
        c.push_back(sojourn(i, j, f));
      }
    }
    return make_mixture(std::move(w), std::move(c));
  }

  /// Draws (j, flag) from state i.
  std::pair<int, int> draw_transition(int i, RngStream& rng) const {
    const double u = rng.uniform();
    const auto begin = cumulative_.begin() + static_cast<std::ptrdiff_t>(i) * 2 * m_;
    const auto end = begin + 2 * m_;
    auto it = std::upper_bound(begin, end, u);
    if (it == end) --it;
    // never land on a zero-probability cell
    auto c = static_cast<int>(it - begin);
    while (joint_[index(i, c / 2, c % 2)] == 0.0 && c > 0) --c;
    return {c / 2, c % 2};
  }

 private:
  std::size_t index(int i, int j, int flag) const {
    return (static_cast<std::size_t>(i) * m_ + static_cast<std::size_t>(j)) * 2 +
           static_cast<std::size_t>(flag);
  }

  int m_;
  std::vector<double> joint_;
  std::vector<SojournDistribution> sojourn_;
  std::vector<double> cumulative_;
};

/// Kernel with the flag independent of (next state, sojourn) given the
/// current state: p(i,j,1) = P_ij * rare[i], sojourn(i,j,flag) = sojourn(i,j).
inline MarkovRenewalKernel independent_flag_kernel(
    const StochasticMatrix& p, std::span<const double> rare,
    const std::function<SojournDistribution(int i, int j, int flag)>& sojourn) {
  const int m = p.m();
  if (static_cast<int>(rare.size()) != m) throw DimensionMismatch("one rare probability per state");
  std::vector<double> joint(static_cast<std::size_t>(m) * m * 2);
  std::vector<SojournDistribution> soj(joint.size());
  for (int i = 0; i < m; ++i) {
    if (!(rare[i] >= 0.0 && rare[i] <= 1.0)) throw InvalidArgument("rare probability outside [0,1]");
    for (int j = 0; j < m; ++j) {
      for (int f = 0; f < 2; ++f) {
        const std::size_t k = (static_cast<std::size_t>(i) * m + j) * 2 + f;
        joint[k] = p(i, j) * (f == 1 ? rare[i] : 1.0 - rare[i]);
        soj[k] = sojourn(i, j, f);
      }
    }
  }
  return MarkovRenewalKernel(m, std::move(joint), std::move(soj));
}

/// One trajectory eta_0..eta_n with sojourns kappa_1..kappa_n, flags
/// zeta_1..zeta_n and jump moments tau_0..tau_n (tau_0 = 0).
struct PathSample {
  std::vector<int> states;
  std::vector<double> sojourns;
  std::vector<std::uint8_t> flags;
  std::vector<double> jump_moments;

  std::size_t steps() const noexcept { return sojourns.size(); }
};

struct FirstRareEventSample {
  std::int64_t nu = 0;
  double xi = 0.0;
  double last_sojourn = 0.0;
  std::vector<double> xi_grid;  ///< xi(t) = sum_{n <= floor(t nu)} kappa_n on the supplied grid
};

inline int draw_initial(const ProbabilityVector& q, RngStream& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  int last_positive = 0;
  for (int i = 0; i < q.size(); ++i) {
    if (q[i] > 0.0) last_positive = i;
    acc += q[i];
    if (u < acc && q[i] > 0.0) return i;
  }
  return last_positive;
}

inline void check_initial(const MarkovRenewalKernel& k, const ProbabilityVector& q) {
  if (q.size() != k.m()) throw DimensionMismatch("initial distribution size differs from m");
}

/// Simulates n_steps transitions starting from eta_0 ~ q.
inline PathSample simulate_path(const MarkovRenewalKernel& k, const ProbabilityVector& q,
                                std::int64_t n_steps, RngStream& rng) {
  check_initial(k, q);
  if (n_steps < 0) throw InvalidArgument("n_steps must be >= 0");
  PathSample path;
  const auto n = static_cast<std::size_t>(n_steps);
  path.states.reserve(n + 1);
  path.sojourns.reserve(n);
  path.flags.reserve(n);
  path.jump_moments.reserve(n + 1);
  int state = draw_initial(q, rng);
  path.states.push_back(state);
  path.jump_moments.push_back(0.0);
  CompensatedSum tau;
  for (std::size_t step = 0; step < n; ++step) {
    const auto [next, flag] = k.draw_transition(state, rng);
    const double kappa = sample(k.sojourn(state, next, flag), rng);
    tau.add(kappa);
    path.states.push_back(next);
    path.sojourns.push_back(kappa);
    path.flags.push_back(static_cast<std::uint8_t>(flag));
    path.jump_moments.push_back(tau.value());
    state = next;
  }
  return path;
}

/// Stationary rare-event average p_eps = sum_i pi_i p_i of the embedded chain.
inline double stationary_rare_prob(const MarkovRenewalKernel& k) {
  const auto pi = stationary_distribution(k.embedded());
  double p = 0.0;
  for (int i = 0; i < k.m(); ++i) p += pi[i] * k.rare_prob(i);
  return p;
}

/// Default step budget for rare-event loops: 10^4 * v_eps, clamped to
/// [10^4, 10^11]. nu exceeding it has probability about exp(-10^4).
inline std::int64_t default_max_steps(const MarkovRenewalKernel& k) {
  const double p = stationary_rare_prob(k);
  if (!(p > 0.0)) throw DegenerateRareEvent("rare event has zero stationary probability");
  const double budget = std::clamp(1e4 / p, 1e4, 1e11);
  return static_cast<std::int64_t>(budget);
}

/// floor(t * v) as a step count; t and v are used exactly.
inline std::int64_t floor_steps(double t, double v) {
  if (!(t >= 0.0) || !(v > 0.0)) throw InvalidArgument("time and scale must be nonnegative");
  return static_cast<std::int64_t>(std::floor(t * v));
}

/// Simulates until the first flagged transition. If t_grid is nonempty,
/// also returns xi(t) = sum of the first floor(t * nu) sojourns; for t > 1 the
/// trajectory is continued past nu as the process definition requires.
inline FirstRareEventSample sample_first_rare_event(const MarkovRenewalKernel& k,
                                                    const ProbabilityVector& q,
                                                    std::span<const double> t_grid,
                                                    std::int64_t max_steps, RngStream& rng) {
  check_initial(k, q);
  if (max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
  for (double t : t_grid) {
    if (!(t >= 0.0)) throw InvalidArgument("t grid values must be >= 0");
  }
  const bool keep = !t_grid.empty();
  std::vector<double> prefix;  // prefix[n] = kappa_1 + ... + kappa_n
  if (keep) prefix.push_back(0.0);

  FirstRareEventSample out;
  int state = draw_initial(q, rng);
  CompensatedSum xi;
  std::int64_t n = 0;
  while (true) {
    if (n >= max_steps) {
      throw MaxStepsExceeded("no rare event within " + std::to_string(max_steps) + " steps");
    }
    const auto [next, flag] = k.draw_transition(state, rng);
    const double kappa = sample(k.sojourn(state, next, flag), rng);
    ++n;
    xi.add(kappa);
    if (keep) prefix.push_back(xi.value());
    state = next;
    if (flag == 1) {
      out.last_sojourn = kappa;
      break;
    }
  }
  out.nu = n;
  out.xi = xi.value();
  if (!keep) return out;

  const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  const auto needed = static_cast<std::int64_t>(std::floor(t_max * static_cast<double>(n)));
  while (static_cast<std::int64_t>(prefix.size()) - 1 < needed) {
    const auto [next, flag] = k.draw_transition(state, rng);
    (void)flag;
    xi.add(sample(k.sojourn(state, next, flag), rng));
    prefix.push_back(xi.value());
    state = next;
  }
  out.xi_grid.reserve(t_grid.size());
  for (double t : t_grid) {
    const auto idx = static_cast<std::size_t>(std::floor(t * static_cast<double>(n)));
    out.xi_grid.push_back(prefix[idx]);
  }
  return out;
}

/// nu alone: simulates only the embedded (state, flag) chain.
inline std::int64_t sample_nu(const MarkovRenewalKernel& k, const ProbabilityVector& q,
                              std::int64_t max_steps, RngStream& rng) {
  check_initial(k, q);
  int state = draw_initial(q, rng);
  for (std::int64_t n = 1; n <= max_steps; ++n) {
    const auto [next, flag] = k.draw_transition(state, rng);
    if (flag == 1) return n;
    state = next;
  }
  throw MaxStepsExceeded("no rare event within " + std::to_string(max_steps) + " steps");
}

/// kappa(t) = sum_{n <= floor(t v)} kappa_n on the grid.
inline std::vector<double> reward_process_grid(const PathSample& path, double v,
                                               std::span<const double> t_grid) {
  std::vector<double> out;
  out.reserve(t_grid.size());
  std::int64_t needed = 0;
  for (double t : t_grid) needed = std::max(needed, floor_steps(t, v));
  if (static_cast<std::int64_t>(path.steps()) < needed) {
    throw PathTooShort("path has " + std::to_string(path.steps()) + " steps, grid needs " +
                       std::to_string(needed));
  }
  for (double t : t_grid) {
    const auto n = static_cast<std::size_t>(floor_steps(t, v));
    CompensatedSum sum;
    for (std::size_t l = 0; l < n; ++l) sum.add(path.sojourns[l]);
    out.push_back(sum.value());
  }
  return out;
}

struct DecompositionCheck {
  bool pass = true;
  double max_discrepancy = 0.0;
};

/// Recomputes kappa(t) by grouping sojourns by the state occupied at their
/// start: kappa(t) = sum_i sum_{n <= mu_i(floor(tv))} kappa_{i,n} with
/// kappa_{i,n} = kappa_{tau_{i,n}+1}, and compares with the direct sum.
inline DecompositionCheck hitting_decomposition_check(const PathSample& path, int m, double v,
                                                      std::span<const double> t_grid,
                                                      double tolerance = 1e-9) {
  const auto direct = reward_process_grid(path, v, t_grid);
  std::vector<std::vector<std::int64_t>> mu(m);
  std::vector<std::vector<std::int64_t>> tau(m);
  for (int i = 0; i < m; ++i) {
    mu[i] = occupation_counts(path.states, i, m);
    tau[i] = hitting_times(path.states, i);
  }
  DecompositionCheck out;
  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    const auto n = static_cast<std::size_t>(floor_steps(t_grid[g], v));
    CompensatedSum grouped;
    for (int i = 0; i < m; ++i) {
      const auto visits = static_cast<std::size_t>(mu[i][n]);
      for (std::size_t r = 0; r < visits; ++r) {
        grouped.add(path.sojourns[static_cast<std::size_t>(tau[i][r])]);
      }
    }
    const double gap = std::abs(grouped.value() - direct[g]);
    out.max_discrepancy = std::max(out.max_discrepancy, gap);
  }
  out.pass = out.max_discrepancy <= tolerance;
  return out;
}

/// Additive functional sum_{n <= nu} f(eta_{n-1}) of the pre-rare-event path.
inline double deterministic_reward_to_rare_event(const MarkovRenewalKernel& k,
                                                 const ProbabilityVector& q,
                                                 std::span<const double> reward,
                                                 std::int64_t max_steps, RngStream& rng) {
  check_initial(k, q);
  if (static_cast<int>(reward.size()) != k.m()) throw DimensionMismatch("one reward per state");
  int state = draw_initial(q, rng);
  CompensatedSum acc;
  for (std::int64_t n = 1; n <= max_steps; ++n) {
    acc.add(reward[state]);
    const auto [next, flag] = k.draw_transition(state, rng);
    if (flag == 1) return acc.value();
    state = next;
  }
  throw MaxStepsExceeded("no rare event within " + std::to_string(max_steps) + " steps");
}

/// Streams n_max steps and records, at each checkpoint n (sorted ascending),
/// the sojourn sum over the first n steps and whether no flag occurred yet.
struct PrefixRecord {
  std::vector<double> sums;
  std::vector<std::uint8_t> survived;
};

inline PrefixRecord run_prefix(const MarkovRenewalKernel& k, const ProbabilityVector& q,
                               std::span<const std::int64_t> checkpoints, RngStream& rng) {
  check_initial(k, q);
  PrefixRecord rec;
  rec.sums.reserve(checkpoints.size());
  rec.survived.reserve(checkpoints.size());
  int state = draw_initial(q, rng);
  CompensatedSum sum;
  bool alive = true;
  std::int64_t n = 0;
  for (std::int64_t target : checkpoints) {
    if (target < n) throw InvalidArgument("checkpoints must be nondecreasing");
    for (; n < target; ++n) {
      const auto [next, flag] = k.draw_transition(state, rng);
      sum.add(sample(k.sojourn(state, next, flag), rng));
      if (flag == 1) alive = false;
      state = next;
    }
    rec.sums.push_back(sum.value());
    rec.survived.push_back(alive ? 1 : 0);
  }
  return rec;
}

}  // namespace fret
