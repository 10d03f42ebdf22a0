#pragma once

// Limit laws: cumulants A(s) = g s + sum_k w_k (1 - exp(-s v_k)) of
// nonnegative infinitely divisible laws, the subordinator theta0(t) with
// E exp(-s theta0(t)) = exp(-t A(s)), and the time change xi0(t) = theta0(t nu0)
// with nu0 ~ Exponential(1) independent of theta0.

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "fret/error.hpp"
#include "fret/rng.hpp"

namespace fret {

struct LevyAtom {
  double size = 1.0;    ///< jump size v > 0
  double weight = 1.0;  ///< Levy-measure mass w > 0
};

/// Drift plus a finite atomic Levy measure.
class Cumulant {
 public:
  Cumulant(double drift, std::vector<LevyAtom> atoms) : g_(drift), atoms_(std::move(atoms)) {
    if (!(g_ >= 0.0) || !std::isfinite(g_)) throw InvalidArgument("cumulant drift must be >= 0");
    double nondegeneracy = g_;
    for (const auto& a : atoms_) {
      if (!(a.size > 0.0) || !(a.weight > 0.0) || !std::isfinite(a.size) ||
          !std::isfinite(a.weight)) {
        throw InvalidArgument("cumulant atoms need positive size and weight");
      }
      nondegeneracy += a.weight * a.size / (1.0 + a.size);
      total_rate_ += a.weight;
    }
    if (!(nondegeneracy > 0.0)) {
      throw InvalidArgument("cumulant is degenerate: drift and Levy measure both vanish");
    }
    cumulative_.reserve(atoms_.size());
    double acc = 0.0;
    for (const auto& a : atoms_) {
      acc += a.weight;
      cumulative_.push_back(acc / total_rate_);
    }
  }

  static Cumulant pure_drift(double g) { return Cumulant(g, {}); }

  double drift() const noexcept { return g_; }
  const std::vector<LevyAtom>& atoms() const noexcept { return atoms_; }
  double total_rate() const noexcept { return total_rate_; }

  /// Jump size of one compound-Poisson event.
  double draw_jump(RngStream& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return atoms_[static_cast<std::size_t>(it - cumulative_.begin())].size;
  }

 private:
  double g_;
  std::vector<LevyAtom> atoms_;
  double total_rate_ = 0.0;
  std::vector<double> cumulative_;
};

inline double cumulant_eval(const Cumulant& c, double s) {
  if (!(s >= 0.0)) throw InvalidArgument("cumulant argument must be >= 0");
  double a = c.drift() * s;
  for (const auto& atom : c.atoms()) a += -atom.weight * std::expm1(-s * atom.size);
  return a;
}

/// E exp(-s theta0(t)) = exp(-t A(s)).
inline double limit_laplace_theta(const Cumulant& c, double t, double s) {
  if (!(t >= 0.0)) throw InvalidArgument("time must be >= 0");
  return std::exp(-t * cumulant_eval(c, s));
}

/// E exp(-s xi0) = 1 / (1 + A(s)).
inline double limit_laplace_xi(const Cumulant& c, double s) {
  return 1.0 / (1.0 + cumulant_eval(c, s));
}

namespace detail {
inline void require_sorted_nonneg(std::span<const double> t_grid) {
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!(t_grid[k] >= 0.0)) throw InvalidArgument("t grid values must be >= 0");
    if (k > 0 && t_grid[k] < t_grid[k - 1]) throw InvalidArgument("t grid must be nondecreasing");
  }
}
}  // namespace detail

/// theta0 on a nondecreasing grid: drift plus compound Poisson, simulated
/// exactly through exponential inter-arrival times.
inline std::vector<double> sample_subordinator_grid(const Cumulant& c,
                                                    std::span<const double> t_grid,
                                                    RngStream& rng) {
  detail::require_sorted_nonneg(t_grid);
  std::vector<double> out;
  out.reserve(t_grid.size());
  const double rate = c.total_rate();
  double next_arrival = rate > 0.0 ? rng.exponential() / rate : HUGE_VAL;
  double jumps = 0.0;
  for (double t : t_grid) {
    while (next_arrival <= t) {
      jumps += c.draw_jump(rng);
      next_arrival += rng.exponential() / rate;
    }
    out.push_back(c.drift() * t + jumps);
  }
  return out;
}

struct Xi0Sample {
  double nu0 = 0.0;
  std::vector<double> values;
};

/// xi0(t) = theta0(t nu0). nu0 and the subordinator are drawn from two
/// distinct substreams, so they are independent by construction.
inline Xi0Sample sample_xi0(const Cumulant& c, std::span<const double> t_grid, RngStream& rng) {
  detail::require_sorted_nonneg(t_grid);
  const RngStream call = rng.substream(rng());
  RngStream nu_stream = call.substream(0);
  RngStream path_stream = call.substream(1);
  Xi0Sample out;
  out.nu0 = nu_stream.exponential();
  std::vector<double> scaled(t_grid.begin(), t_grid.end());
  for (double& t : scaled) t *= out.nu0;
  out.values = sample_subordinator_grid(c, scaled, path_stream);
  return out;
}

/// Stable cumulant Gamma(1 - alpha) * scale * s^alpha, alpha in (0,1).
inline double stable_cumulant(double alpha, double scale, double s) {
  return boost::math::tgamma(1.0 - alpha) * scale * std::pow(s, alpha);
}

/// Finite-activity approximation of the stable Levy measure
/// scale * alpha * v^{-alpha-1} dv. Jumps below v_lo become the drift
/// g = scale * alpha/(1-alpha) * v_lo^{1-alpha}; [v_lo, v_hi] is cut into
/// `bins` geometric cells with one atom at each cell's geometric midpoint
/// carrying the cell's mass; the mass above v_hi sits at v_hi.
///
/// For s <= s_max the error from the small-jump drift is at most
/// scale * alpha * s_max^2 * v_lo^{2-alpha} / (2 (2-alpha)); the tail atom errs
/// by at most scale * v_hi^{-alpha}. Cell placement error is second order in
/// the cell ratio.
inline Cumulant discretize_stable(double alpha, double scale, double v_lo = 1e-4,
                                  double v_hi = 1e4, int bins = 160) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("stable index must be in (0,1)");
  if (!(scale > 0.0) || !(v_lo > 0.0) || !(v_hi > v_lo) || bins < 1) {
    throw InvalidArgument("invalid stable discretization parameters");
  }
  const double g = scale * alpha / (1.0 - alpha) * std::pow(v_lo, 1.0 - alpha);
  std::vector<LevyAtom> atoms;
  atoms.reserve(static_cast<std::size_t>(bins) + 1);
  const double ratio = std::pow(v_hi / v_lo, 1.0 / bins);
  double lo = v_lo;
  for (int b = 0; b < bins; ++b) {
    const double hi = lo * ratio;
    const double mass = scale * (std::pow(lo, -alpha) - std::pow(hi, -alpha));
    atoms.push_back({std::sqrt(lo * hi), mass});
    lo = hi;
  }
  atoms.push_back({v_hi, scale * std::pow(v_hi, -alpha)});
  return Cumulant(g, std::move(atoms));
}

}  // namespace fret
