#pragma once

// Sojourn-time distributions: sampling, Laplace transforms, tails and
// truncated first moments.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "fret/error.hpp"
#include "fret/rng.hpp"

namespace fret {

class SojournDistribution;

/// Point mass at `value`.
struct Deterministic {
  double value = 0.0;
};

/// Exponential law with the given mean.
struct Exponential {
  double mean = 1.0;
};

/// `value` with probability `prob`, otherwise 0.
struct Atom {
  double value = 1.0;
  double prob = 1.0;
};

struct Gamma {
  double shape = 1.0;
  double scale = 1.0;
};

/// Pareto law shifted to start at zero (Lomax): P{X > x} = (1 + x/scale)^-alpha.
struct Pareto {
  double alpha = 1.0;
  double scale = 1.0;
};

struct Mixture {
  std::vector<double> weights;
  std::vector<SojournDistribution> components;
};

/// Nonnegative sojourn-time law. Value type; carries no epsilon dependence.
class SojournDistribution {
 public:
  using Variant = std::variant<Deterministic, Exponential, Atom, Gamma, Pareto, Mixture>;

  SojournDistribution() : v_(Deterministic{0.0}) {}
  SojournDistribution(Deterministic d) : v_(d) { validate(); }
  SojournDistribution(Exponential d) : v_(d) { validate(); }
  SojournDistribution(Atom d) : v_(d) { validate(); }
  SojournDistribution(Gamma d) : v_(d) { validate(); }
  SojournDistribution(Pareto d) : v_(d) { validate(); }
  SojournDistribution(Mixture d) : v_(std::move(d)) { validate(); }

  const Variant& variant() const noexcept { return v_; }

  template <class T>
  const T* get_if() const noexcept {
    return std::get_if<T>(&v_);
  }

 private:
  void validate() const;

  Variant v_;
};

inline void SojournDistribution::validate() const {
  auto finite_nonneg = [](double x) { return std::isfinite(x) && x >= 0.0; };
  auto finite_pos = [](double x) { return std::isfinite(x) && x > 0.0; };
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Deterministic>) {
          if (!finite_nonneg(d.value)) throw InvalidArgument("det: value must be >= 0");
        } else if constexpr (std::is_same_v<T, Exponential>) {
          if (!finite_pos(d.mean)) throw InvalidArgument("exp: mean must be > 0");
        } else if constexpr (std::is_same_v<T, Atom>) {
          if (!finite_pos(d.value)) throw InvalidArgument("atom: value must be > 0");
          if (!(d.prob >= 0.0 && d.prob <= 1.0)) throw InvalidArgument("atom: prob must be in [0,1]");
        } else if constexpr (std::is_same_v<T, Gamma>) {
          if (!finite_pos(d.shape) || !finite_pos(d.scale)) {
            throw InvalidArgument("gamma: shape and scale must be > 0");
          }
        } else if constexpr (std::is_same_v<T, Pareto>) {
          if (!finite_pos(d.alpha) || !finite_pos(d.scale)) {
            throw InvalidArgument("pareto: alpha and scale must be > 0");
          }
        } else {
          if (d.weights.size() != d.components.size() || d.weights.empty()) {
            throw InvalidArgument("mix: weights and components must be nonempty and aligned");
          }
          double total = 0.0;
          for (double w : d.weights) {
            if (!(w >= 0.0)) throw InvalidArgument("mix: negative weight");
            total += w;
          }
          if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("mix: weights must sum to 1");
        }
      },
      v_);
}

namespace detail {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

inline constexpr double kQuadratureTarget = 1e-10;

/// 1 - E exp(-s X) for the shifted Pareto law, via
/// s * int_0^inf e^{-sx} P{X > x} dx = int_0^inf e^{-y} (1 + y/(s*scale))^-alpha dy.
inline double pareto_one_minus_laplace(const Pareto& d, double s) {
  if (s == 0.0) return 0.0;
  const double c = s * d.scale;
  auto integrand = [&](double y) { return std::exp(-y - d.alpha * std::log1p(y / c)); };
  boost::math::quadrature::exp_sinh<double> integrator;
  double error = 0.0;
  double l1 = 0.0;
  const double value = integrator.integrate(integrand, 1e-13, &error, &l1);
  if (!(error <= kQuadratureTarget) || !std::isfinite(value)) {
    throw QuadratureFailure("pareto laplace: quadrature error " + std::to_string(error) +
                            " exceeds target at s=" + std::to_string(s));
  }
  return value;
}

}  // namespace detail

/// Draws one value; deterministic given the stream state.
inline double sample(const SojournDistribution& dist, RngStream& rng) {
  return std::visit(
      detail::Overloaded{
          [](const Deterministic& d) { return d.value; },
          [&](const Exponential& d) { return d.mean * rng.exponential(); },
          [&](const Atom& d) { return rng.uniform() < d.prob ? d.value : 0.0; },
          [&](const Gamma& d) {
            std::gamma_distribution<double> g(d.shape, d.scale);
            return g(rng);
          },
          [&](const Pareto& d) {
            // inverse tail: U^{-1/alpha} - 1 with U in (0,1]
            return d.scale * std::expm1(-std::log(rng.uniform_pos()) / d.alpha);
          },
          [&](const Mixture& d) {
            double u = rng.uniform();
            std::size_t k = 0;
            for (; k + 1 < d.weights.size(); ++k) {
              if (u < d.weights[k]) break;
              u -= d.weights[k];
            }
            while (k > 0 && d.weights[k] == 0.0) --k;
            return sample(d.components[k], rng);
          },
      },
      dist.variant());
}

/// 1 - E exp(-sX), evaluated without cancellation where a closed form exists.
inline double one_minus_laplace(const SojournDistribution& dist, double s) {
  if (!(s >= 0.0)) throw InvalidArgument("laplace argument must be >= 0");
  return std::visit(
      detail::Overloaded{
          [&](const Deterministic& d) { return -std::expm1(-s * d.value); },
          [&](const Exponential& d) { return d.mean * s / (1.0 + d.mean * s); },
          [&](const Atom& d) { return -d.prob * std::expm1(-s * d.value); },
          [&](const Gamma& d) { return -std::expm1(-d.shape * std::log1p(d.scale * s)); },
          [&](const Pareto& d) { return detail::pareto_one_minus_laplace(d, s); },
          [&](const Mixture& d) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d.weights.size(); ++k) {
              if (d.weights[k] > 0.0) acc += d.weights[k] * one_minus_laplace(d.components[k], s);
            }
            return acc;
          },
      },
      dist.variant());
}

/// E exp(-sX) for s >= 0.
inline double laplace(const SojournDistribution& dist, double s) {
  if (!(s >= 0.0)) throw InvalidArgument("laplace argument must be >= 0");
  return std::visit(
      detail::Overloaded{
          [&](const Deterministic& d) { return std::exp(-s * d.value); },
          [&](const Exponential& d) { return 1.0 / (1.0 + d.mean * s); },
          [&](const Atom& d) { return 1.0 - d.prob + d.prob * std::exp(-s * d.value); },
          [&](const Gamma& d) { return std::exp(-d.shape * std::log1p(d.scale * s)); },
          [&](const Pareto& d) { return 1.0 - detail::pareto_one_minus_laplace(d, s); },
          [&](const Mixture& d) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d.weights.size(); ++k) {
              if (d.weights[k] > 0.0) acc += d.weights[k] * laplace(d.components[k], s);
            }
            return acc;
          },
      },
      dist.variant());
}

/// 1 - F(u) with F right-continuous.
inline double tail(const SojournDistribution& dist, double u) {
  if (!(u > 0.0)) throw InvalidArgument("tail threshold must be > 0");
  return std::visit(
      detail::Overloaded{
          [&](const Deterministic& d) { return d.value > u ? 1.0 : 0.0; },
          [&](const Exponential& d) { return std::exp(-u / d.mean); },
          [&](const Atom& d) { return d.value > u ? d.prob : 0.0; },
          [&](const Gamma& d) { return boost::math::gamma_q(d.shape, u / d.scale); },
          [&](const Pareto& d) { return std::exp(-d.alpha * std::log1p(u / d.scale)); },
          [&](const Mixture& d) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d.weights.size(); ++k) {
              if (d.weights[k] > 0.0) acc += d.weights[k] * tail(d.components[k], u);
            }
            return acc;
          },
      },
      dist.variant());
}

/// Integral of v dF(v) over (0, u].
inline double truncated_mean(const SojournDistribution& dist, double u) {
  if (!(u > 0.0)) throw InvalidArgument("truncation point must be > 0");
  return std::visit(
      detail::Overloaded{
          [&](const Deterministic& d) { return (d.value > 0.0 && d.value <= u) ? d.value : 0.0; },
          [&](const Exponential& d) {
            const double mu = d.mean;
            return mu - (u + mu) * std::exp(-u / mu);
          },
          [&](const Atom& d) { return d.value <= u ? d.prob * d.value : 0.0; },
          [&](const Gamma& d) {
            return d.shape * d.scale * boost::math::gamma_p(d.shape + 1.0, u / d.scale);
          },
          [&](const Pareto& d) {
            // int_0^u P{X>x} dx - u P{X>u}
            const double z = std::log1p(u / d.scale);
            const double tail_u = std::exp(-d.alpha * z);
            double area = 0.0;
            if (std::abs(d.alpha - 1.0) < 1e-12) {
              area = d.scale * z;
            } else {
              area = d.scale * std::expm1((1.0 - d.alpha) * z) / (1.0 - d.alpha);
            }
            return std::max(0.0, area - u * tail_u);
          },
          [&](const Mixture& d) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d.weights.size(); ++k) {
              if (d.weights[k] > 0.0) acc += d.weights[k] * truncated_mean(d.components[k], u);
            }
            return acc;
          },
      },
      dist.variant());
}

/// E X; +infinity for Pareto with alpha <= 1.
inline double mean(const SojournDistribution& dist) {
  return std::visit(
      detail::Overloaded{
          [](const Deterministic& d) { return d.value; },
          [](const Exponential& d) { return d.mean; },
          [](const Atom& d) { return d.prob * d.value; },
          [](const Gamma& d) { return d.shape * d.scale; },
          [](const Pareto& d) {
            return d.alpha > 1.0 ? d.scale / (d.alpha - 1.0)
                                 : std::numeric_limits<double>::infinity();
          },
          [](const Mixture& d) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d.weights.size(); ++k) {
              if (d.weights[k] > 0.0) acc += d.weights[k] * mean(d.components[k]);
            }
            return acc;
          },
      },
      dist.variant());
}

/// True for laws concentrated at zero.
inline bool is_zero(const SojournDistribution& dist) {
  return std::visit(
      detail::Overloaded{
          [](const Deterministic& d) { return d.value == 0.0; },
          [](const Exponential&) { return false; },
          [](const Atom& d) { return d.prob == 0.0; },
          [](const Gamma&) { return false; },
          [](const Pareto&) { return false; },
          [](const Mixture& d) {
            for (std::size_t k = 0; k < d.weights.size(); ++k) {
              if (d.weights[k] > 0.0 && !is_zero(d.components[k])) return false;
            }
            return true;
          },
      },
      dist.variant());
}

/// Mixture that drops zero-weight components; a single survivor is returned as is.
inline SojournDistribution make_mixture(std::vector<double> weights,
                                        std::vector<SojournDistribution> components) {
  if (weights.size() != components.size()) {
    throw InvalidArgument("mix: weights and components must be aligned");
  }
  Mixture mix;
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0) {
      mix.weights.push_back(weights[k]);
      mix.components.push_back(std::move(components[k]));
      total += weights[k];
    }
  }
  if (mix.weights.empty()) throw InvalidArgument("mix: all weights are zero");
  for (double& w : mix.weights) w /= total;
  if (mix.weights.size() == 1) return mix.components.front();
  return SojournDistribution(std::move(mix));
}

}  // namespace fret
