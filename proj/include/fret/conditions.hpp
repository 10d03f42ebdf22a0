#pragma once

// Numeric checkers for the model conditions over a finite epsilon grid.
//
// Asymptotic statements ("-> 0", "-> A(s)") are operationalized as
// stabilization proxies on the grid: successive differences must shrink and
// the last one must fall below a relative tolerance. Checkers never
// extrapolate beyond the grid; "inconclusive" is a legitimate verdict.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fret/analytic.hpp"
#include "fret/chain.hpp"
#include "fret/dist.hpp"
#include "fret/error.hpp"
#include "fret/levy.hpp"
#include "fret/parallel.hpp"
#include "fret/smp.hpp"

namespace fret {

enum class Verdict { pass, fail, inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

inline Verdict verdict_from_string(const std::string& s) {
  if (s == "pass") return Verdict::pass;
  if (s == "fail") return Verdict::fail;
  if (s == "inconclusive") return Verdict::inconclusive;
  throw ConfigError("unknown verdict '" + s + "'");
}

/// Worst of two verdicts: fail beats inconclusive beats pass.
inline Verdict combine(Verdict a, Verdict b) {
  if (a == Verdict::fail || b == Verdict::fail) return Verdict::fail;
  if (a == Verdict::inconclusive || b == Verdict::inconclusive) return Verdict::inconclusive;
  return Verdict::pass;
}

/// The perturbed model: epsilon -> kernel over a strictly decreasing grid.
struct EpsilonFamily {
  std::string label;
  std::vector<double> eps_grid;
  std::function<MarkovRenewalKernel(double)> builder;
  std::optional<std::vector<double>> initial;  ///< defaults to a point mass at state 0

  void validate() const {
    if (eps_grid.empty()) throw InvalidArgument("epsilon grid must be nonempty");
    for (std::size_t k = 0; k < eps_grid.size(); ++k) {
      if (!(eps_grid[k] > 0.0)) throw InvalidArgument("epsilon values must be positive");
      if (k > 0 && !(eps_grid[k] < eps_grid[k - 1])) {
        throw InvalidArgument("epsilon grid must be strictly decreasing");
      }
    }
    if (!builder) throw InvalidArgument("epsilon family has no kernel builder");
  }

  MarkovRenewalKernel at(double eps) const { return builder(eps); }

  ProbabilityVector initial_for(int m) const {
    if (!initial) return ProbabilityVector::point_mass(m, 0);
    ProbabilityVector q(*initial);
    if (q.size() != m) throw DimensionMismatch("initial distribution size differs from m");
    return q;
  }
};

struct DiagnosticRow {
  double eps = 0.0;
  std::map<std::string, double> values;
};

struct ConditionReport {
  std::string condition;
  std::map<std::string, std::vector<double>> grid;
  std::vector<DiagnosticRow> diagnostics;
  Verdict verdict = Verdict::inconclusive;
  std::map<std::string, double> thresholds;
  std::map<std::string, Verdict> sub_verdicts;
  std::map<std::string, double> summary;
  std::vector<std::string> notes;
};

inline void to_json(nlohmann::json& j, const ConditionReport& r) {
  nlohmann::json diag = nlohmann::json::array();
  for (const auto& row : r.diagnostics) {
    nlohmann::json values = nlohmann::json::object();
    for (const auto& [k, v] : row.values) values[k] = v;
    diag.push_back({{"eps", row.eps}, {"values", values}});
  }
  nlohmann::json subs = nlohmann::json::object();
  for (const auto& [k, v] : r.sub_verdicts) subs[k] = to_string(v);
  j = nlohmann::json{{"condition", r.condition},   {"grid", r.grid},
                     {"diagnostics", diag},        {"verdict", to_string(r.verdict)},
                     {"thresholds", r.thresholds}, {"sub_verdicts", subs},
                     {"summary", r.summary},       {"notes", r.notes}};
}

/// Flat CSV: condition,eps,name,value.
inline std::string condition_csv(const std::vector<ConditionReport>& reports) {
  std::ostringstream out;
  out.precision(17);
  out << "condition,eps,name,value\n";
  for (const auto& r : reports) {
    for (const auto& row : r.diagnostics) {
      for (const auto& [name, value] : row.values) {
        out << r.condition << ',' << row.eps << ",\"" << name << "\"," << value << '\n';
      }
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Averaged quantities

struct AveragedRareProb {
  double p_eps = 0.0;
  double v_eps = 0.0;
};

/// p_eps = sum_i pi_i p_i, v_eps = 1 / p_eps.
inline AveragedRareProb averaged_rare_prob(const MarkovRenewalKernel& k) {
  const double p = stationary_rare_prob(k);
  if (!(p > 0.0)) throw DegenerateRareEvent("averaged rare-event probability is zero");
  return {p, 1.0 / p};
}

/// Stationary data of one kernel: pi, p_eps, v_eps and the pi-averaged
/// sojourn law G_eps = sum_i pi_i G_{eps,i}.
struct AveragedQuantities {
  ProbabilityVector pi;
  double p_eps;
  double v_eps;
  SojournDistribution mixture;
};

inline AveragedQuantities averaged_quantities(const MarkovRenewalKernel& k) {
  auto pi = stationary_distribution(k.embedded());
  double p = 0.0;
  std::vector<double> w;
  std::vector<SojournDistribution> c;
  for (int i = 0; i < k.m(); ++i) {
    p += pi[i] * k.rare_prob(i);
    for (int j = 0; j < k.m(); ++j) {
      for (int f = 0; f < 2; ++f) {
        w.push_back(pi[i] * k.prob(i, j, f));
        c.push_back(k.sojourn(i, j, f));
      }
    }
  }
  if (!(p > 0.0)) throw DegenerateRareEvent("averaged rare-event probability is zero");
  return {std::move(pi), p, 1.0 / p, make_mixture(std::move(w), std::move(c))};
}

/// theta_eps = sum of floor(v_eps) iid draws from G_eps.
class ThetaSampler {
 public:
  explicit ThetaSampler(const MarkovRenewalKernel& k) : avg_(averaged_quantities(k)) {
    count_ = static_cast<std::int64_t>(std::floor(avg_.v_eps));
  }

  double operator()(RngStream& rng) const {
    CompensatedSum sum;
    for (std::int64_t n = 0; n < count_; ++n) sum.add(sample(avg_.mixture, rng));
    return sum.value();
  }

  std::int64_t count() const noexcept { return count_; }
  const AveragedQuantities& averaged() const noexcept { return avg_; }

 private:
  AveragedQuantities avg_;
  std::int64_t count_ = 0;
};

inline double sample_theta_eps(const MarkovRenewalKernel& k, RngStream& rng) {
  return ThetaSampler(k)(rng);
}

/// max_ij |A_ij - B_ij| of two embedded matrices.
inline double kernel_closeness(const StochasticMatrix& a, const StochasticMatrix& b) {
  if (a.m() != b.m()) throw DimensionMismatch("kernels differ in state count");
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

inline double kernel_closeness(const MarkovRenewalKernel& a, const MarkovRenewalKernel& b) {
  return kernel_closeness(a.embedded(), b.embedded());
}

// ---------------------------------------------------------------------------
// Stabilization proxies

struct SeriesAnalysis {
  Verdict verdict = Verdict::inconclusive;  ///< stabilization verdict
  bool diverging_up = false;                ///< increasing with non-shrinking steps
  bool vanishing = false;                   ///< decreasing geometrically toward 0
  double last = 0.0;
  double last_diff = 0.0;
};

/// Cauchy proxy along the epsilon grid: stable iff the last successive
/// difference is <= rel_tol * max(|last|, abs_scale) and differences are not
/// growing. Shrinking-but-large differences give inconclusive.
inline SeriesAnalysis analyze_series(const std::vector<double>& x, double rel_tol,
                                     double abs_scale) {
  SeriesAnalysis out;
  if (x.empty()) return out;
  out.last = x.back();
  for (double v : x) {
    if (!std::isfinite(v)) {
      out.verdict = Verdict::fail;
      return out;
    }
  }
  if (x.size() < 2) return out;
  std::vector<double> d;
  for (std::size_t k = 1; k < x.size(); ++k) d.push_back(std::abs(x[k] - x[k - 1]));
  out.last_diff = d.back();
  const double scale = std::max(std::abs(out.last), abs_scale);
  // Differences at round-off level count as zero.
  const double roundoff = 1e-12 * std::max(scale, 1e-300);
  const bool shrinking = d.size() < 2 || d.back() <= d[d.size() - 2] + roundoff;
  bool increasing = true;
  bool decreasing = true;
  for (std::size_t k = 1; k < x.size(); ++k) {
    increasing = increasing && x[k] > x[k - 1];
    decreasing = decreasing && x[k] < x[k - 1];
  }
  out.diverging_up = increasing && d.size() >= 2 && !shrinking;
  out.vanishing = decreasing && x.back() >= 0.0 && x.back() <= 0.1 * x.front();

  if (d.back() <= rel_tol * scale && shrinking) {
    out.verdict = Verdict::pass;
  } else if (x.size() >= 3 && d.back() < d[d.size() - 2]) {
    out.verdict = Verdict::inconclusive;
  } else if (x.size() < 3) {
    out.verdict = Verdict::inconclusive;
  } else {
    out.verdict = Verdict::fail;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkers

namespace detail {

inline std::string fmt_num(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

template <class T, class Fn>
std::vector<T> per_eps(const EpsilonFamily& f, Fn&& fn) {
  f.validate();
  return parallel::map_indices<T>(f.eps_grid.size(),
                                  [&](std::size_t k) { return fn(f.eps_grid[k]); });
}

}  // namespace detail

struct AOptions {
  double decay_ratio = 0.1;  ///< pass needs max p at the last epsilon <= ratio * first
};

/// Condition A: 0 < max_i p_{eps,i} -> 0.
inline ConditionReport check_condition_A(const EpsilonFamily& f, const AOptions& opt = {}) {
  ConditionReport r;
  r.condition = "A";
  r.grid["eps"] = f.eps_grid;
  r.thresholds["decay_ratio"] = opt.decay_ratio;
  const auto maxima = detail::per_eps<double>(f, [&](double eps) {
    const auto p = f.at(eps).rare_probs();
    return *std::max_element(p.begin(), p.end());
  });
  for (std::size_t k = 0; k < maxima.size(); ++k) {
    r.diagnostics.push_back({f.eps_grid[k], {{"max_p", maxima[k]}}});
  }
  const bool positive = std::all_of(maxima.begin(), maxima.end(), [](double p) { return p > 0.0; });
  bool nonincreasing = true;
  for (std::size_t k = 1; k < maxima.size(); ++k) {
    nonincreasing = nonincreasing && maxima[k] <= maxima[k - 1] * (1.0 + 1e-12);
  }
  if (!positive) {
    r.verdict = Verdict::fail;
    r.notes.push_back("rare event impossible at some epsilon");
  } else if (maxima.size() < 2) {
    r.verdict = Verdict::inconclusive;
  } else {
    const double ratio = maxima.back() / maxima.front();
    r.summary["decay_ratio_observed"] = ratio;
    if (nonincreasing && ratio <= opt.decay_ratio) {
      r.verdict = Verdict::pass;
    } else if (!nonincreasing || ratio >= 0.5) {
      r.verdict = Verdict::fail;
    } else {
      r.verdict = Verdict::inconclusive;
    }
  }
  return r;
}

struct BOptions {
  double threshold = 1e-3;
};

/// Condition B via ring-chain search; also reports the smallest stationary
/// probability over the grid.
inline ConditionReport check_condition_B(const EpsilonFamily& f, const BOptions& opt = {}) {
  f.validate();
  ConditionReport r;
  r.condition = "B";
  r.grid["eps"] = f.eps_grid;
  r.thresholds["ring_threshold"] = opt.threshold;
  std::vector<StochasticMatrix> mats;
  mats.reserve(f.eps_grid.size());
  for (double eps : f.eps_grid) mats.push_back(f.at(eps).embedded());
  const auto ring = check_ring_ergodicity(f.eps_grid, mats, opt.threshold);
  r.summary["best_bottleneck"] = ring.best_bottleneck;
  for (std::size_t k = 0; k < mats.size(); ++k) {
    DiagnosticRow row{f.eps_grid[k], {}};
    if (!ring.ring.empty()) row.values["min_edge_prob"] = ring.min_edge_prob[k];
    if (is_ergodic(mats[k])) {
      const auto pi = stationary_distribution(mats[k]);
      row.values["min_pi"] = pi.vector().minCoeff();
    }
    r.diagnostics.push_back(std::move(row));
  }
  r.verdict = ring.pass ? Verdict::pass : Verdict::fail;
  if (ring.pass) {
    double lo = 1.0;
    for (const auto& row : r.diagnostics) lo = std::min(lo, row.values.at("min_pi"));
    r.summary["min_pi_lower_bound"] = lo;
    std::ostringstream ring_text;
    for (std::size_t k = 0; k < ring.ring.size(); ++k) ring_text << (k ? "->" : "") << ring.ring[k];
    r.notes.push_back("ring " + ring_text.str());
  }
  r.notes.push_back("liminf over epsilon approximated by min over the grid >= ring_threshold");
  return r;
}

struct COptions {
  std::vector<double> deltas{0.05, 0.25, 0.5};
  double tolerance = 0.05;
};

/// Condition C: P_i{kappa_1 > delta | zeta_1 = 1} -> 0.
inline ConditionReport check_condition_C(const EpsilonFamily& f, const COptions& opt = {}) {
  ConditionReport r;
  r.condition = "C";
  r.grid["eps"] = f.eps_grid;
  r.grid["delta"] = opt.deltas;
  r.thresholds["tolerance"] = opt.tolerance;
  for (double d : opt.deltas) {
    if (!(d > 0.0)) throw InvalidArgument("condition C deltas must be positive");
  }
  r.diagnostics = detail::per_eps<DiagnosticRow>(f, [&](double eps) {
    const auto k = f.at(eps);
    DiagnosticRow row{eps, {}};
    double worst = 0.0;
    bool any = false;
    for (int i = 0; i < k.m(); ++i) {
      const double pi_flag = k.rare_prob(i);
      if (!(pi_flag > 0.0)) continue;
      any = true;
      for (double delta : opt.deltas) {
        double num = 0.0;
        for (int j = 0; j < k.m(); ++j) {
          const double p = k.prob(i, j, 1);
          if (p > 0.0) num += p * tail(k.sojourn(i, j, 1), delta);
        }
        const double stat = num / pi_flag;
        row.values["i=" + std::to_string(i) + ",delta=" + detail::fmt_num(delta)] = stat;
        worst = std::max(worst, stat);
      }
    }
    row.values["max_conditional_tail"] = any ? worst : std::numeric_limits<double>::quiet_NaN();
    return row;
  });
  std::vector<double> worst;
  for (const auto& row : r.diagnostics) worst.push_back(row.values.at("max_conditional_tail"));
  if (std::any_of(worst.begin(), worst.end(), [](double x) { return !std::isfinite(x); })) {
    r.verdict = Verdict::fail;
    r.notes.push_back("flag never occurs at some epsilon; conditioning undefined");
    return r;
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < worst.size(); ++k) decreasing = decreasing && worst[k] < worst[k - 1];
  if (worst.back() <= opt.tolerance && worst.back() <= worst.front()) {
    r.verdict = Verdict::pass;
  } else if (decreasing && worst.size() >= 2 && worst.back() < 0.5 * worst.front()) {
    r.verdict = Verdict::inconclusive;
  } else {
    r.verdict = Verdict::fail;
  }
  return r;
}

struct D1Options {
  std::vector<double> s_grid{0.5, 1.0, 2.0};
  double rel_tolerance = 1e-2;
  double probe_factor = 1e-6;  ///< small-s probe at s_min * probe_factor
  double probe_ratio = 1e-2;   ///< A(probe) must be <= ratio * A(s_min)
  std::optional<Cumulant> target;
};

/// Condition D1: A_eps(s) = v_eps (1 - phi_eps(s)) stabilizes to a positive
/// function vanishing at 0+.
inline ConditionReport check_condition_D1(const EpsilonFamily& f, const D1Options& opt = {}) {
  if (opt.s_grid.empty()) throw InvalidArgument("D1 needs a nonempty s grid");
  std::vector<double> s_sorted = opt.s_grid;
  std::sort(s_sorted.begin(), s_sorted.end());
  if (!(s_sorted.front() > 0.0)) throw InvalidArgument("D1 s grid must be positive");
  const double s_probe = s_sorted.front() * opt.probe_factor;

  ConditionReport r;
  r.condition = "D1";
  r.grid["eps"] = f.eps_grid;
  r.grid["s"] = s_sorted;
  r.thresholds["rel_tolerance"] = opt.rel_tolerance;
  r.thresholds["probe_s"] = s_probe;
  r.thresholds["probe_ratio"] = opt.probe_ratio;

  r.diagnostics = detail::per_eps<DiagnosticRow>(f, [&](double eps) {
    const auto avg = averaged_quantities(f.at(eps));
    DiagnosticRow row{eps, {{"p_eps", avg.p_eps}, {"v_eps", avg.v_eps}}};
    for (double s : s_sorted) {
      const double a = avg.v_eps * one_minus_laplace(avg.mixture, s);
      row.values["A_eps(s=" + detail::fmt_num(s) + ")"] = a;
      if (opt.target) {
        row.values["abs_err(s=" + detail::fmt_num(s) + ")"] =
            std::abs(a - cumulant_eval(*opt.target, s));
      }
    }
    row.values["A_eps(probe)"] = avg.v_eps * one_minus_laplace(avg.mixture, s_probe);
    return row;
  });

  Verdict v = Verdict::pass;
  std::vector<double> last_values;
  bool vanishing = false;
  for (double s : s_sorted) {
    std::vector<double> series;
    const std::string key = "A_eps(s=" + detail::fmt_num(s) + ")";
    for (const auto& row : r.diagnostics) series.push_back(row.values.at(key));
    const auto a = analyze_series(series, opt.rel_tolerance, 0.0);
    r.sub_verdicts["s=" + detail::fmt_num(s)] = a.verdict;
    v = combine(v, a.verdict);
    last_values.push_back(a.last);
    vanishing = vanishing || a.vanishing;
    r.summary[key + " last"] = a.last;
  }
  // A series decaying geometrically to zero has the degenerate limit A = 0.
  const bool positive = !vanishing && std::all_of(last_values.begin(), last_values.end(),
                                                  [](double a) { return a > 0.0; });
  bool monotone = true;
  for (std::size_t k = 1; k < last_values.size(); ++k) {
    monotone = monotone && last_values[k] >= last_values[k - 1] * (1.0 - 1e-12);
  }
  const double probe = r.diagnostics.back().values.at("A_eps(probe)");
  const bool vanishes = probe <= opt.probe_ratio * last_values.front();
  r.sub_verdicts["positive"] = positive ? Verdict::pass : Verdict::fail;
  r.sub_verdicts["monotone_in_s"] = monotone ? Verdict::pass : Verdict::fail;
  r.sub_verdicts["vanishes_at_0"] = vanishes ? Verdict::pass : Verdict::fail;
  if (!positive || !monotone || !vanishes) v = Verdict::fail;
  r.verdict = v;
  return r;
}

struct D2Options {
  std::vector<double> u_grid{0.25, 0.5, 1.0, 2.0};
  double rel_tolerance = 1e-2;
  double abs_scale = 1.0;        ///< statistics below this are compared absolutely
  double continuity_step = 1e-3; ///< relative offset of the continuity probe
};

/// Condition D2 (central criterion): tail statistic v_eps (1 - G_eps(u)) and
/// truncated-moment statistic v_eps int_(0,u] v G_eps(dv) stabilize at every
/// probed continuity point u, and the limit is not concentrated at zero.
inline ConditionReport check_condition_D2(const EpsilonFamily& f, const D2Options& opt = {}) {
  if (opt.u_grid.empty()) throw InvalidArgument("D2 needs a nonempty u grid");
  std::vector<double> u_sorted = opt.u_grid;
  std::sort(u_sorted.begin(), u_sorted.end());
  if (!(u_sorted.front() > 0.0)) throw InvalidArgument("D2 u grid must be positive");
  const double h = opt.continuity_step;

  ConditionReport r;
  r.condition = "D2";
  r.grid["eps"] = f.eps_grid;
  r.grid["u"] = u_sorted;
  r.thresholds["rel_tolerance"] = opt.rel_tolerance;
  r.thresholds["abs_scale"] = opt.abs_scale;
  r.thresholds["continuity_step"] = h;

  r.diagnostics = detail::per_eps<DiagnosticRow>(f, [&](double eps) {
    const auto avg = averaged_quantities(f.at(eps));
    DiagnosticRow row{eps, {{"v_eps", avg.v_eps}}};
    for (double u : u_sorted) {
      const std::string tag = "(u=" + detail::fmt_num(u) + ")";
      row.values["tail" + tag] = avg.v_eps * tail(avg.mixture, u);
      row.values["moment" + tag] = avg.v_eps * truncated_mean(avg.mixture, u);
      row.values["tail_minus" + tag] = avg.v_eps * tail(avg.mixture, u * (1.0 - h));
      row.values["tail_plus" + tag] = avg.v_eps * tail(avg.mixture, u * (1.0 + h));
    }
    return row;
  });

  Verdict v = Verdict::pass;
  bool any_used = false;
  bool nondegenerate = false;
  const auto& last = r.diagnostics.back().values;
  for (double u : u_sorted) {
    const std::string tag = "(u=" + detail::fmt_num(u) + ")";
    const double jump = std::abs(last.at("tail_minus" + tag) - last.at("tail_plus" + tag));
    if (jump > opt.rel_tolerance * std::max(opt.abs_scale, std::abs(last.at("tail" + tag)))) {
      r.sub_verdicts["u=" + detail::fmt_num(u)] = Verdict::inconclusive;
      r.notes.push_back("u=" + detail::fmt_num(u) +
                        " flagged as a possible discontinuity of the limit; excluded");
      continue;
    }
    any_used = true;
    std::vector<double> tails;
    std::vector<double> moments;
    for (const auto& row : r.diagnostics) {
      tails.push_back(row.values.at("tail" + tag));
      moments.push_back(row.values.at("moment" + tag));
    }
    const auto ta = analyze_series(tails, opt.rel_tolerance, opt.abs_scale);
    const auto ma = analyze_series(moments, opt.rel_tolerance, opt.abs_scale);
    const Verdict uv = combine(ta.verdict, ma.verdict);
    r.sub_verdicts["u=" + detail::fmt_num(u)] = uv;
    v = combine(v, uv);
    const bool tail_zero = ta.vanishing || ta.last <= 1e-9;
    const bool moment_zero = ma.vanishing || ma.last <= 1e-9;
    if (!(tail_zero && moment_zero)) nondegenerate = true;
  }
  if (!any_used) {
    r.verdict = Verdict::inconclusive;
    return r;
  }
  r.sub_verdicts["nondegenerate"] = nondegenerate ? Verdict::pass : Verdict::fail;
  if (!nondegenerate) {
    v = Verdict::fail;
    r.notes.push_back("both statistics vanish: limit concentrated at zero");
  }
  r.verdict = v;
  return r;
}

/// Per-state nonnegative reward f_{eps,i}, possibly depending on the kernel.
using RewardFn = std::function<std::vector<double>(double eps, const MarkovRenewalKernel&)>;

/// f_{eps,i} = scale * p_{eps,i}; with scale 1 the normalized functional has
/// f_eps = 1 identically.
inline RewardFn rare_prob_reward(double scale = 1.0) {
  return [scale](double, const MarkovRenewalKernel& k) {
    auto p = k.rare_probs();
    for (double& x : p) x *= scale;
    return p;
  };
}

/// f_eps = v_eps sum_i pi_i f_{eps,i}.
inline double normalized_reward(const MarkovRenewalKernel& k, std::span<const double> reward) {
  if (static_cast<int>(reward.size()) != k.m()) throw DimensionMismatch("one reward per state");
  const auto pi = stationary_distribution(k.embedded());
  const auto avg = averaged_rare_prob(k);
  double acc = 0.0;
  for (int i = 0; i < k.m(); ++i) {
    if (!(reward[i] >= 0.0)) throw InvalidArgument("rewards must be nonnegative");
    acc += pi[i] * reward[i];
  }
  return avg.v_eps * acc;
}

struct GOptions {
  double rel_tolerance = 1e-2;
};

/// Conditions G (f_eps -> f0 in (0,inf)), H (f_eps > 0 on the grid) and
/// I (f_eps -> f0 in [0,inf]). The report verdict is the G verdict.
inline ConditionReport check_condition_G(const EpsilonFamily& f, const RewardFn& reward,
                                         const GOptions& opt = {}) {
  ConditionReport r;
  r.condition = "G";
  r.grid["eps"] = f.eps_grid;
  r.thresholds["rel_tolerance"] = opt.rel_tolerance;
  const auto values = detail::per_eps<double>(f, [&](double eps) {
    const auto k = f.at(eps);
    const auto rw = reward(eps, k);
    return normalized_reward(k, rw);
  });
  for (std::size_t k = 0; k < values.size(); ++k) {
    r.diagnostics.push_back({f.eps_grid[k], {{"f_eps", values[k]}}});
  }
  const auto a = analyze_series(values, opt.rel_tolerance, 0.0);
  const bool positive = std::all_of(values.begin(), values.end(), [](double x) { return x > 0.0; });
  Verdict g = a.verdict;
  if (a.diverging_up || a.vanishing || !(a.last > 0.0)) g = Verdict::fail;
  Verdict i = a.verdict;
  if (a.diverging_up) {
    i = Verdict::pass;
    r.summary["f0_estimate"] = std::numeric_limits<double>::infinity();
    r.notes.push_back("f_eps diverges: f0 = infinity");
  } else if (a.vanishing) {
    i = Verdict::pass;
    r.summary["f0_estimate"] = 0.0;
    r.notes.push_back("f_eps vanishes: f0 = 0");
  } else {
    r.summary["f0_estimate"] = a.last;
  }
  r.sub_verdicts["G"] = g;
  r.sub_verdicts["H"] = positive ? Verdict::pass : Verdict::fail;
  r.sub_verdicts["I"] = i;
  r.verdict = g;
  return r;
}

/// Options bundle for running a list of checkers by name.
struct ConditionSuiteOptions {
  AOptions a;
  BOptions b;
  COptions c;
  D1Options d1;
  D2Options d2;
  GOptions g;
  RewardFn reward = rare_prob_reward();
};

inline ConditionReport run_condition(const std::string& name, const EpsilonFamily& f,
                                     const ConditionSuiteOptions& opt) {
  if (name == "A") return check_condition_A(f, opt.a);
  if (name == "B") return check_condition_B(f, opt.b);
  if (name == "C") return check_condition_C(f, opt.c);
  if (name == "D1") return check_condition_D1(f, opt.d1);
  if (name == "D2") return check_condition_D2(f, opt.d2);
  if (name == "G") return check_condition_G(f, opt.reward, opt.g);
  if (name == "H" || name == "I") {
    auto r = check_condition_G(f, opt.reward, opt.g);
    r.condition = name;
    r.verdict = r.sub_verdicts.at(name);
    return r;
  }
  throw ConfigError("unknown condition '" + name + "' (known: A,B,C,D1,D2,G,H,I)");
}

}  // namespace fret
