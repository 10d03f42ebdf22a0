#pragma once

// Built-in scenario registry and JSON model loading.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fret/conditions.hpp"
#include "fret/error.hpp"
#include "fret/json_io.hpp"
#include "fret/levy.hpp"
#include "fret/smp.hpp"

namespace fret {

struct Scenario {
  std::string name;
  std::string description;
  EpsilonFamily family;                 ///< eps_grid here is the condition-check grid
  std::optional<Cumulant> target;
  nlohmann::json target_spec;           ///< compact description of the target for display
  bool target_approximate = false;
  RewardFn reward = rare_prob_reward();
  std::vector<double> verify_eps{1e-2, 1e-3};
  std::vector<double> s_grid{0.5, 1.0, 2.0};
  std::vector<double> t_grid{0.5, 1.0, 2.0};
  std::vector<double> u_grid{0.25, 0.5, 1.0, 2.0};
  std::int64_t n_samples = 100000;
  std::uint64_t seed = 42;
  std::map<std::string, Verdict> expected;  ///< registered checker verdicts

  ConditionSuiteOptions condition_options() const {
    ConditionSuiteOptions o;
    o.d1.s_grid = s_grid;
    o.d1.target = target;
    o.d2.u_grid = u_grid;
    o.reward = reward;
    return o;
  }
};

inline nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json expected = nlohmann::json::object();
  for (const auto& [k, v] : s.expected) expected[k] = to_string(v);
  return {{"name", s.name},
          {"description", s.description},
          {"eps_grid", s.family.eps_grid},
          {"verify_eps_grid", s.verify_eps},
          {"s_grid", s.s_grid},
          {"t_grid", s.t_grid},
          {"u_grid", s.u_grid},
          {"n_samples", s.n_samples},
          {"seed", s.seed},
          {"target", s.target_spec},
          {"target_approximate", s.target_approximate},
          {"expected", expected}};
}

namespace scenarios {

inline const std::vector<double> kCheckGrid{1e-1, 1e-2, 1e-3, 1e-4};

inline std::map<std::string, Verdict> all_pass() {
  return {{"A", Verdict::pass},  {"B", Verdict::pass},  {"C", Verdict::pass},
          {"D1", Verdict::pass}, {"D2", Verdict::pass}, {"G", Verdict::pass}};
}

inline MarkovRenewalKernel single_state(double p, const SojournDistribution& no_flag,
                                        const SojournDistribution& flag) {
  return MarkovRenewalKernel(1, {1.0 - p, p}, {no_flag, flag});
}

inline Scenario base(std::string name, std::string description) {
  Scenario s;
  s.name = name;
  s.description = std::move(description);
  s.family.label = std::move(name);
  s.family.eps_grid = kCheckGrid;
  return s;
}

/// m=1, flag prob eps, Exponential(mean eps) sojourns: xi_eps is exactly Exp(1).
inline Scenario drift() {
  auto s = base("drift", "m=1, flag prob eps, sojourn Exponential(mean eps); xi_eps ~ Exp(1) exactly; A(s)=s");
  s.family.builder = [](double eps) {
    const SojournDistribution d = Exponential{eps};
    return single_state(eps, d, d);
  };
  s.target = Cumulant::pure_drift(1.0);
  s.target_spec = {{"drift", 1.0}, {"atoms", nlohmann::json::array()}};
  s.expected = all_pass();
  return s;
}

/// m=1, flag prob eps, sojourn 1 w.p. eps else 0: xi0 geometric.
inline Scenario geometric() {
  auto s = base("geometric", "m=1, flag prob eps, sojourn Atom(1, eps); A(s)=1-exp(-s); xi0 geometric");
  s.family.builder = [](double eps) {
    const SojournDistribution d = Atom{1.0, eps};
    return single_state(eps, d, d);
  };
  s.target = Cumulant(0.0, {{1.0, 1.0}});
  s.target_spec = {{"drift", 0.0}, {"atoms", {{{"size", 1.0}, {"weight", 1.0}}}}};
  s.expected = all_pass();
  return s;
}

/// Two states, P=[[.5,.5],[.7,.3]], p=(eps, 2 eps), pi=(7/12, 5/12),
/// p_eps = 17/12 eps. State 0 sojourns Exponential(mean a p_eps), state 1
/// sojourns Atom(b, q p_eps) with a=12/7, b=1, q=12/5, so the drift and the
/// jump part of A(s) = s + (1 - exp(-s)) each carry weight 1.
inline Scenario two_state() {
  auto s = base("two_state",
                "P=[[.5,.5],[.7,.3]], p=(eps,2eps); state 0 Exponential(mean 12/7 p_eps), state 1 "
                "Atom(1, 12/5 p_eps); A(s)=s+1-exp(-s)");
  s.family.builder = [](double eps) {
    const StochasticMatrix p{{0.5, 0.5}, {0.7, 0.3}};
    const double p_eps = 17.0 / 12.0 * eps;
    const std::vector<double> rare{eps, 2.0 * eps};
    const SojournDistribution s0 = Exponential{12.0 / 7.0 * p_eps};
    const SojournDistribution s1 = Atom{1.0, 12.0 / 5.0 * p_eps};
    return independent_flag_kernel(p, rare, [&](int i, int, int) { return i == 0 ? s0 : s1; });
  };
  s.target = Cumulant(1.0, {{1.0, 1.0}});
  s.target_spec = {{"drift", 1.0}, {"atoms", {{{"size", 1.0}, {"weight", 1.0}}}}};
  s.expected = all_pass();
  return s;
}

/// m=1, flag prob eps, Lomax(alpha=1/2, scale eps^2) sojourns, i.e. scaled by
/// v_eps^{-1/alpha}; target Gamma(1/2) sqrt(s), atom-discretized.
inline Scenario pareto_stable() {
  auto s = base("pareto_stable",
                "m=1, flag prob eps, sojourn Pareto(alpha=0.5, scale eps^2); A(s)=Gamma(0.5) s^0.5 "
                "(approximate: atom-discretized stable measure)");
  s.family.builder = [](double eps) {
    const SojournDistribution d = Pareto{0.5, eps * eps};
    return single_state(eps, d, d);
  };
  s.target = discretize_stable(0.5, 1.0);
  s.target_spec = {{"stable", {{"alpha", 0.5}, {"scale", 1.0}, {"v_lo", 1e-4}, {"v_hi", 1e4}, {"bins", 160}}}};
  s.target_approximate = true;
  s.expected = all_pass();
  return s;
}

/// Flag probability stuck at 0.3: condition A fails.
inline Scenario no_decay_A() {
  auto s = base("no_decay_A", "m=1, flag prob 0.3 for every eps, sojourn Exponential(mean eps); fails A");
  s.family.builder = [](double eps) {
    const SojournDistribution d = Exponential{eps};
    return single_state(0.3, d, d);
  };
  s.target = Cumulant::pure_drift(1.0);
  s.target_spec = {{"drift", 1.0}, {"atoms", nlohmann::json::array()}};
  s.expected = {{"A", Verdict::fail}};
  return s;
}

/// Cross transitions of probability eps: no ring bounded away from zero.
inline Scenario vanishing_coupling_B() {
  auto s = base("vanishing_coupling_B",
                "P=[[1-eps,eps],[eps,1-eps]], p=(eps,eps), sojourn Exponential(mean eps); fails B");
  s.family.builder = [](double eps) {
    const StochasticMatrix p{{1.0 - eps, eps}, {eps, 1.0 - eps}};
    const std::vector<double> rare{eps, eps};
    const SojournDistribution d = Exponential{eps};
    return independent_flag_kernel(p, rare, [&](int, int, int) { return d; });
  };
  s.target = Cumulant::pure_drift(1.0);
  s.target_spec = {{"drift", 1.0}, {"atoms", nlohmann::json::array()}};
  s.expected = {{"B", Verdict::fail}};
  return s;
}

/// The flagged sojourn is Deterministic(1): the last summand does not vanish.
inline Scenario fat_flag_C() {
  auto s = base("fat_flag_C",
                "m=1, flag prob eps, sojourn Exponential(mean eps) without flag and Deterministic(1) "
                "with flag; fails C");
  s.family.builder = [](double eps) {
    return single_state(eps, Exponential{eps}, Deterministic{1.0});
  };
  s.target = Cumulant(1.0, {{1.0, 1.0}});
  s.target_spec = {{"drift", 1.0}, {"atoms", {{{"size", 1.0}, {"weight", 1.0}}}}};
  s.expected = {{"C", Verdict::fail}};
  return s;
}

/// Unit sojourns without eps-scaling: v_eps (1 - phi_eps(s)) diverges.
inline Scenario unscaled_D() {
  auto s = base("unscaled_D",
                "m=1, flag prob eps, sojourn Deterministic(1) without flag and Deterministic(0) with "
                "flag; fails D1");
  s.family.builder = [](double eps) {
    return single_state(eps, Deterministic{1.0}, Deterministic{0.0});
  };
  s.target = Cumulant(0.0, {{1.0, 1.0}});
  s.target_spec = {{"drift", 0.0}, {"atoms", {{{"size", 1.0}, {"weight", 1.0}}}}};
  s.expected = {{"D1", Verdict::fail}};
  return s;
}

}  // namespace scenarios

inline const std::vector<std::string>& builtin_scenario_names() {
  static const std::vector<std::string> names{"drift",      "geometric",           "two_state",
                                              "pareto_stable", "no_decay_A", "vanishing_coupling_B",
                                              "fat_flag_C", "unscaled_D"};
  return names;
}

inline Scenario builtin_scenario(const std::string& name) {
  if (name == "drift") return scenarios::drift();
  if (name == "geometric") return scenarios::geometric();
  if (name == "two_state") return scenarios::two_state();
  if (name == "pareto_stable") return scenarios::pareto_stable();
  if (name == "no_decay_A") return scenarios::no_decay_A();
  if (name == "vanishing_coupling_B") return scenarios::vanishing_coupling_B();
  if (name == "fat_flag_C") return scenarios::fat_flag_C();
  if (name == "unscaled_D") return scenarios::unscaled_D();
  std::string list;
  for (const auto& n : builtin_scenario_names()) list += (list.empty() ? "" : ", ") + n;
  throw ConfigError("unknown scenario '" + name + "'; available: " + list);
}

// ---------------------------------------------------------------------------
// JSON models

namespace detail {

struct SojournRule {
  int i = -1;  ///< -1 = wildcard
  int j = -1;
  int flag = -1;
  nlohmann::json law;

  int specificity() const { return (i >= 0) + (j >= 0) + (flag >= 0); }
  bool matches(int a, int b, int f) const {
    return (i < 0 || i == a) && (j < 0 || j == b) && (flag < 0 || flag == f);
  }
};

inline SojournRule parse_rule(const std::string& key, const nlohmann::json& law, int m) {
  SojournRule r;
  r.law = law;
  std::vector<std::string> parts;
  std::string cur;
  for (char c : key) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.size() != 3) throw ConfigError("sojourn key '" + key + "' must look like \"i,j,flag\"");
  auto parse = [&](const std::string& p, int limit) {
    if (p == "*") return -1;
    int v = 0;
    try {
      std::size_t used = 0;
      v = std::stoi(p, &used);
      if (used != p.size()) throw std::invalid_argument(p);
    } catch (const std::exception&) {
      throw ConfigError("sojourn key '" + key + "': '" + p + "' is not an index or '*'");
    }
    if (v < 0 || v >= limit) throw ConfigError("sojourn key '" + key + "': index out of range");
    return v;
  };
  r.i = parse(parts[0], m);
  r.j = parse(parts[1], m);
  r.flag = parse(parts[2], 2);
  return r;
}

/// Kernel template: either "P" (m x m) plus "rare" (m) with the flag
/// independent of the transition, or "joint" (m x m x 2). Sojourn laws are
/// given per "i,j,flag" key with "*" wildcards; the most specific key wins.
class KernelTemplate {
 public:
  explicit KernelTemplate(const nlohmann::json& j) : spec_(j) {
    m_ = json_io::field(j, "m", "kernel").get<int>();
    if (m_ < 1) throw ConfigError("kernel: 'm' must be >= 1");
    if (!j.contains("joint") && !(j.contains("P") && j.contains("rare"))) {
      throw ConfigError("kernel: give either 'joint' or both 'P' and 'rare'");
    }
    const auto& soj = json_io::field(j, "sojourn", "kernel");
    if (!soj.is_object()) throw ConfigError("kernel: 'sojourn' must be an object keyed by \"i,j,flag\"");
    for (const auto& [key, law] : soj.items()) rules_.push_back(parse_rule(key, law, m_));
  }

  int m() const noexcept { return m_; }

  MarkovRenewalKernel operator()(double eps) const {
    const auto cells = static_cast<std::size_t>(m_) * m_ * 2;
    std::vector<double> joint(cells);
    std::vector<SojournDistribution> laws(cells);
    auto at = [&](const nlohmann::json& arr, std::size_t idx, const char* what) -> const nlohmann::json& {
      if (!arr.is_array() || idx >= arr.size()) {
        throw ConfigError(std::string("kernel: '") + what + "' has the wrong shape");
      }
      return arr[idx];
    };
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < m_; ++j) {
        for (int f = 0; f < 2; ++f) {
          const std::size_t k = (static_cast<std::size_t>(i) * m_ + j) * 2 + f;
          if (spec_.contains("joint")) {
            joint[k] = json_io::number(at(at(at(spec_["joint"], i, "joint"), j, "joint"), f, "joint"),
                                       eps, "joint");
          } else {
            const double pij = json_io::number(at(at(spec_["P"], i, "P"), j, "P"), eps, "P");
            const double ri = json_io::number(at(spec_["rare"], i, "rare"), eps, "rare");
            joint[k] = pij * (f == 1 ? ri : 1.0 - ri);
          }
          laws[k] = law_for(i, j, f, joint[k] > 0.0, eps);
        }
      }
    }
    return MarkovRenewalKernel(m_, std::move(joint), std::move(laws));
  }

 private:
  SojournDistribution law_for(int i, int j, int f, bool needed, double eps) const {
    const SojournRule* best = nullptr;
    bool tie = false;
    for (const auto& r : rules_) {
      if (!r.matches(i, j, f)) continue;
      if (!best || r.specificity() > best->specificity()) {
        best = &r;
        tie = false;
      } else if (r.specificity() == best->specificity()) {
        tie = true;
      }
    }
    const std::string cell = std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(f);
    if (!best) {
      if (needed) throw ConfigError("kernel: no sojourn law matches cell " + cell);
      return Deterministic{0.0};
    }
    if (tie) throw ConfigError("kernel: ambiguous sojourn keys for cell " + cell);
    return json_io::dist_from_json(best->law, eps);
  }

  nlohmann::json spec_;
  int m_ = 0;
  std::vector<SojournRule> rules_;
};

inline std::vector<double> grid_or(const nlohmann::json& j, const char* key,
                                   const std::vector<double>& fallback) {
  return j.contains(key) ? json_io::number_list(j.at(key), key) : fallback;
}

}  // namespace detail

/// Loads a model file. Either {"builtin": name, ...overrides} or a full
/// definition with "kernel" and a mandatory "seed". Optional fields:
/// name, target, initial, eps_grid, verify_eps_grid, s_grid, t_grid, u_grid,
/// n_samples, expected.
inline Scenario scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model: top level must be an object");
  Scenario s;
  if (j.contains("builtin")) {
    s = builtin_scenario(j.at("builtin").get<std::string>());
  } else {
    if (!j.contains("seed")) throw ConfigError("model: 'seed' is mandatory");
    auto tmpl = std::make_shared<detail::KernelTemplate>(json_io::field(j, "kernel", "model"));
    s.family.builder = [tmpl](double eps) { return (*tmpl)(eps); };
    s.family.eps_grid = scenarios::kCheckGrid;
    s.name = "model";
  }
  try {
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    s.family.label = s.name;
    if (j.contains("description")) s.description = j.at("description").get<std::string>();
    s.family.eps_grid = detail::grid_or(j, "eps_grid", s.family.eps_grid);
    s.verify_eps = detail::grid_or(j, "verify_eps_grid", s.verify_eps);
    s.s_grid = detail::grid_or(j, "s_grid", s.s_grid);
    s.t_grid = detail::grid_or(j, "t_grid", s.t_grid);
    s.u_grid = detail::grid_or(j, "u_grid", s.u_grid);
    if (j.contains("n_samples")) s.n_samples = j.at("n_samples").get<std::int64_t>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("initial")) s.family.initial = json_io::number_list(j.at("initial"), "initial");
    if (j.contains("target")) {
      s.target = json_io::cumulant_from_json(j.at("target"));
      s.target_spec = j.at("target");
      s.target_approximate = j.at("target").contains("stable");
    }
    if (j.contains("expected")) {
      s.expected.clear();
      for (const auto& [k, v] : j.at("expected").items()) {
        s.expected[k] = verdict_from_string(v.get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  try {
    s.family.validate();
    const auto k = s.family.at(s.family.eps_grid.front());
    (void)s.family.initial_for(k.m());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return s;
}

/// Resolves a builtin name or a path-like argument already parsed as JSON.
inline Scenario resolve_scenario(const std::string& name_or_json_text, bool is_json) {
  if (!is_json) return builtin_scenario(name_or_json_text);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(name_or_json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("model: invalid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace fret
