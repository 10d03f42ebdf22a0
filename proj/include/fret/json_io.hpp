#pragma once

// JSON (de)serialization of matrices, sojourn laws and cumulants. Numeric
// fields may be numbers or expression strings in `eps` (see expr.hpp).

#include <json.hpp>

#include <string>
#include <vector>

#include "fret/chain.hpp"
#include "fret/dist.hpp"
#include "fret/error.hpp"
#include "fret/expr.hpp"
#include "fret/levy.hpp"

namespace fret::json_io {

using nlohmann::json;

/// Number or expression evaluated at eps.
inline double number(const json& j, double eps, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return Expression(j.get<std::string>())(eps);
  throw ConfigError(where + ": expected a number or an expression string");
}

inline const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  return j.at(key);
}

inline std::vector<double> number_list(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a nonempty array of numbers");
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) throw ConfigError(where + ": expected numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

/// {"m": 3, "rows": [[...], ...]}; "m" is optional but checked when present.
inline StochasticMatrix matrix_from_json(const json& j) {
  const auto& rows = field(j, "rows", "matrix");
  if (!rows.is_array() || rows.empty()) throw ConfigError("matrix: 'rows' must be a nonempty array");
  const auto m = static_cast<Eigen::Index>(rows.size());
  if (j.contains("m") && j.at("m").get<Eigen::Index>() != m) {
    throw ConfigError("matrix: 'm' disagrees with the number of rows");
  }
  Eigen::MatrixXd p(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m) {
      throw ConfigError("matrix: row " + std::to_string(i) + " must have " + std::to_string(m) +
                        " entries");
    }
    for (Eigen::Index k = 0; k < m; ++k) {
      p(i, k) = number(row[static_cast<std::size_t>(k)], 0.0, "matrix entry");
    }
  }
  return StochasticMatrix(std::move(p));
}

inline SojournDistribution dist_from_json(const json& j, double eps) {
  const std::string type = field(j, "type", "sojourn").get<std::string>();
  auto num = [&](const char* key) { return number(field(j, key, "sojourn " + type), eps, type); };
  if (type == "deterministic") return Deterministic{num("value")};
  if (type == "exponential") return Exponential{num("mean")};
  if (type == "atom") return Atom{num("value"), num("prob")};
  if (type == "gamma") return Gamma{num("shape"), num("scale")};
  if (type == "pareto") return Pareto{num("alpha"), num("scale")};
  if (type == "mixture") {
    const auto& comps = field(j, "components", "mixture");
    const auto& weights = field(j, "weights", "mixture");
    if (!comps.is_array() || !weights.is_array() || comps.size() != weights.size()) {
      throw ConfigError("mixture: 'weights' and 'components' must be arrays of equal length");
    }
    std::vector<double> w;
    std::vector<SojournDistribution> c;
    for (std::size_t k = 0; k < comps.size(); ++k) {
      w.push_back(number(weights[k], eps, "mixture weight"));
      c.push_back(dist_from_json(comps[k], eps));
    }
    return Mixture{std::move(w), std::move(c)};
  }
  throw ConfigError("sojourn: unknown type '" + type +
                    "' (deterministic, exponential, atom, gamma, pareto, mixture)");
}

inline json dist_to_json(const SojournDistribution& d) {
  return std::visit(detail::Overloaded{
                        [](const Deterministic& x) { return json{{"type", "deterministic"}, {"value", x.value}}; },
                        [](const Exponential& x) { return json{{"type", "exponential"}, {"mean", x.mean}}; },
                        [](const Atom& x) { return json{{"type", "atom"}, {"value", x.value}, {"prob", x.prob}}; },
                        [](const Gamma& x) { return json{{"type", "gamma"}, {"shape", x.shape}, {"scale", x.scale}}; },
                        [](const Pareto& x) { return json{{"type", "pareto"}, {"alpha", x.alpha}, {"scale", x.scale}}; },
                        [](const Mixture& x) {
                          json comps = json::array();
                          for (const auto& c : x.components) comps.push_back(dist_to_json(c));
                          return json{{"type", "mixture"}, {"weights", x.weights}, {"components", comps}};
                        }},
                    d.variant());
}

/// {"drift": g, "atoms": [{"size": v, "weight": w}, ...]} or
/// {"stable": {"alpha": a, "scale": c[, "v_lo", "v_hi", "bins"]}}.
inline Cumulant cumulant_from_json(const json& j) {
  if (j.contains("stable")) {
    const auto& s = j.at("stable");
    return discretize_stable(field(s, "alpha", "stable").get<double>(),
                             field(s, "scale", "stable").get<double>(), s.value("v_lo", 1e-4),
                             s.value("v_hi", 1e4), s.value("bins", 160));
  }
  const double g = j.value("drift", 0.0);
  std::vector<LevyAtom> atoms;
  if (j.contains("atoms")) {
    for (const auto& a : j.at("atoms")) {
      atoms.push_back({field(a, "size", "atom").get<double>(), field(a, "weight", "atom").get<double>()});
    }
  }
  return Cumulant(g, std::move(atoms));
}

inline json cumulant_to_json(const Cumulant& c) {
  json atoms = json::array();
  for (const auto& a : c.atoms()) atoms.push_back({{"size", a.size}, {"weight", a.weight}});
  return json{{"drift", c.drift()}, {"atoms", atoms}};
}

}  // namespace fret::json_io
