// fret: command-line front end for the first-rare-event toolkit.
//
// Exit codes: 0 ok; 1 verdict problem (worsening trend, failed invariant, or
// a checker verdict that contradicts the scenario's registered expectation);
// 2 configuration or usage error; 3 verifier refused (preconditions failed).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fret/fret.hpp"

namespace {

using nlohmann::json;

constexpr int kExitVerdict = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRefused = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fret::ConfigError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw fret::ConfigError("cannot write '" + path + "'");
  out << text;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Builtin name, or a path to a model JSON file.
fret::Scenario load_scenario(const std::string& arg) {
  const bool file = arg.ends_with(".json") || std::filesystem::exists(arg);
  if (!file) return fret::builtin_scenario(arg);
  return fret::resolve_scenario(read_file(arg), true);
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int cmd_stationary(const std::string& path, const std::string& out) {
  const auto p = fret::json_io::matrix_from_json(json::parse(read_file(path)));
  const auto pi = fret::stationary_distribution(p);
  emit(out, json{{"m", p.m()}, {"probs", pi.to_std()}}.dump(2) + "\n");
  return 0;
}

int cmd_check(const std::string& target, const std::string& conditions, const std::string& out,
              const std::string& csv) {
  const auto sc = load_scenario(target);
  const auto opts = sc.condition_options();
  const auto names = split_names(conditions);
  std::vector<fret::ConditionReport> reports;
  for (const auto& name : names) reports.push_back(fret::run_condition(name, sc.family, opts));

  int status = 0;
  bool any_fail = false;
  for (const auto& r : reports) {
    std::cerr << sc.name << " " << r.condition << ": " << fret::to_string(r.verdict);
    const auto it = sc.expected.find(r.condition);
    if (it != sc.expected.end()) {
      const bool match = it->second == r.verdict;
      std::cerr << " (expected " << fret::to_string(it->second) << (match ? ", ok" : ", MISMATCH") << ")";
      if (!match) status = kExitVerdict;
    }
    std::cerr << "\n";
    any_fail = any_fail || r.verdict == fret::Verdict::fail;
  }
  // Models without registered expectations: any failing checker is an error.
  if (sc.expected.empty() && any_fail) status = kExitVerdict;

  json doc{{"scenario", sc.name}, {"reports", reports}};
  emit(out, doc.dump(2) + "\n");
  if (!csv.empty()) write_file(csv, fret::condition_csv(reports));
  return status;
}

int cmd_simulate(const std::string& target, double eps, std::int64_t n, std::uint64_t seed,
                 const std::vector<double>& t_grid, const std::string& out) {
  const auto sc = load_scenario(target);
  if (!(eps > 0.0)) throw fret::ConfigError("--eps must be positive");
  if (n < 1) throw fret::ConfigError("-n must be >= 1");
  const auto k = sc.family.at(eps);
  const auto q = sc.family.initial_for(k.m());
  const auto max_steps = fret::default_max_steps(k);
  const fret::RngStream root = fret::RngStream(seed, 0).substream(0x51).substream(0);
  const auto draws = fret::parallel::map_indices<fret::FirstRareEventSample>(
      static_cast<std::size_t>(n), [&](std::size_t r) {
        fret::RngStream rng = root.substream(r);
        return fret::sample_first_rare_event(k, q, t_grid, max_steps, rng);
      });
  std::ostringstream csv;
  csv << "replicate,nu,xi,last_sojourn";
  for (double t : t_grid) csv << ",xi_t_" << num(t);
  csv << "\n";
  for (std::size_t r = 0; r < draws.size(); ++r) {
    csv << r << ',' << draws[r].nu << ',' << num(draws[r].xi) << ',' << num(draws[r].last_sojourn);
    for (double x : draws[r].xi_grid) csv << ',' << num(x);
    csv << "\n";
  }
  emit(out, csv.str());
  return 0;
}

struct VerifyArgs {
  std::string theorem;
  std::string scenario;
  std::vector<double> eps_grid;
  std::vector<double> s_grid;
  std::vector<double> t_grid;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool n_given = false;
  std::string out;
  std::string csv;
  bool force = false;
};

int cmd_verify(const VerifyArgs& a) {
  const auto sc = load_scenario(a.scenario);
  fret::VerifyOptions o;
  o.eps_grid = a.eps_grid.empty() ? sc.verify_eps : a.eps_grid;
  o.s_grid = a.s_grid.empty() ? sc.s_grid : a.s_grid;
  o.t_grid = a.t_grid.empty() ? sc.t_grid : a.t_grid;
  o.n_samples = a.n_given ? a.n : sc.n_samples;
  o.seed = a.seed_given ? a.seed : sc.seed;
  o.force = a.force;
  o.conditions = sc.condition_options();
  const bool needs_target = a.theorem != "lemma7" && a.theorem != "lemma8";
  if (needs_target && !sc.target) {
    throw fret::ConfigError("scenario '" + sc.name + "' has no target cumulant");
  }
  const auto target = sc.target ? *sc.target : fret::Cumulant::pure_drift(1.0);
  const auto rep = fret::run_verifier(a.theorem, sc.family, target, sc.reward, o);
  auto doc = fret::to_json(rep);
  if (sc.target_approximate) doc["target_approximate"] = true;
  emit(a.out, doc.dump(2) + "\n");
  if (!a.csv.empty()) write_file(a.csv, fret::report_csv(rep));
  std::cerr << a.theorem << " " << sc.name << ": trend " << fret::to_string(rep.trend);
  if (rep.watermark) std::cerr << " [" << *rep.watermark << "]";
  for (const auto& f : rep.invariant_failures) std::cerr << "\n  invariant failed: " << f;
  std::cerr << "\n";
  return rep.ok() ? 0 : kExitVerdict;
}

int cmd_scenario_list() {
  for (const auto& name : fret::builtin_scenario_names()) {
    std::cout << name << "\t" << fret::builtin_scenario(name).description << "\n";
  }
  return 0;
}

int cmd_scenario_show(const std::string& name) {
  std::cout << fret::scenario_to_json(load_scenario(name)).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"First-rare-event times of perturbed semi-Markov processes"};
  app.require_subcommand(1);

  std::string path;
  std::string out;
  std::string csv;

  auto* stationary = app.add_subcommand("stationary", "Stationary distribution of a matrix JSON");
  stationary->add_option("matrix", path, "matrix.json with {\"m\", \"rows\"}")->required();
  stationary->add_option("--out", out, "output file (default stdout)");

  std::string check_target;
  std::string conditions = "A,B,C,D1,D2,G";
  auto* check = app.add_subcommand("check", "Run condition checkers on a scenario or model");
  check->add_option("scenario", check_target, "builtin scenario name or model.json")->required();
  check->add_option("--conditions", conditions, "comma-separated subset of A,B,C,D1,D2,G,H,I");
  check->add_option("--out", out, "report JSON (default stdout)");
  check->add_option("--csv", csv, "per-epsilon diagnostics CSV");

  std::string sim_target;
  double eps = 0.0;
  std::int64_t sim_n = 0;
  std::uint64_t sim_seed = 0;
  std::vector<double> sim_t;
  auto* simulate = app.add_subcommand("simulate", "Sample (nu, xi, xi(t)) replicates");
  simulate->add_option("scenario", sim_target, "builtin scenario name or model.json")->required();
  simulate->add_option("--eps", eps, "epsilon")->required();
  simulate->add_option("-n", sim_n, "replicates")->required();
  auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "master seed (default: scenario seed)");
  simulate->add_option("--t", sim_t, "time grid for xi(t)")->delimiter(',');
  simulate->add_option("--out", out, "samples CSV (default stdout)");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Verify a limit theorem on a scenario");
  verify->add_option("theorem", va.theorem, "theorem1|theorem2|lemma7|lemma8|lemma9")
      ->required()
      ->check(CLI::IsMember(fret::verifier_names()));
  verify->add_option("scenario", va.scenario, "builtin scenario name or model.json")->required();
  verify->add_option("--eps-grid", va.eps_grid, "strictly decreasing epsilon grid")->delimiter(',');
  verify->add_option("--s", va.s_grid, "Laplace arguments")->delimiter(',');
  verify->add_option("--t", va.t_grid, "time grid")->delimiter(',');
  auto* n_opt = verify->add_option("-n", va.n, "Monte Carlo replicates per epsilon");
  auto* seed_opt = verify->add_option("--seed", va.seed, "master seed");
  verify->add_option("--out", va.out, "report JSON (default stdout)");
  verify->add_option("--csv", va.csv, "flat CSV of report rows");
  verify->add_flag("--force", va.force, "run despite failing preconditions (watermarked)");

  auto* scenario = app.add_subcommand("scenario", "Inspect the scenario registry");
  scenario->require_subcommand(1);
  scenario->add_subcommand("list", "List builtin scenarios");
  std::string show_name;
  auto* show = scenario->add_subcommand("show", "Print a scenario definition");
  show->add_option("name", show_name, "builtin scenario name or model.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*stationary) return cmd_stationary(path, out);
    if (*check) return cmd_check(check_target, conditions, out, csv);
    if (*simulate) {
      const auto seed = *sim_seed_opt ? sim_seed : load_scenario(sim_target).seed;
      return cmd_simulate(sim_target, eps, sim_n, seed, sim_t, out);
    }
    if (*verify) {
      va.n_given = static_cast<bool>(*n_opt);
      va.seed_given = static_cast<bool>(*seed_opt);
      return cmd_verify(va);
    }
    if (*scenario) {
      if (scenario->got_subcommand("list")) return cmd_scenario_list();
      return cmd_scenario_show(show_name);
    }
  } catch (const fret::PreconditionFailed& e) {
    std::cerr << "refused: " << e.what() << " (use --force to run anyway)\n";
    return kExitRefused;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fret::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
