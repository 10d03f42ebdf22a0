// Acceptance suite: one pass/fail line per criterion. Every criterion also
// returns a JSON report; criterion 12 reruns 1..11 with a different worker
// count and requires byte-identical reports.

#include <json.hpp>
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "fret/fret.hpp"

using namespace fret;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  json report = json::object();

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

struct Criterion {
  int id;
  const char* title;
  double limit_seconds;
  std::function<Outcome()> run;
};

constexpr std::uint64_t kSeed = 42;

RngStream criterion_stream(std::uint64_t id) { return RngStream(kSeed, 0).substream(0xacc).substream(id); }

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// --- 1 ---------------------------------------------------------------------

Eigen::VectorXd power_oracle(const Eigen::MatrixXd& p) {
  const auto m = p.rows();
  const Eigen::MatrixXd lazy = 0.5 * (p + Eigen::MatrixXd::Identity(m, m));
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Constant(m, 1.0 / static_cast<double>(m));
  for (int it = 0; it < 200000; ++it) {
    Eigen::RowVectorXd next = x * lazy;
    next /= next.sum();
    const double change = (next - x).cwiseAbs().maxCoeff();
    x = next;
    if (change == 0.0) break;
  }
  return x.transpose();
}

Outcome stationary_solver() {
  Outcome o;
  RngStream rng = criterion_stream(1);
  double worst_residual = 0.0;
  double worst_gap = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd p(5, 5);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) p(i, j) = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
      p(i, (i + 1) % 5) += 0.05 + rng.uniform();  // ring keeps it ergodic
      p.row(i) /= p.row(i).sum();
    }
    const auto pi = stationary_distribution(StochasticMatrix(p));
    const Eigen::RowVectorXd residual = pi.vector().transpose() * p - pi.vector().transpose();
    worst_residual = std::max(worst_residual, residual.cwiseAbs().maxCoeff());
    worst_gap = std::max(worst_gap, (pi.vector() - power_oracle(p)).cwiseAbs().maxCoeff());
  }
  o.require(worst_residual < 1e-12, "residual " + fmt(worst_residual));
  o.require(worst_gap < 1e-10, "oracle gap " + fmt(worst_gap));
  o.report = {{"max_residual", worst_residual}, {"max_oracle_gap", worst_gap}};
  o.detail = o.pass ? "max residual " + fmt(worst_residual) + ", max oracle gap " + fmt(worst_gap) : o.detail;
  return o;
}

// --- 2 ---------------------------------------------------------------------

Outcome drift_exact_collapse() {
  Outcome o;
  const auto f = builtin_scenario("drift").family;
  double worst = 0.0;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const auto k = f.at(eps);
    const auto q = f.initial_for(k.m());
    for (double s : {0.5, 1.0, 2.0}) {
      const double x = exact_laplace_xi(k, q, s);
      worst = std::max(worst, std::abs(x - 1.0 / (1.0 + s)));
      o.report["rows"].push_back({{"eps", eps}, {"s", s}, {"exact", x}});
    }
  }
  o.require(worst <= 1e-12, "max error " + fmt(worst));
  if (o.pass) o.detail = "max |exact - 1/(1+s)| = " + fmt(worst);
  return o;
}

// --- 3 ---------------------------------------------------------------------

std::vector<double> xi_samples(const EpsilonFamily& f, double eps, std::size_t n, const RngStream& root) {
  const auto k = f.at(eps);
  const auto q = f.initial_for(k.m());
  const auto max_steps = default_max_steps(k);
  const std::vector<double> no_grid;
  return parallel::map_indices<double>(n, [&](std::size_t r) {
    RngStream rng = root.substream(r);
    return sample_first_rare_event(k, q, no_grid, max_steps, rng).xi;
  });
}

Outcome drift_monte_carlo() {
  Outcome o;
  const auto x = xi_samples(builtin_scenario("drift").family, 1e-3, 100000, criterion_stream(3));
  const double d = ks_statistic(x, exponential_cdf);
  o.require(d < 0.006, "KS " + fmt(d));
  o.report = {{"ks", d}, {"n", x.size()}};
  if (o.pass) o.detail = "KS = " + fmt(d) + " < 0.006";
  return o;
}

// --- 4 ---------------------------------------------------------------------

Outcome geometric_theorem1() {
  Outcome o;
  const auto f = builtin_scenario("geometric").family;
  double worst_z = 0.0;
  for (double eps : {1e-2, 1e-3}) {
    const double tol = eps == 1e-2 ? 0.02 : 0.002;
    const auto k = f.at(eps);
    const auto q = f.initial_for(k.m());
    const auto x = xi_samples(f, eps, 100000, criterion_stream(4).substream(eps == 1e-2 ? 0 : 1));
    for (double s : {0.5, 1.0, 2.0}) {
      const double exact = exact_laplace_xi(k, q, s);
      const double limit = 1.0 / (2.0 - std::exp(-s));
      const auto emp = empirical_laplace(x, s);
      const double z = std::abs(emp.value - exact) / emp.std_error;
      worst_z = std::max(worst_z, z);
      o.require(std::abs(exact - limit) <= tol, "eps " + fmt(eps) + " s " + fmt(s) + " exact gap");
      o.require(z <= 3.0, "eps " + fmt(eps) + " s " + fmt(s) + " z " + fmt(z));
      o.report["rows"].push_back(
          {{"eps", eps}, {"s", s}, {"exact", exact}, {"empirical", emp.value}, {"stderr", emp.std_error}});
    }
  }
  if (o.pass) o.detail = "exact within tolerance, max |z| = " + fmt(worst_z);
  return o;
}

// --- 5 ---------------------------------------------------------------------

Outcome lemma7_survival() {
  Outcome o;
  const std::vector<double> ts{0.5, 1.0, 2.0};
  const std::vector<double> grid{1e-2, 1e-3, 1e-4};
  for (const char* name : {"drift", "two_state"}) {
    const auto f = builtin_scenario(name).family;
    std::vector<double> dev;
    for (double eps : grid) {
      const auto k = f.at(eps);
      const auto q = f.initial_for(k.m());
      const double v = averaged_rare_prob(k).v_eps;
      double worst = 0.0;
      for (double t : ts) {
        const double exact = survival_nu_exact(k, q, floor_steps(t, v));
        worst = std::max(worst, std::abs(exact - std::exp(-t)));
        o.report[name]["rows"].push_back({{"eps", eps}, {"t", t}, {"exact", exact}});
      }
      dev.push_back(worst);
      if (eps == 1e-3) o.require(worst <= 0.01, std::string(name) + " gap " + fmt(worst));
    }
    const Trend trend = trend_check(dev, std::vector<double>(dev.size(), kExactNoise));
    o.report[name]["trend"] = to_string(trend);
    o.require(trend == Trend::improving, std::string(name) + " trend " + to_string(trend));
  }
  if (o.pass) o.detail = "gaps <= 0.01 at eps=1e-3, trend improving on drift and two_state";
  return o;
}

// --- 6 ---------------------------------------------------------------------

Outcome geometric_theorem2() {
  Outcome o;
  const auto f = builtin_scenario("geometric").family;
  const double eps = 1e-3;
  const auto k = f.at(eps);
  const auto q = f.initial_for(k.m());
  const auto n = floor_steps(1.0, averaged_rare_prob(k).v_eps);
  const double exact = exact_laplace_kappa(k, q, 1.0, n);
  const double limit = std::exp(-(1.0 - std::exp(-1.0)));
  const std::vector<std::int64_t> cps{n};
  const RngStream root = criterion_stream(6);
  const auto sums = parallel::map_indices<double>(100000, [&](std::size_t r) {
    RngStream rng = root.substream(r);
    return run_prefix(k, q, cps, rng).sums[0];
  });
  const auto emp = empirical_laplace(sums, 1.0);
  const double z = std::abs(emp.value - exact) / emp.std_error;
  o.require(std::abs(exact - limit) <= 0.01, "exact gap " + fmt(std::abs(exact - limit)));
  o.require(z <= 3.0, "z " + fmt(z));
  o.report = {{"n_steps", n}, {"exact", exact}, {"empirical", emp.value}, {"stderr", emp.std_error}};
  if (o.pass) o.detail = "|exact - limit| = " + fmt(std::abs(exact - limit)) + ", |z| = " + fmt(z);
  return o;
}

// --- 7 ---------------------------------------------------------------------

Outcome lemma9_product_form() {
  Outcome o;
  const auto f = builtin_scenario("drift").family;
  const auto k = f.at(1e-3);
  const auto q = f.initial_for(k.m());
  const auto n = floor_steps(1.0, averaged_rare_prob(k).v_eps);
  const double joint = joint_survival_transform(k, q, 1.0, n);
  const double limit = std::exp(-1.0 * (1.0 + 1.0));
  const double s0 = joint_survival_transform(k, q, kSZero, n);
  const double survival = survival_nu_exact(k, q, n);
  o.require(std::abs(joint - limit) <= 0.01, "product gap " + fmt(std::abs(joint - limit)));
  o.require(std::abs(s0 - survival) <= 1e-9, "s0 gap " + fmt(std::abs(s0 - survival)));
  o.report = {{"joint", joint}, {"s0", s0}, {"survival", survival}};
  if (o.pass) {
    o.detail = "product gap " + fmt(std::abs(joint - limit)) + ", s0 gap " + fmt(std::abs(s0 - survival));
  }
  return o;
}

// --- 8 ---------------------------------------------------------------------

Outcome path_decomposition() {
  Outcome o;
  const auto f = builtin_scenario("two_state").family;
  const auto k = f.at(1e-3);
  const auto q = f.initial_for(k.m());
  const double v = averaged_rare_prob(k).v_eps;
  std::vector<double> ts;
  for (int t = 1; t <= 14; ++t) ts.push_back(t);  // floor(14 v) < 10^4 steps
  const RngStream root = criterion_stream(8);
  const auto gaps = parallel::map_indices<double>(10000, [&](std::size_t r) {
    RngStream rng = root.substream(r);
    const auto path = simulate_path(k, q, 10000, rng);
    const auto c = hitting_decomposition_check(path, k.m(), v, ts, 1e-9);
    return c.pass ? c.max_discrepancy : HUGE_VAL;
  });
  double worst = 0.0;
  for (double g : gaps) worst = std::max(worst, g);
  o.require(worst <= 1e-9, "max discrepancy " + fmt(worst));
  o.report = {{"paths", gaps.size()}, {"max_discrepancy", worst}};
  if (o.pass) o.detail = "10^4 paths, max discrepancy " + fmt(worst);
  return o;
}

// --- 9 ---------------------------------------------------------------------

Outcome lemma8_functional() {
  Outcome o;
  const auto sc = builtin_scenario("two_state");
  VerifyOptions opt;
  opt.eps_grid = {1e-3};
  opt.s_grid = {1.0};
  opt.n_samples = 100000;
  opt.seed = kSeed;
  opt.conditions = sc.condition_options();
  const auto rep = verify_lemma8(sc.family, rare_prob_reward(), opt);
  double ks = HUGE_VAL;
  for (const auto& row : rep.rows) {
    if (row.quantity == "ks_exponential") ks = row.empirical->value;
  }
  o.require(ks < 0.01, "KS " + fmt(ks));
  o.report = to_json(rep);
  if (o.pass) o.detail = "KS = " + fmt(ks) + " < 0.01";
  return o;
}

// --- 10 --------------------------------------------------------------------

Outcome limit_samplers() {
  Outcome o;
  const std::vector<std::pair<const char*, Cumulant>> cumulants{
      {"drift", Cumulant::pure_drift(1.0)}, {"geometric", Cumulant(0.0, {{1.0, 1.0}})}};
  const std::vector<double> one{1.0};
  const std::size_t n = 100000;
  double worst_z = 0.0;
  std::uint64_t tag = 0;
  for (const auto& [name, c] : cumulants) {
    const RngStream theta_root = criterion_stream(10).substream(tag++);
    const RngStream xi_root = criterion_stream(10).substream(tag++);
    const auto theta = parallel::map_indices<double>(n, [&](std::size_t r) {
      RngStream rng = theta_root.substream(r);
      return sample_subordinator_grid(c, one, rng)[0];
    });
    const auto xi = parallel::map_indices<double>(n, [&](std::size_t r) {
      RngStream rng = xi_root.substream(r);
      return sample_xi0(c, one, rng).values[0];
    });
    auto within = [&](const EstimateWithError& e, double target, const std::string& what) {
      // Degenerate laws (pure drift theta) have zero stderr: round-off only.
      const bool ok = std::abs(e.value - target) <= 3.0 * e.std_error + 1e-12;
      if (e.std_error > 1e-12) worst_z = std::max(worst_z, std::abs(e.value - target) / e.std_error);
      o.require(ok, std::string(name) + " " + what);
      o.report[name][what] = {{"empirical", e.value}, {"stderr", e.std_error}, {"target", target}};
    };
    for (double s : {0.5, 1.0, 2.0}) {
      within(empirical_laplace(theta, s), std::exp(-cumulant_eval(c, s)), "theta(s=" + fmt(s) + ")");
      within(empirical_laplace(xi, s), limit_laplace_xi(c, s), "xi0(s=" + fmt(s) + ")");
    }
    if (std::string(name) == "geometric") {
      for (int kk = 0; kk <= 5; ++kk) {
        std::vector<double> hit(n);
        for (std::size_t r = 0; r < n; ++r) hit[r] = xi[r] == kk ? 1.0 : 0.0;
        within(mean_with_error(hit), std::pow(2.0, -(kk + 1)), "P(xi0=" + std::to_string(kk) + ")");
      }
    }
  }
  if (o.pass) o.detail = "all transforms and point masses within 3 stderr, max |z| = " + fmt(worst_z);
  return o;
}

// --- 11 --------------------------------------------------------------------

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  CliRun r;
  const std::string cmd = std::string(FRET_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

Outcome condition_fixtures() {
  Outcome o;
  const std::vector<std::pair<const char*, std::vector<std::pair<const char*, const char*>>>> fixtures{
      {"drift", {{"A", "pass"}, {"B", "pass"}, {"C", "pass"}, {"D1", "pass"}, {"D2", "pass"}}},
      {"geometric", {{"A", "pass"}, {"B", "pass"}, {"C", "pass"}, {"D1", "pass"}, {"D2", "pass"}}},
      {"two_state", {{"A", "pass"}, {"B", "pass"}, {"C", "pass"}, {"D1", "pass"}, {"D2", "pass"}}},
      {"no_decay_A", {{"A", "fail"}}},
      {"vanishing_coupling_B", {{"B", "fail"}}},
      {"fat_flag_C", {{"C", "fail"}}},
      {"unscaled_D", {{"D1", "fail"}}}};
  for (const auto& [name, want] : fixtures) {
    const auto r = run_cli(std::string("check ") + name);
    o.require(r.code == 0, std::string(name) + " exit " + std::to_string(r.code));
    json doc;
    try {
      doc = json::parse(r.out);
    } catch (const json::exception&) {
      o.require(false, std::string(name) + " unparsable output");
      continue;
    }
    for (const auto& [cond, verdict] : want) {
      std::string got = "missing";
      for (const auto& rep : doc["reports"]) {
        if (rep["condition"] == cond) got = rep["verdict"].get<std::string>();
      }
      o.require(got == verdict, std::string(name) + " " + cond + " " + got);
    }
    o.report[name] = {{"exit", r.code}, {"output", doc}};
  }
  const auto d1 = run_cli("check unscaled_D --conditions D1");
  o.require(d1.code == 0, "unscaled_D --conditions D1 exit " + std::to_string(d1.code));
  o.report["unscaled_D_D1_only"] = {{"exit", d1.code}};
  if (o.pass) o.detail = "7 fixtures give their registered verdicts, CLI exit 0";
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "stationary solver vs power oracle", 1.0, stationary_solver},
      {2, "exact Theorem 1 collapse on drift", 1.0, drift_exact_collapse},
      {3, "Monte Carlo Theorem 1 on drift (KS)", 60.0, drift_monte_carlo},
      {4, "Theorem 1 on geometric (exact + MC)", 120.0, geometric_theorem1},
      {5, "Lemma 7 survival and trend", 60.0, lemma7_survival},
      {6, "Theorem 2 on geometric", 120.0, geometric_theorem2},
      {7, "Lemma 9 product form", 60.0, lemma9_product_form},
      {8, "hitting-time path decomposition", 60.0, path_decomposition},
      {9, "Lemma 8 normalized functional (KS)", 60.0, lemma8_functional},
      {10, "subordinator and xi0 samplers", 60.0, limit_samplers},
      {11, "condition-checker fixtures via CLI", 60.0, condition_fixtures}};

  auto run_all = [&](std::size_t workers, bool print) {
    parallel::set_worker_count(workers);
    setenv("FRET_THREADS", std::to_string(workers).c_str(), 1);
    std::vector<std::string> dumps;
    bool all = true;
    for (const auto& c : criteria) {
      const auto start = std::chrono::steady_clock::now();
      Outcome out;
      try {
        out = c.run();
      } catch (const std::exception& e) {
        out.pass = false;
        out.detail = std::string("exception: ") + e.what();
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (secs >= c.limit_seconds) out.require(false, "runtime " + fmt(secs) + " s over limit");
      all = all && out.pass;
      dumps.push_back(out.report.dump());
      if (print) {
        std::printf("[%s] criterion %d: %s -- %s (%.2f s, limit %g s)\n", out.pass ? "PASS" : "FAIL", c.id,
                    c.title, out.detail.c_str(), secs, c.limit_seconds);
        std::fflush(stdout);
      }
    }
    return std::make_pair(all, dumps);
  };

  const auto [all_pass, first] = run_all(1, true);
  const auto start = std::chrono::steady_clock::now();
  const auto second = run_all(3, false).second;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string differing;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i] != second[i]) differing += (differing.empty() ? "" : ",") + std::to_string(criteria[i].id);
  }
  const bool same = differing.empty();
  std::printf("[%s] criterion 12: determinism across worker counts (1 vs 3) -- %s (%.2f s)\n",
              same ? "PASS" : "FAIL",
              same ? "reports of criteria 1-11 byte-identical" : ("differs: " + differing).c_str(), secs);
  parallel::set_worker_count(0);
  return all_pass && same ? 0 : 1;
}
