// Acceptance criteria 1-12, one PASS/FAIL line each.  Exit status 1 when any
// criterion fails.

#include "plap/driver.hpp"
#include "plap/errors.hpp"
#include "plap/oracle.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

using namespace plap;

namespace
{

constexpr double pi = std::numbers::pi;
double const lambda2_square = 5. * pi * pi;

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(char const *format, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double rel(double value, double ref) { return std::abs(value - ref) / ref; }

std::shared_ptr<Mesh const> unit_square(std::size_t n)
{
  return std::make_shared<Mesh const>(build_rect_mesh(n, n, 1., 1.));
}

struct Run
{
  std::string name;
  RunTrace trace;
  double seconds = 0.;
};

Run table_run(std::string name, GuessKind guess, double p,
              BetaMap beta = BetaMap::linear())
{
  auto const mesh = unit_square(64);
  RunConfig cfg;
  cfg.p = p;
  cfg.beta = beta;
  cfg.max_iters = 5;
  auto const t0 = std::chrono::steady_clock::now();
  FeFunction const u0 = initial_guess(guess, mesh);
  RunTrace trace = run_algorithm_a(mesh, u0, cfg);
  std::chrono::duration<double> const dt = std::chrono::steady_clock::now() - t0;
  return {std::move(name), std::move(trace), dt.count()};
}

double last_R(Run const &run) { return *run.trace.last().rayleigh.total; }

// Worst violations of monotonicity and balance over k >= 1.
std::pair<double, double> worst_invariants(RunTrace const &trace)
{
  double mono = -std::numeric_limits<double>::infinity();
  double balance = 0.;
  for (std::size_t k = 1; k < trace.states.size(); ++k)
  {
    RayleighReport const &rq = trace.states[k].rayleigh;
    if (!rq.sign_changing())
      return {std::numeric_limits<double>::infinity(),
              std::numeric_limits<double>::infinity()};
    balance = std::max(balance, std::abs(*rq.plus - *rq.minus) / *rq.total);
    if (k >= 2)
      mono = std::max(mono, *rq.total /
                                    *trace.states[k - 1].rayleigh.total -
                                1.);
  }
  return {mono, balance};
}

double norm_gap(RunTrace const &trace)
{
  double const pred = std::pow(trace.alpha_star / trace.R_star_estimate,
                               1. / (trace.p - 1.));
  return rel(trace.last().lp_norm, pred);
}

} // namespace

int main()
{
  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria;

  // Runs shared by criteria 1-7.
  std::vector<Run> table;
  auto const table_runs = [&]() -> std::vector<Run> const & {
    if (table.empty())
    {
      table.push_back(table_run("p=2 midline", GuessKind::midline, 2.));
      table.push_back(table_run("p=2 diagonal", GuessKind::diagonal, 2.));
      table.push_back(table_run("p=3 midline", GuessKind::midline, 3.));
      table.push_back(table_run("p=3 diagonal", GuessKind::diagonal, 3.));
      table.push_back(table_run("p=1.7 midline", GuessKind::midline, 1.7));
    }
    return table;
  };

  criteria.emplace_back("1 p=2 midline within 2% of 5pi^2, < 60 s", [&] {
    Run const &r = table_runs()[0];
    double const R = last_R(r);
    bool const ok = !r.trace.failed() && r.trace.last().k == 5 &&
                    rel(R, lambda2_square) <= 0.02 && r.seconds < 60.;
    return Outcome{ok, fmt("R[u5] = %.4f, rel dev %.5f (reference 49.46), %.2f s",
                           R, rel(R, lambda2_square), r.seconds)};
  });

  criteria.emplace_back("2 p=2 diagonal within 2% of 5pi^2", [&] {
    Run const &r = table_runs()[1];
    double const R = last_R(r);
    bool const ok = !r.trace.failed() && r.trace.last().k == 5 &&
                    rel(R, lambda2_square) <= 0.02;
    return Outcome{ok, fmt("R[u5] = %.4f, rel dev %.5f (reference 49.43)", R,
                           rel(R, lambda2_square))};
  });

  criteria.emplace_back("3 p=3 midline / diagonal within 5% of 272.74 / 257.71", [&] {
    double const a = last_R(table_runs()[2]);
    double const b = last_R(table_runs()[3]);
    bool const ok = rel(a, 272.74) <= 0.05 && rel(b, 257.71) <= 0.05 &&
                    table_runs()[2].trace.last().k == 5 &&
                    table_runs()[3].trace.last().k == 5;
    return Outcome{ok, fmt("midline %.3f (dev %.5f), diagonal %.3f (dev %.5f)",
                           a, rel(a, 272.74), b, rel(b, 257.71))};
  });

  criteria.emplace_back("4 p=1.7 midline within 5% of 28.61", [&] {
    Run const &r = table_runs()[4];
    double const R = last_R(r);
    bool const ok = r.trace.last().k == 5 && rel(R, 28.61) <= 0.05;
    return Outcome{ok, fmt("R[u5] = %.4f, rel dev %.5f", R, rel(R, 28.61))};
  });

  criteria.emplace_back("5 monotone R (1e-4) and balance (1e-6) in runs 1-4", [&] {
    double mono = -1.;
    double balance = 0.;
    int violations = 0;
    for (Run const &r : table_runs())
    {
      auto const [m, b] = worst_invariants(r.trace);
      mono = std::max(mono, m);
      balance = std::max(balance, b);
      violations += static_cast<int>(r.trace.invariant_violations.size());
    }
    bool const ok = mono <= 1e-4 && balance <= 1e-6 && violations == 0;
    return Outcome{ok, fmt("max R_{k+1}/R_k - 1 = %.3e, max |R+ - R-|/R = %.3e, "
                           "logged violations %d",
                           mono, balance, violations)};
  });

  // Power-beta runs: a symmetric table run and a generic start iterated to
  // convergence.
  std::vector<Run> power;
  auto const power_runs = [&]() -> std::vector<Run> const & {
    if (power.empty())
    {
      power.push_back(table_run("p=3 diagonal power", GuessKind::diagonal, 3.,
                                BetaMap::power(3.)));
      auto const mesh = unit_square(32);
      FeFunction const u0 = FeFunction::interpolate(mesh, [](Point const &x) {
        return x[0] * x[1] * (1. - x[0]) * (1. - x[1]) *
               (x[0] + 0.4 * x[1] * x[1] - 0.62);
      });
      for (double p : {2., 2.5})
      {
        RunConfig cfg;
        cfg.p = p;
        cfg.beta = BetaMap::power(p);
        cfg.max_iters = 60;
        power.push_back({fmt("p=%g generic power", p),
                         run_algorithm_a(mesh, u0, cfg), 0.});
      }
    }
    return power;
  };

  criteria.emplace_back("6 alpha_last within 1e-3 of the beta fixed point", [&] {
    double worst = 0.;
    std::string detail;
    for (auto const *runs : {&table_runs(), &power_runs()})
      for (Run const &r : *runs)
      {
        double const gap = std::abs(*r.trace.last().alpha - r.trace.alpha_star);
        worst = std::max(worst, gap);
        detail += fmt("%s %.2e; ", r.name.c_str(), gap);
      }
    return Outcome{worst <= 1e-3, fmt("worst %.3e (%s)", worst, detail.c_str())};
  });

  criteria.emplace_back("7 ||u_last||_p within 1% of (alpha*/R*)^(1/(p-1))", [&] {
    double worst = 0.;
    std::string detail;
    for (auto const *runs : {&table_runs(), &power_runs()})
      for (Run const &r : *runs)
      {
        double const gap = norm_gap(r.trace);
        worst = std::max(worst, gap);
        detail += fmt("%s %.2e; ", r.name.c_str(), gap);
      }
    return Outcome{worst <= 0.01, fmt("worst rel gap %.3e (%s)", worst,
                                      detail.c_str())};
  });

  criteria.emplace_back("8 interval n=2000 reaches lambda_2 within 1%; formula vs "
                        "shooting 1e-6",
                        [&] {
    auto const mesh = std::make_shared<Mesh const>(build_interval_mesh(2000, 1.));
    FeFunction const u0 = FeFunction::interpolate(
        mesh, [](Point const &x) { return std::sin(2. * pi * x[0]); });
    bool ok = true;
    std::string detail;
    for (double p : {1.5, 2., 3.})
    {
      RunConfig cfg;
      cfg.p = p;
      cfg.max_iters = 50;
      RunTrace const trace = run_algorithm_a(mesh, u0, cfg);
      double const exact = lambda_k_1d(2, EigenOracle1D(p));
      double const dev = trace.failed() ? 1. : rel(trace.R_star_estimate, exact);
      ok = ok && dev <= 0.01;
      detail += fmt("p=%g dev %.2e; ", p, dev);
    }
    double worst_shoot = 0.;
    for (double p : {1.5, 2., 3., 4.})
      for (int k : {1, 2, 3})
        worst_shoot = std::max(
            worst_shoot, rel(shoot_1d(k, p), lambda_k_1d(k, EigenOracle1D(p))));
    ok = ok && worst_shoot <= 1e-6;
    detail += fmt("shooting worst %.2e", worst_shoot);
    return Outcome{ok, detail};
  });

  criteria.emplace_back("9 discrete eigenfunction is a fixed point, ||u1||_2 = "
                        "alpha*/mu +- 1%",
                        [&] {
    auto const mesh = unit_square(64);
    DiscreteEigenpairs const eig = discrete_eigenpairs_p2(mesh, 3);
    double const mu = eig.values[1];
    RunConfig cfg;
    cfg.p = 2.;
    cfg.max_iters = 3;
    cfg.rq_stop_tol = 0.;
    cfg.diff_stop_tol = 0.;
    RunTrace const trace = run_algorithm_a(mesh, eig.vectors[1], cfg);
    double change = 0.;
    for (std::size_t k = 1; k < trace.states.size(); ++k)
      change = std::max(change, rel(*trace.states[k].rayleigh.total,
                                    *trace.states[k - 1].rayleigh.total));
    double const pred = trace.alpha_star / mu;
    double const norm_dev = rel(trace.states.at(1).lp_norm, pred);
    bool const ok = trace.states.size() == 4 && change <= 1e-6 && norm_dev <= 0.01;
    return Outcome{ok, fmt("mu = %.4f, max rel R change %.2e, ||u1||_2 dev %.2e",
                           mu, change, norm_dev)};
  });

  criteria.emplace_back("10 torsion <= 2/n, jacobian vs differences 1e-6, "
                        "continuous dependence on 50 pairs",
                        [&] {
    std::size_t const n = 200;
    auto const mesh = std::make_shared<Mesh const>(build_interval_mesh(n, 1.));
    DofMap const dofs(*mesh);
    LoadVector const ones =
        load_from_callable(*mesh, dofs, [](Point const &) { return 1.; });
    double torsion = 0.;
    for (double p : {1.5, 2., 3., 4.})
    {
      PPoissonConfig cfg;
      cfg.p = p;
      auto const [v, report] = solve_ppoisson(mesh, ones, cfg);
      if (!report.converged)
        torsion = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < mesh->n_nodes(); ++i)
        torsion = std::max(
            torsion, std::abs(v[i] - test::torsion_1d(mesh->node(i)[0], p)));
    }

    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(-1., 1.);
    auto const random_fn = [&](std::shared_ptr<Mesh const> const &m,
                               bool admissible) {
      FeFunction u(m);
      for (std::size_t i = 0; i < u.size(); ++i)
        if (!admissible || !m->is_boundary(i))
          u.values()[i] = unit(rng);
      return u;
    };

    double jac = 0.;
    for (auto const &m : {mesh, unit_square(8)})
    {
      DofMap const d(*m);
      for (double p : {1.5, 2., 3., 4.})
      {
        FeFunction const v = random_fn(m, true);
        FeFunction const dir = random_fn(m, true);
        LoadVector const load = Eigen::VectorXd::Zero(d.n_dofs());
        double const h = 1e-6;
        Eigen::VectorXd const fd =
            (assemble_residual(v + h * dir, d, load, p, 1e-3) -
             assemble_residual(v - h * dir, d, load, p, 1e-3)) /
            (2. * h);
        Eigen::VectorXd const jd =
            assemble_jacobian(v, d, p, 1e-3) * to_interior(dir, d);
        jac = std::max(jac, (fd - jd).norm() / jd.norm());
      }
    }

    double worst_ratio = 0.;
    for (int pair = 0; pair < 50; ++pair)
    {
      double const p = 2. + 0.04 * pair;
      PPoissonConfig cfg;
      cfg.p = p;
      PPoissonSolver solver(mesh, cfg);
      FeFunction const f1 = random_fn(mesh, false);
      FeFunction const f2 = random_fn(mesh, false);
      auto const [v1, r1] = solver.solve(load_from_function(f1, dofs));
      auto const [v2, r2] = solver.solve(load_from_function(f2, dofs));
      double const bound = test::continuous_dependence_bound(
          p, test::lambda1_interval(p), lp_norm(f1 - f2, p / (p - 1.)));
      double const ratio = grad_lp_norm(v1 - v2, p) / bound;
      worst_ratio = std::max(
          worst_ratio, r1.converged && r2.converged
                           ? ratio
                           : std::numeric_limits<double>::infinity());
    }
    bool const ok = torsion <= 2. / n && jac <= 1e-6 && worst_ratio <= 1.;
    return Outcome{ok, fmt("torsion max err %.2e (limit %.2e), jacobian rel %.2e, "
                           "worst lhs/bound %.3f",
                           torsion, 2. / n, jac, worst_ratio)};
  });

  criteria.emplace_back("11 counterexample x1=1, x2=1.5, x3=1.1667, no limit "
                        "over 7501 terms",
                        [&] {
    auto const x = counterexample_sequence(7501);
    int exits_above = 0;
    int exits_below = 0;
    bool outside = false;
    for (double v : x)
    {
      bool const out = v < 0. || v > 1.;
      if (out && !outside)
        (v > 1. ? exits_above : exits_below) += 1;
      outside = out;
    }
    bool const ok = x[1] == 1. && x[2] == 1.5 && std::abs(x[3] - 7. / 6.) <= 1e-12 &&
                    exits_above >= 2 && exits_below >= 2;
    return Outcome{ok, fmt("x1 = %g, x2 = %g, x3 = %.4f, exits above %d, below %d",
                           x[1], x[2], x[3], exits_above, exits_below)};
  });

  criteria.emplace_back("12 circle guess cascade: plateau near 98.70, then "
                        "within 2% of 49.35",
                        [&] {
    auto const mesh = unit_square(64);
    RunConfig cfg;
    cfg.p = 2.;
    cfg.max_iters = 150;
    cfg.rq_stop_tol = 0.;
    cfg.diff_stop_tol = 0.;
    cfg.symmetry_breaking_noise = 1e-9;
    RunTrace const trace =
        run_algorithm_a(mesh, initial_guess(GuessKind::circle, mesh), cfg);
    double const lambda5 = 10. * pi * pi;
    // A plateau: at least three consecutive iterates within 3% of lambda_5.
    int run = 0;
    int plateau_end = -1;
    int plateau_len = 0;
    for (std::size_t k = 1; k < trace.states.size(); ++k)
    {
      double const R = *trace.states[k].rayleigh.total;
      run = rel(R, lambda5) <= 0.03 ? run + 1 : 0;
      if (run >= 3)
      {
        plateau_end = static_cast<int>(k);
        plateau_len = run;
      }
    }
    int reached = -1;
    for (std::size_t k = std::max(plateau_end, 0); k < trace.states.size(); ++k)
      if (rel(*trace.states[k].rayleigh.total, lambda2_square) <= 0.02)
      {
        reached = static_cast<int>(k);
        break;
      }
    double const final_R = *trace.last().rayleigh.total;
    bool const ok = !trace.failed() && plateau_end > 0 && reached > plateau_end &&
                    rel(final_R, lambda2_square) <= 0.02;
    return Outcome{ok, fmt("plateau of %d iterates ending at k=%d, within 2%% of "
                           "5pi^2 from k=%d, final R = %.4f after %d iterations",
                           plateau_len, plateau_end, reached, final_R,
                           trace.last().k)};
  });

  int failures = 0;
  for (auto const &[name, check] : criteria)
  {
    Outcome out;
    try
    {
      out = check();
    }
    catch (std::exception const &e)
    {
      out = {false, std::string("exception: ") + e.what()};
    }
    failures += out.pass ? 0 : 1;
    std::printf("%s  [%s] %s\n", out.pass ? "PASS" : "FAIL", name.c_str(),
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
