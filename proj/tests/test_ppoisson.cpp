#include "plap/errors.hpp"
#include "plap/femspace.hpp"
#include "plap/ppoisson.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace plap;

namespace
{

constexpr double pi = std::numbers::pi;

std::shared_ptr<Mesh const> unit_square(std::size_t n,
                                        DiagonalPattern pattern = DiagonalPattern::fixed)
{
  return std::make_shared<Mesh const>(build_rect_mesh(n, n, 1., 1., pattern));
}

std::shared_ptr<Mesh const> unit_interval(std::size_t n)
{
  return std::make_shared<Mesh const>(build_interval_mesh(n, 1.));
}

PPoissonConfig config(double p)
{
  PPoissonConfig cfg;
  cfg.p = p;
  return cfg;
}

FeFunction random_admissible(std::shared_ptr<Mesh const> mesh,
                             std::mt19937_64 &rng, double scale = 1.)
{
  std::uniform_real_distribution<double> unit(-scale, scale);
  FeFunction u(mesh);
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!mesh->is_boundary(i))
      u.values()[i] = unit(rng);
  return u;
}

FeFunction random_nodal(std::shared_ptr<Mesh const> mesh, std::mt19937_64 &rng)
{
  std::uniform_real_distribution<double> unit(-1., 1.);
  FeFunction u(mesh);
  for (std::size_t i = 0; i < u.size(); ++i)
    u.values()[i] = unit(rng);
  return u;
}

FeFunction bubble(std::shared_ptr<Mesh const> mesh)
{
  return FeFunction::interpolate(mesh, [&](Point const &x) {
    return mesh->dimension() == 1 ? x[0] * (1. - x[0])
                                  : x[0] * (1. - x[0]) * x[1] * (1. - x[1]);
  });
}

} // namespace

TEST_CASE("torsion problem on the interval matches the closed form")
{
  std::size_t const n = 200;
  auto const mesh = unit_interval(n);
  DofMap const dofs(*mesh);
  LoadVector const load =
      load_from_callable(*mesh, dofs, [](Point const &) { return 1.; });
  for (double p : {1.5, 2., 3., 4.})
  {
    CAPTURE(p);
    auto const [v, report] = solve_ppoisson(mesh, load, config(p));
    REQUIRE(report.converged);
    CHECK(v.is_dirichlet_admissible());
    double err = 0.;
    for (std::size_t i = 0; i < mesh->n_nodes(); ++i)
      err = std::max(err, std::abs(v[i] - test::torsion_1d(mesh->node(i)[0], p)));
    CHECK(err <= 2. / n);
  }
}

TEST_CASE("jacobian matches central differences of the residual")
{
  std::mt19937_64 rng(21);
  for (auto const &mesh : {unit_interval(30), unit_square(6),
                           unit_square(5, DiagonalPattern::union_jack)})
  {
    DofMap const dofs(*mesh);
    for (double p : {1.3, 1.7, 2., 2.5, 4.})
      for (double eps : {1e-2, 1e-5})
      {
        CAPTURE(p);
        CAPTURE(eps);
        FeFunction const v = random_admissible(mesh, rng);
        FeFunction const d = random_admissible(mesh, rng);
        LoadVector const load = Eigen::VectorXd::Random(dofs.n_dofs());
        SparseMatrix const J = assemble_jacobian(v, dofs, p, eps);
        CHECK((SparseMatrix(J.transpose()) - J).norm() <= 1e-12 * J.norm());

        double const h = 1e-6;
        Eigen::VectorXd const fd =
            (assemble_residual(v + h * d, dofs, load, p, eps) -
             assemble_residual(v - h * d, dofs, load, p, eps)) /
            (2. * h);
        Eigen::VectorXd const jd = J * to_interior(d, dofs);
        CHECK((fd - jd).norm() <= 1e-6 * jd.norm());
      }
  }
}

TEST_CASE("linear and zero-gradient jacobians")
{
  std::mt19937_64 rng(5);
  auto const mesh = unit_square(7);
  DofMap const dofs(*mesh);
  SparseMatrix const K = assemble_stiffness(*mesh, dofs);
  FeFunction const v = random_admissible(mesh, rng);
  CHECK((assemble_jacobian(v, dofs, 2., 1e-3) - K).norm() <= 1e-13 * K.norm());
  CHECK((assemble_jacobian(v, dofs, 2., 0.) - K).norm() <= 1e-13 * K.norm());

  FeFunction const zero(mesh);
  for (double p : {1.5, 3.})
  {
    double const eps = 1e-2;
    SparseMatrix const expected = std::pow(eps, p - 2.) * K;
    CHECK((assemble_jacobian(zero, dofs, p, eps) - expected).norm() <=
          1e-12 * expected.norm());
  }

  // At p = 2 the residual is K v - load.
  LoadVector const load = Eigen::VectorXd::Random(dofs.n_dofs());
  Eigen::VectorXd const r = assemble_residual(v, dofs, load, 2., 0.);
  CHECK((r - (K * to_interior(v, dofs) - load)).norm() <= 1e-12 * r.norm());
  CHECK(assemble_residual(zero, dofs, Eigen::VectorXd::Zero(dofs.n_dofs()), 3.,
                          0.)
            .norm() == 0.);
}

TEST_CASE("manufactured solution at p = 2 converges at second order")
{
  std::vector<double> errors;
  for (std::size_t n : {8, 16, 32})
  {
    auto const mesh = unit_square(n);
    DofMap const dofs(*mesh);
    auto const exact = [](Point const &x) {
      return std::sin(pi * x[0]) * std::sin(pi * x[1]);
    };
    LoadVector const load = load_from_callable(
        *mesh, dofs, [&](Point const &x) { return 2. * pi * pi * exact(x); });
    auto const [v, report] = solve_ppoisson(mesh, load, config(2.));
    REQUIRE(report.converged);
    errors.push_back(lp_norm(v - FeFunction::interpolate(mesh, exact), 2.));
  }
  CHECK(errors[2] <= 1e-2);
  CHECK(errors[0] / errors[1] >= 3.5);
  CHECK(errors[1] / errors[2] >= 3.5);
}

TEST_CASE("zero load gives the zero solution")
{
  auto const mesh = unit_square(8);
  DofMap const dofs(*mesh);
  for (double p : {1.5, 3.})
  {
    auto const [v, report] =
        solve_ppoisson(mesh, Eigen::VectorXd::Zero(dofs.n_dofs()), config(p));
    CHECK(report.converged);
    CHECK(v.max_abs() == 0.);
    FeFunction const g = bubble(mesh);
    auto const [w, rep] = solve_signed_power_rhs(mesh, 0., g, 0., g, config(p));
    CHECK(w.max_abs() == 0.);
  }
}

TEST_CASE("sign of the solution follows the sign of the load")
{
  auto const mesh = unit_square(16);
  FeFunction const g = bubble(mesh);
  FeFunction const zero(mesh);
  for (double p : {1.5, 2., 3., 4.})
  {
    CAPTURE(p);
    auto const [pos, r1] = solve_signed_power_rhs(mesh, 1., g, 0., zero, config(p));
    REQUIRE(r1.converged);
    for (std::size_t i = 0; i < mesh->n_nodes(); ++i)
      if (!mesh->is_boundary(i))
        CHECK(pos[i] > 0.);

    // Nonpositive load: the positive part of the solution vanishes.
    auto const [neg, r2] = solve_signed_power_rhs(mesh, 0., zero, 1., g, config(p));
    REQUIRE(r2.converged);
    CHECK(lp_norm(positive_part(neg), p) <= 1e-8 * lp_norm(neg, p));
    CHECK(neg.values().maxCoeff() <= 1e-8 * neg.max_abs());
  }
}

TEST_CASE("continuous dependence on the load for p >= 2")
{
  std::mt19937_64 rng(99);
  auto const mesh = unit_interval(200);
  DofMap const dofs(*mesh);
  int checked = 0;
  for (int pair = 0; pair < 50; ++pair)
  {
    double const p = 2. + 0.05 * pair;
    PPoissonSolver solver(mesh, config(p));
    FeFunction const f1 = random_nodal(mesh, rng);
    FeFunction f2 = f1;
    FeFunction const step = random_nodal(mesh, rng);
    f2 += std::pow(10., -(pair % 4)) * step;
    auto const [v1, r1] = solver.solve(load_from_function(f1, dofs));
    auto const [v2, r2] = solver.solve(load_from_function(f2, dofs));
    REQUIRE(r1.converged);
    REQUIRE(r2.converged);
    double const q = p / (p - 1.);
    double const lhs = grad_lp_norm(v1 - v2, p);
    double const rhs = test::continuous_dependence_bound(
        p, test::lambda1_interval(p), lp_norm(f1 - f2, q));
    CAPTURE(p);
    CHECK(lhs <= rhs);
    ++checked;
  }
  CHECK(checked == 50);
}

TEST_CASE("homogeneity of the solution map")
{
  std::mt19937_64 rng(8);
  auto const mesh = unit_square(12);
  FeFunction const u = random_admissible(mesh, rng);
  FeFunction const up = positive_part(u);
  FeFunction const um = negative_part(u);
  for (double p : {1.5, 2., 3.})
  {
    auto const [v, r] = solve_signed_power_rhs(mesh, 0.3, up, 0.7, um, config(p));
    REQUIRE(r.converged);
    for (double c : {0.5, 5., 100.})
    {
      auto const [w, rc] =
          solve_signed_power_rhs(mesh, 0.3 * c, up, 0.7 * c, um, config(p));
      REQUIRE(rc.converged);
      FeFunction const expected = std::pow(c, 1. / (p - 1.)) * v;
      CAPTURE(p);
      CAPTURE(c);
      CHECK((w - expected).max_abs() <= 1e-8 * expected.max_abs());
    }
  }
}

TEST_CASE("homogeneity at small scales is limited by the regularization")
{
  std::mt19937_64 rng(8);
  auto const mesh = unit_square(12);
  FeFunction const u = random_admissible(mesh, rng);
  FeFunction const up = positive_part(u);
  FeFunction const um = negative_part(u);
  // eps is absolute: shrinking the solution by 1e4 at p = 1.5 makes the
  // final eps = 1e-10 visible.  A smaller final eps restores the scaling.
  PPoissonConfig fine = config(1.5);
  fine.eps_schedule = geometric_eps_schedule(1e-2, 1e-14, 9);
  auto const [v, r] = solve_signed_power_rhs(mesh, 0.3, up, 0.7, um, fine);
  REQUIRE(r.converged);
  for (double c : {0.1, 0.01})
  {
    auto const [w, rc] =
        solve_signed_power_rhs(mesh, 0.3 * c, up, 0.7 * c, um, fine);
    REQUIRE(rc.converged);
    FeFunction const expected = c * c * v;
    CHECK((w - expected).max_abs() <= 1e-8 * expected.max_abs());
  }
}

TEST_CASE("different starting points reach the same solution")
{
  std::mt19937_64 rng(13);
  auto const mesh = unit_square(16);
  DofMap const dofs(*mesh);
  for (double p : {1.5, 2., 3., 4.})
  {
    CAPTURE(p);
    PPoissonConfig const cfg = config(p);
    FeFunction const f = random_nodal(mesh, rng);
    LoadVector const load = load_from_function(f, dofs);
    auto const [a, ra] = solve_ppoisson(mesh, load, cfg);
    auto const [b, rb] =
        solve_ppoisson(mesh, load, cfg, random_admissible(mesh, rng, 0.1));
    auto const [c, rc] = solve_ppoisson(mesh, load, cfg, -1. * a);
    REQUIRE(ra.converged);
    REQUIRE(rb.converged);
    REQUIRE(rc.converged);
    double const scale = grad_lp_norm(a, p);
    CHECK(grad_lp_norm(a - b, p) <= 10. * cfg.newton_tol * scale);
    CHECK(grad_lp_norm(a - c, p) <= 10. * cfg.newton_tol * scale);
  }
}

TEST_CASE("damped newton never increases the energy")
{
  std::mt19937_64 rng(17);
  auto const mesh = unit_square(16);
  DofMap const dofs(*mesh);
  for (double p : {1.2, 1.5, 3., 6.})
  {
    CAPTURE(p);
    LoadVector const load = load_from_function(random_nodal(mesh, rng), dofs);
    auto const [v, report] = solve_ppoisson(mesh, load, config(p));
    CHECK(report.converged);
    REQUIRE(report.energy_trace.size() >= 2);
    for (std::size_t i = 1; i < report.energy_trace.size(); ++i)
      CHECK(report.energy_trace[i] <=
            report.energy_trace[i - 1] +
                1e-13 * std::abs(report.energy_trace[i - 1]));
    CHECK(report.final_residual_norm <=
          std::max(config(p).newton_tol * report.initial_residual_norm,
                   report.roundoff_floor));
  }
}

TEST_CASE("inverse step does not increase the rayleigh quotient")
{
  std::mt19937_64 rng(31);
  auto const mesh = unit_square(16);
  DofMap const dofs(*mesh);
  for (double p : {1.6, 2., 2.5, 3.5})
  {
    for (int trial = 0; trial < 3; ++trial)
    {
      FeFunction const g = random_admissible(mesh, rng);
      auto const [v, report] =
          solve_ppoisson(mesh, signed_power_load(g, p, dofs), config(p));
      REQUIRE(report.converged);
      double const rg = *rayleigh(g, p).total;
      CHECK(*rayleigh(v, p).total <= rg * (1. + 1e-4));
    }
  }
}

TEST_CASE("config validation and degenerate meshes")
{
  PPoissonConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.p = 1.;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.newton_tol = 0.;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.eps_schedule = {1e-2, 1e-2};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.eps_schedule = {1e-2, -1.};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.damping.shrink = 1.;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);

  auto const schedule = geometric_eps_schedule(1e-2, 1e-10, 9);
  REQUIRE(schedule.size() == 9);
  CHECK(schedule.front() == doctest::Approx(1e-2));
  CHECK(schedule.back() == doctest::Approx(1e-10));
  for (std::size_t i = 1; i < schedule.size(); ++i)
    CHECK(schedule[i] == doctest::Approx(schedule[i - 1] * 0.1));

  auto const single = unit_square(1);
  CHECK_THROWS_AS(PPoissonSolver(single, PPoissonConfig{}), DegenerateMesh);
}
