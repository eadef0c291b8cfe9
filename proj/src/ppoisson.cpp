#include "plap/ppoisson.hpp"

#include "plap/errors.hpp"

#include <cmath>
#include <limits>

namespace plap
{

std::vector<double> geometric_eps_schedule(double first, double last,
                                           int levels)
{
  if (levels < 1 || !(first > 0.) || !(last > 0.) || last > first)
    throw InvalidArgument("geometric_eps_schedule: bad arguments");
  if (levels == 1)
    return {last};
  std::vector<double> schedule(levels);
  double const ratio = std::log(last / first) / (levels - 1);
  for (int i = 0; i < levels; ++i)
    schedule[i] = first * std::exp(ratio * i);
  schedule.back() = last;
  return schedule;
}

void PPoissonConfig::validate() const
{
  if (!(p > 1.) || !std::isfinite(p))
    throw ValidationError("p must lie in (1, inf)");
  if (!(newton_tol > 0.))
    throw ValidationError("newton_tol must be positive");
  if (max_newton < 1)
    throw ValidationError("max_newton must be >= 1");
  if (eps_schedule.empty())
    throw ValidationError("eps_schedule must not be empty");
  for (std::size_t i = 0; i < eps_schedule.size(); ++i)
  {
    if (!(eps_schedule[i] > 0.))
      throw ValidationError("eps_schedule entries must be positive");
    if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1]))
      throw ValidationError("eps_schedule must be strictly decreasing");
  }
  if (!(damping.shrink > 0. && damping.shrink < 1.))
    throw ValidationError("damping shrink must lie in (0, 1)");
  if (!(damping.min_step > 0. && damping.min_step < 1.))
    throw ValidationError("damping min_step must lie in (0, 1)");
  if (quad_degree < 1 || quad_degree > 7)
    throw ValidationError("quadrature degree must lie in 1..7");
}

namespace
{

struct ElementGradient
{
  double x = 0.;
  double y = 0.;

  double dot(Point const &g) const { return x * g[0] + y * g[1]; }
  double norm2() const { return x * x + y * y; }
};

ElementGradient gradient_on(Mesh const &mesh, std::size_t e,
                            Eigen::VectorXd const &values)
{
  auto const &el = mesh.element(e);
  auto const &grad = mesh.basis_gradients(e);
  ElementGradient g;
  for (std::size_t a = 0; a < mesh.nodes_per_element(); ++a)
  {
    g.x += grad[a][0] * values[el[a]];
    g.y += grad[a][1] * values[el[a]];
  }
  return g;
}

// w^s for w = |grad v|^2 + eps^2, with the convention 0^s = 0 for the
// unregularized degenerate case.
double power_or_zero(double w, double s)
{
  return w > 0. ? std::pow(w, s) : 0.;
}

template <typename Integrand>
LoadVector assemble_load(Mesh const &mesh, DofMap const &dofs,
                         int quad_degree, Integrand &&integrand)
{
  QuadratureRule const &rule = quadrature(mesh.dimension(), quad_degree);
  std::size_t const nloc = mesh.nodes_per_element();
  LoadVector load = LoadVector::Zero(dofs.n_dofs());
  for (std::size_t e = 0; e < mesh.n_elements(); ++e)
  {
    auto const &el = mesh.element(e);
    double const vol = mesh.element_volume(e);
    std::array<double, 3> local{0., 0., 0.};
    for (std::size_t q = 0; q < rule.size(); ++q)
    {
      double const f = integrand(e, rule.points[q]);
      for (std::size_t a = 0; a < nloc; ++a)
        local[a] += rule.weights[q] * f * rule.points[q][a];
    }
    for (std::size_t a = 0; a < nloc; ++a)
    {
      std::size_t const i = dofs.dof(el[a]);
      if (i != DofMap::npos)
        load[i] += local[a] * vol;
    }
  }
  return load;
}

double interpolate_at(Mesh const &mesh, std::size_t e,
                      std::array<double, 3> const &bary,
                      Eigen::VectorXd const &values)
{
  auto const &el = mesh.element(e);
  double v = 0.;
  for (std::size_t a = 0; a < mesh.nodes_per_element(); ++a)
    v += bary[a] * values[el[a]];
  return v;
}

SparseMatrix assemble_weighted(Mesh const &mesh, DofMap const &dofs,
                               auto &&local_matrix)
{
  std::size_t const nloc = mesh.nodes_per_element();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.n_elements() * nloc * nloc);
  for (std::size_t e = 0; e < mesh.n_elements(); ++e)
  {
    auto const &el = mesh.element(e);
    for (std::size_t a = 0; a < nloc; ++a)
    {
      std::size_t const i = dofs.dof(el[a]);
      if (i == DofMap::npos)
        continue;
      for (std::size_t b = 0; b < nloc; ++b)
      {
        std::size_t const j = dofs.dof(el[b]);
        if (j == DofMap::npos)
          continue;
        triplets.emplace_back(i, j, local_matrix(e, a, b));
      }
    }
  }
  SparseMatrix m(dofs.n_dofs(), dofs.n_dofs());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

} // namespace

Eigen::VectorXd assemble_residual(FeFunction const &v, DofMap const &dofs,
                                  LoadVector const &load, double p,
                                  double eps)
{
  Mesh const &mesh = v.mesh();
  std::size_t const nloc = mesh.nodes_per_element();
  Eigen::VectorXd r = -load;
  for (std::size_t e = 0; e < mesh.n_elements(); ++e)
  {
    auto const g = gradient_on(mesh, e, v.values());
    double const coef =
        power_or_zero(g.norm2() + eps * eps, 0.5 * (p - 2.)) *
        mesh.element_volume(e);
    if (coef == 0.)
      continue;
    auto const &el = mesh.element(e);
    auto const &grad = mesh.basis_gradients(e);
    for (std::size_t a = 0; a < nloc; ++a)
    {
      std::size_t const i = dofs.dof(el[a]);
      if (i != DofMap::npos)
        r[i] += coef * g.dot(grad[a]);
    }
  }
  return r;
}

double residual_roundoff_floor(FeFunction const &v, DofMap const &dofs,
                               LoadVector const &load, double p, double eps)
{
  // First-order bound on the rounding error of assemble_residual: the error
  // of each element gradient, propagated through the flux derivative, plus
  // the error of the flux itself.
  Mesh const &mesh = v.mesh();
  std::size_t const nloc = mesh.nodes_per_element();
  Eigen::VectorXd scale = load.cwiseAbs();
  for (std::size_t e = 0; e < mesh.n_elements(); ++e)
  {
    auto const &el = mesh.element(e);
    auto const &grad = mesh.basis_gradients(e);
    auto const g = gradient_on(mesh, e, v.values());
    double spread = 0.;
    for (std::size_t a = 0; a < nloc; ++a)
      spread += std::hypot(grad[a][0], grad[a][1]) * std::abs(v[el[a]]);
    double const coef =
        power_or_zero(g.norm2() + eps * eps, 0.5 * (p - 2.)) *
        mesh.element_volume(e);
    double const flux =
        coef * (std::sqrt(g.norm2()) + std::max(1., p - 1.) * spread);
    for (std::size_t a = 0; a < nloc; ++a)
    {
      std::size_t const i = dofs.dof(el[a]);
      if (i != DofMap::npos)
        scale[i] += flux * std::hypot(grad[a][0], grad[a][1]);
    }
  }
  return 8. * std::numeric_limits<double>::epsilon() * scale.norm();
}

SparseMatrix assemble_jacobian(FeFunction const &v, DofMap const &dofs,
                               double p, double eps)
{
  Mesh const &mesh = v.mesh();
  std::vector<ElementGradient> grads(mesh.n_elements());
  std::vector<double> coef(mesh.n_elements());
  std::vector<double> rank_one(mesh.n_elements());
  for (std::size_t e = 0; e < mesh.n_elements(); ++e)
  {
    grads[e] = gradient_on(mesh, e, v.values());
    double const w = grads[e].norm2() + eps * eps;
    coef[e] = power_or_zero(w, 0.5 * (p - 2.)) * mesh.element_volume(e);
    rank_one[e] = w > 0. ? coef[e] * (p - 2.) / w : 0.;
  }
  return assemble_weighted(
      mesh, dofs, [&](std::size_t e, std::size_t a, std::size_t b) {
        auto const &grad = mesh.basis_gradients(e);
        double const gab =
            grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1];
        return coef[e] * gab +
               rank_one[e] * grads[e].dot(grad[a]) * grads[e].dot(grad[b]);
      });
}

double regularized_energy(FeFunction const &v, DofMap const &dofs,
                          LoadVector const &load, double p, double eps)
{
  Mesh const &mesh = v.mesh();
  double energy = 0.;
  for (std::size_t e = 0; e < mesh.n_elements(); ++e)
  {
    double const w = gradient_on(mesh, e, v.values()).norm2() + eps * eps;
    energy += power_or_zero(w, 0.5 * p) * mesh.element_volume(e);
  }
  energy /= p;
  for (std::size_t i = 0; i < dofs.n_dofs(); ++i)
    energy -= load[i] * v[dofs.node(i)];
  return energy;
}

SparseMatrix assemble_stiffness(Mesh const &mesh, DofMap const &dofs)
{
  return assemble_weighted(
      mesh, dofs, [&](std::size_t e, std::size_t a, std::size_t b) {
        auto const &grad = mesh.basis_gradients(e);
        return mesh.element_volume(e) *
               (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
      });
}

SparseMatrix assemble_mass(Mesh const &mesh, DofMap const &dofs)
{
  // Exact P1 mass: vol/((d+1)(d+2)) * (1 + delta_ab).
  double const denom = mesh.dimension() == 1 ? 6. : 12.;
  return assemble_weighted(
      mesh, dofs, [&](std::size_t e, std::size_t a, std::size_t b) {
        return mesh.element_volume(e) * (a == b ? 2. : 1.) / denom;
      });
}

LoadVector load_from_callable(Mesh const &mesh, DofMap const &dofs,
                              std::function<double(Point const &)> const &f,
                              int quad_degree)
{
  return assemble_load(
      mesh, dofs, quad_degree,
      [&](std::size_t e, std::array<double, 3> const &bary) {
        auto const &el = mesh.element(e);
        Point x{0., 0.};
        for (std::size_t a = 0; a < mesh.nodes_per_element(); ++a)
        {
          x[0] += bary[a] * mesh.node(el[a])[0];
          x[1] += bary[a] * mesh.node(el[a])[1];
        }
        return f(x);
      });
}

LoadVector load_from_function(FeFunction const &f, DofMap const &dofs,
                              int quad_degree)
{
  Mesh const &mesh = f.mesh();
  return assemble_load(
      mesh, dofs, quad_degree,
      [&](std::size_t e, std::array<double, 3> const &bary) {
        return interpolate_at(mesh, e, bary, f.values());
      });
}

LoadVector signed_power_load(double a, FeFunction const &g_plus, double b,
                             FeFunction const &g_minus, double p,
                             DofMap const &dofs, int quad_degree)
{
  Mesh const &mesh = g_plus.mesh();
  double const q = p - 1.;
  return assemble_load(
      mesh, dofs, quad_degree,
      [&](std::size_t e, std::array<double, 3> const &bary) {
        double const gp = interpolate_at(mesh, e, bary, g_plus.values());
        double const gm = interpolate_at(mesh, e, bary, g_minus.values());
        double f = 0.;
        if (a != 0. && gp > 0.)
          f += a * std::pow(gp, q);
        if (b != 0. && gm > 0.)
          f -= b * std::pow(gm, q);
        return f;
      });
}

LoadVector signed_power_load(FeFunction const &g, double p,
                             DofMap const &dofs, int quad_degree)
{
  Mesh const &mesh = g.mesh();
  double const q = p - 1.;
  return assemble_load(
      mesh, dofs, quad_degree,
      [&](std::size_t e, std::array<double, 3> const &bary) {
        double const gq = interpolate_at(mesh, e, bary, g.values());
        return gq == 0. ? 0. : std::copysign(std::pow(std::abs(gq), q), gq);
      });
}

FeFunction from_interior(std::shared_ptr<Mesh const> mesh, DofMap const &dofs,
                         Eigen::VectorXd const &x)
{
  FeFunction v(std::move(mesh));
  for (std::size_t i = 0; i < dofs.n_dofs(); ++i)
    v.values()[dofs.node(i)] = x[i];
  return v;
}

Eigen::VectorXd to_interior(FeFunction const &v, DofMap const &dofs)
{
  Eigen::VectorXd x(dofs.n_dofs());
  for (std::size_t i = 0; i < dofs.n_dofs(); ++i)
    x[i] = v[dofs.node(i)];
  return x;
}

// PPoissonSolver ---------------------------------------------------------------

PPoissonSolver::PPoissonSolver(std::shared_ptr<Mesh const> mesh,
                               PPoissonConfig cfg)
    : _mesh(std::move(mesh)), _dofs(*_mesh), _cfg(std::move(cfg))
{
  _cfg.validate();
  if (_dofs.n_dofs() == 0)
    throw DegenerateMesh("mesh has no interior nodes");
}

void PPoissonSolver::factorize(SparseMatrix const &jacobian)
{
  if (!_pattern_analyzed)
  {
    _ldlt.analyzePattern(jacobian);
    _pattern_analyzed = true;
  }
  _ldlt.factorize(jacobian);
  if (_ldlt.info() != Eigen::Success)
    throw NonConvergence("Jacobian factorization failed");
}

Eigen::VectorXd PPoissonSolver::cold_start(LoadVector const &load)
{
  // Linear solve, then the scaling t minimizing the unregularized energy
  // along the ray: t^(p-1) ||grad w||_p^p = load . w.
  SparseMatrix const k = assemble_stiffness(*_mesh, _dofs);
  factorize(k);
  _linear_factorized = true;
  Eigen::VectorXd w = _ldlt.solve(load);
  if (_cfg.p != 2.)
    rescale_along_ray(w, load);
  return w;
}

bool PPoissonSolver::rescale_along_ray(Eigen::VectorXd &x,
                                       LoadVector const &load) const
{
  // The unregularized energy t^p/p ||grad x||_p^p - t load.x is minimal at
  // t^(p-1) = load.x / ||grad x||_p^p.
  double const p = _cfg.p;
  double const work = load.dot(x);
  double const gp =
      std::pow(grad_lp_norm(from_interior(_mesh, _dofs, x), p), p);
  if (!(work > 0.) || !(gp > 0.))
    return false;
  x *= std::pow(work / gp, 1. / (p - 1.));
  return true;
}

bool PPoissonSolver::newton(Eigen::VectorXd &x, LoadVector const &load,
                            double eps, double tol, SolveReport &report)
{
  double const p = _cfg.p;
  bool const linear = (p == 2.);
  double const ref = report.initial_residual_norm;
  FeFunction v = from_interior(_mesh, _dofs, x);

  for (int it = 0; it <= _cfg.max_newton; ++it)
  {
    Eigen::VectorXd const r = assemble_residual(v, _dofs, load, p, eps);
    double const rnorm = r.norm();
    report.final_residual_norm = rnorm;
    if (rnorm <= tol * ref)
      return true;
    // Below the rounding level no further progress is possible.
    double const floor = residual_roundoff_floor(v, _dofs, load, p, eps);
    report.roundoff_floor = floor;
    if (rnorm <= floor)
      return true;
    if (it == _cfg.max_newton)
      break;

    if (!linear || !_linear_factorized)
    {
      factorize(assemble_jacobian(v, _dofs, p, eps));
      _linear_factorized = linear;
    }
    Eigen::VectorXd const delta = -_ldlt.solve(r);
    double const slope = r.dot(delta);
    if (!(slope < 0.))
      return false;

    // Backtracking on the regularized energy, with the energy change computed
    // elementwise so that it stays accurate near convergence.
    FeFunction const dv = from_interior(_mesh, _dofs, delta);
    double const load_dot = load.dot(delta);
    std::vector<ElementGradient> gv(_mesh->n_elements());
    std::vector<ElementGradient> gd(_mesh->n_elements());
    for (std::size_t e = 0; e < _mesh->n_elements(); ++e)
    {
      gv[e] = gradient_on(*_mesh, e, v.values());
      gd[e] = gradient_on(*_mesh, e, dv.values());
    }
    auto const energy_change = [&](double t) {
      double change = 0.;
      for (std::size_t e = 0; e < _mesh->n_elements(); ++e)
      {
        double const w0 = gv[e].norm2() + eps * eps;
        double const cross = gv[e].x * gd[e].x + gv[e].y * gd[e].y;
        double const dw = t * (2. * cross + t * gd[e].norm2());
        double term;
        if (w0 > 0.)
          term = std::pow(w0, 0.5 * p) *
                 std::expm1(0.5 * p * std::log1p(dw / w0));
        else
          term = power_or_zero(dw, 0.5 * p);
        change += term * _mesh->element_volume(e);
      }
      return change / p - t * load_dot;
    };

    double t = 1.;
    double change = energy_change(t);
    while (!(change <= _cfg.damping.armijo * t * slope))
    {
      t *= _cfg.damping.shrink;
      if (t < _cfg.damping.min_step)
        return false;
      change = energy_change(t);
    }
    x += t * delta;
    v.values() += t * dv.values();
    ++report.newton_iterations;
    report.energy_trace.push_back(regularized_energy(v, _dofs, load, p, eps));
  }
  return false;
}

std::pair<FeFunction, SolveReport>
PPoissonSolver::solve(LoadVector const &load, FeFunction const *v_init)
{
  if (static_cast<std::size_t>(load.size()) != _dofs.n_dofs())
    throw InvalidArgument("load vector size does not match interior dofs");
  SolveReport report;
  report.initial_residual_norm = load.norm();
  if (report.initial_residual_norm == 0.)
  {
    report.converged = true;
    return {FeFunction(_mesh), report};
  }

  double const tol = _cfg.newton_tol;
  double const loose_tol = std::max(tol, 1e-6);
  auto const &schedule = _cfg.eps_schedule;

  if (_cfg.p == 2.)
  {
    Eigen::VectorXd x = v_init ? to_interior(*v_init, _dofs)
                               : Eigen::VectorXd::Zero(_dofs.n_dofs());
    report.converged = newton(x, load, schedule.back(), tol, report);
    return {from_interior(_mesh, _dofs, x), report};
  }

  if (v_init)
  {
    Eigen::VectorXd x = to_interior(*v_init, _dofs);
    if (rescale_along_ray(x, load))
    {
      SolveReport attempt = report;
      if (newton(x, load, schedule.back(), tol, attempt))
      {
        attempt.converged = true;
        return {from_interior(_mesh, _dofs, x), attempt};
      }
      report.newton_iterations = attempt.newton_iterations;
    }
  }

  Eigen::VectorXd x = cold_start(load);
  bool ok = true;
  for (std::size_t level = 0; level < schedule.size(); ++level)
  {
    bool const last = level + 1 == schedule.size();
    ok = newton(x, load, schedule[level], last ? tol : loose_tol, report);
  }
  report.converged = ok;
  return {from_interior(_mesh, _dofs, x), report};
}

std::pair<FeFunction, SolveReport>
solve_ppoisson(std::shared_ptr<Mesh const> mesh, LoadVector const &load,
               PPoissonConfig const &cfg,
               std::optional<FeFunction> const &v_init)
{
  PPoissonSolver solver(std::move(mesh), cfg);
  return solver.solve(load, v_init ? &*v_init : nullptr);
}

std::pair<FeFunction, SolveReport>
solve_signed_power_rhs(PPoissonSolver &solver, double a,
                       FeFunction const &g_plus, double b,
                       FeFunction const &g_minus, FeFunction const *v_init)
{
  if (a < 0. || b < 0.)
    throw InvalidArgument("solve_signed_power_rhs: a and b must be >= 0");
  if (g_plus.values().minCoeff() < 0. || g_minus.values().minCoeff() < 0.)
    throw InvalidArgument("solve_signed_power_rhs: parts must be nonnegative");
  auto const &cfg = solver.config();
  LoadVector const load = signed_power_load(
      a, g_plus, b, g_minus, cfg.p, solver.dofs(), cfg.quad_degree);
  return solver.solve(load, v_init);
}

std::pair<FeFunction, SolveReport>
solve_signed_power_rhs(std::shared_ptr<Mesh const> mesh, double a,
                       FeFunction const &g_plus, double b,
                       FeFunction const &g_minus, PPoissonConfig const &cfg)
{
  PPoissonSolver solver(std::move(mesh), cfg);
  return solve_signed_power_rhs(solver, a, g_plus, b, g_minus);
}

} // namespace plap
