#pragma once

#include "plap/femspace.hpp"
#include "plap/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace plap
{

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Load functional of a Dirichlet problem: entry i is the integral of f
/// against the basis function of interior dof i (DofMap order).
using LoadVector = Eigen::VectorXd;

struct DampingConfig
{
  double shrink = 0.5;
  double min_step = 1. / (1 << 20);
  /// Sufficient-decrease constant of the Armijo test on the energy.
  double armijo = 1e-4;
};

/// Geometric sequence first > ... > last with `levels` entries.
std::vector<double> geometric_eps_schedule(double first, double last,
                                           int levels);

struct PPoissonConfig
{
  double p = 2.;
  double newton_tol = 1e-10;
  int max_newton = 60;
  std::vector<double> eps_schedule = geometric_eps_schedule(1e-2, 1e-10, 9);
  DampingConfig damping;
  int quad_degree = default_quadrature_degree;

  double eps_final() const { return eps_schedule.back(); }
  /// Throws ValidationError on out-of-range fields.
  void validate() const;
};

struct SolveReport
{
  int newton_iterations = 0;
  /// Residual norm of the zero function, i.e. the norm of the load vector.
  double initial_residual_norm = 0.;
  double final_residual_norm = 0.;
  /// Estimated rounding level of the residual at the last Newton iterate;
  /// residuals below it count as converged.
  double roundoff_floor = 0.;
  bool converged = false;
  /// Regularized energy after every accepted Newton step.
  std::vector<double> energy_trace;
};

// Assembly -------------------------------------------------------------------

/// Residual of the regularized weak form over the interior dofs:
/// sum_e (|grad v|^2 + eps^2)^((p-2)/2) <grad v, grad psi_i> vol - load_i.
Eigen::VectorXd assemble_residual(FeFunction const &v, DofMap const &dofs,
                                  LoadVector const &load, double p,
                                  double eps);

/// First-order estimate of the rounding error in assemble_residual(v, ...).
double residual_roundoff_floor(FeFunction const &v, DofMap const &dofs,
                               LoadVector const &load, double p, double eps);

/// Exact derivative of assemble_residual with respect to the interior values.
SparseMatrix assemble_jacobian(FeFunction const &v, DofMap const &dofs,
                               double p, double eps);

/// (1/p) sum_e (|grad v|^2 + eps^2)^(p/2) vol - load . v
double regularized_energy(FeFunction const &v, DofMap const &dofs,
                          LoadVector const &load, double p, double eps);

SparseMatrix assemble_stiffness(Mesh const &mesh, DofMap const &dofs);
SparseMatrix assemble_mass(Mesh const &mesh, DofMap const &dofs);

// Loads ----------------------------------------------------------------------

/// Load of a function given pointwise, integrated by quadrature.
LoadVector load_from_callable(Mesh const &mesh, DofMap const &dofs,
                              std::function<double(Point const &)> const &f,
                              int quad_degree = default_quadrature_degree);

/// Load of a piecewise-linear f.
LoadVector load_from_function(FeFunction const &f, DofMap const &dofs,
                              int quad_degree = default_quadrature_degree);

/// Load a * (g_plus)^(p-1) - b * (g_minus)^(p-1), the powers taken of the
/// piecewise-linear functions at the quadrature points.
LoadVector signed_power_load(double a, FeFunction const &g_plus, double b,
                             FeFunction const &g_minus, double p,
                             DofMap const &dofs,
                             int quad_degree = default_quadrature_degree);

/// Load |g|^(p-2) g evaluated at the quadrature points.
LoadVector signed_power_load(FeFunction const &g, double p,
                             DofMap const &dofs,
                             int quad_degree = default_quadrature_degree);

// Solver ---------------------------------------------------------------------

/// Damped Newton solver for -div((|grad v|^2 + eps^2)^((p-2)/2) grad v) = f
/// with homogeneous Dirichlet data, continued in eps down to
/// cfg.eps_final().  Keeps the factorization pattern between solves, so one
/// instance should serve many loads on the same mesh.  Not thread-safe.
class PPoissonSolver
{
public:
  PPoissonSolver(std::shared_ptr<Mesh const> mesh, PPoissonConfig cfg);

  /// Cold starts walk the full eps schedule.  A warm start is rescaled to
  /// the energy minimizer on its ray and tried at the final eps directly,
  /// falling back to a cold start.  A capped-out solve returns with
  /// report.converged == false.
  std::pair<FeFunction, SolveReport>
  solve(LoadVector const &load, FeFunction const *v_init = nullptr);

  Mesh const &mesh() const { return *_mesh; }
  std::shared_ptr<Mesh const> const &mesh_ptr() const { return _mesh; }
  DofMap const &dofs() const { return _dofs; }
  PPoissonConfig const &config() const { return _cfg; }

private:
  /// Newton at fixed eps; returns true when the relative residual drops
  /// below tol.
  bool newton(Eigen::VectorXd &x, LoadVector const &load, double eps,
              double tol, SolveReport &report);
  void factorize(SparseMatrix const &jacobian);
  Eigen::VectorXd cold_start(LoadVector const &load);
  /// Scales x to the energy minimizer on its ray; false when load.x <= 0.
  bool rescale_along_ray(Eigen::VectorXd &x, LoadVector const &load) const;

  std::shared_ptr<Mesh const> _mesh;
  DofMap _dofs;
  PPoissonConfig _cfg;
  Eigen::SimplicialLDLT<SparseMatrix> _ldlt;
  bool _pattern_analyzed = false;
  bool _linear_factorized = false;
};

std::pair<FeFunction, SolveReport>
solve_ppoisson(std::shared_ptr<Mesh const> mesh, LoadVector const &load,
               PPoissonConfig const &cfg,
               std::optional<FeFunction> const &v_init = std::nullopt);

/// Solves -Delta_p v = a g_plus^(p-1) - b g_minus^(p-1).
std::pair<FeFunction, SolveReport>
solve_signed_power_rhs(PPoissonSolver &solver, double a,
                       FeFunction const &g_plus, double b,
                       FeFunction const &g_minus,
                       FeFunction const *v_init = nullptr);

std::pair<FeFunction, SolveReport>
solve_signed_power_rhs(std::shared_ptr<Mesh const> mesh, double a,
                       FeFunction const &g_plus, double b,
                       FeFunction const &g_minus, PPoissonConfig const &cfg);

/// Full nodal vector from interior values (boundary entries zero).
FeFunction from_interior(std::shared_ptr<Mesh const> mesh, DofMap const &dofs,
                         Eigen::VectorXd const &x);
Eigen::VectorXd to_interior(FeFunction const &v, DofMap const &dofs);

} // namespace plap
