#pragma once

#include "plap/femspace.hpp"
#include "plap/mesh.hpp"

#include <memory>
#include <vector>

namespace plap
{

struct SquareEigenvalue
{
  double value = 0.;
  int multiplicity = 0;
};

/// pi^2 (m^2 + n^2) for 1 <= m, n <= m_max: the Dirichlet Laplacian spectrum
/// of the unit square, sorted, equal values merged.
std::vector<SquareEigenvalue> square_eigs_p2(int m_max);

/// Closed-form Dirichlet p-Laplacian eigenvalues of an interval.
struct EigenOracle1D
{
  double p = 2.;
  double length = 1.;
  /// 2 pi / (p sin(pi / p)); equals pi at p = 2.
  double pi_p = 0.;

  EigenOracle1D(double p, double length = 1.);
};

/// (p-1) (k pi_p / length)^p
double lambda_k_1d(int k, EigenOracle1D const &oracle);

/// Shooting: integrates u' = |v|^(p'-2) v, v' = -lambda |u|^(p-2) u from
/// (u, v)(0) = (0, 1) with an adaptive Runge-Kutta method and bisects lambda
/// until the bracket [lo, hi] around the k-th eigenvalue satisfies
/// hi - lo <= tol * hi.  Throws NonBracketed when no upper bound is found.
double shoot_1d(int k, double p, double length = 1., double tol = 1e-10);

/// x_0 = 0, x_{k+1} = x_k + s_{k+1} / (k+1) where s switches to +1 below 0,
/// to -1 above 1 and is kept otherwise (s_0 = 1).  Returns x_0 .. x_{n-1}.
std::vector<double> counterexample_sequence(int n);

struct DiscreteEigenpairs
{
  std::vector<double> values;
  std::vector<FeFunction> vectors; ///< normalized to unit L^2 norm
  int iterations = 0;
};

/// Lowest `count` eigenpairs of the P1 Dirichlet Laplacian (K x = mu M x)
/// by subspace iteration with Rayleigh-Ritz.  Throws NonConvergence.
DiscreteEigenpairs discrete_eigenpairs_p2(std::shared_ptr<Mesh const> mesh,
                                          int count, double tol = 1e-12,
                                          int max_iter = 500);

} // namespace plap
