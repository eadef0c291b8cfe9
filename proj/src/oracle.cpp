#include "plap/oracle.hpp"

#include "plap/errors.hpp"
#include "plap/ppoisson.hpp"

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace plap
{

std::vector<SquareEigenvalue> square_eigs_p2(int m_max)
{
  if (m_max < 1)
    throw InvalidArgument("square_eigs_p2: m_max must be >= 1");
  // Merge on the integer m^2 + n^2 so that multiplicities are exact.
  std::map<int, int> counts;
  for (int m = 1; m <= m_max; ++m)
    for (int n = 1; n <= m_max; ++n)
      ++counts[m * m + n * n];
  double const pi2 = std::numbers::pi * std::numbers::pi;
  std::vector<SquareEigenvalue> out;
  for (auto const &[s, mult] : counts)
    out.push_back({pi2 * s, mult});
  return out;
}

EigenOracle1D::EigenOracle1D(double p_, double length_)
    : p(p_), length(length_)
{
  if (!(p > 1.) || !std::isfinite(p))
    throw InvalidArgument("EigenOracle1D: p must lie in (1, inf)");
  if (!(length > 0.))
    throw InvalidArgument("EigenOracle1D: length must be positive");
  pi_p = 2. * std::numbers::pi / (p * std::sin(std::numbers::pi / p));
}

double lambda_k_1d(int k, EigenOracle1D const &oracle)
{
  if (k < 1)
    throw InvalidArgument("lambda_k_1d: k must be >= 1");
  return (oracle.p - 1.) * std::pow(k * oracle.pi_p / oracle.length, oracle.p);
}

namespace
{

using State = std::array<double, 2>;

/// Number of sign changes of u on (0, length] for the given lambda; stops
/// counting once `enough` is reached.
int shooting_zeros(double lambda, double p, double length, int enough)
{
  namespace odeint = boost::numeric::odeint;
  double const q = p / (p - 1.);
  double const eps2 = 1e-20;
  auto const rhs = [&](State const &x, State &dxdt, double) {
    dxdt[0] = std::pow(x[1] * x[1] + eps2, 0.5 * (q - 2.)) * x[1];
    dxdt[1] = -lambda * std::copysign(std::pow(std::abs(x[0]), p - 1.), x[0]);
  };

  auto stepper = odeint::make_dense_output(
      1e-10, 1e-10, odeint::runge_kutta_dopri5<State>());
  State x{0., 1.};
  stepper.initialize(x, 0., 1e-4 * length);
  double u_prev = 0.;
  int zeros = 0;
  while (stepper.current_time() < length)
  {
    stepper.do_step(rhs);
    State cur = stepper.current_state();
    if (stepper.current_time() > length)
      stepper.calc_state(length, cur);
    double const u = cur[0];
    if (u_prev != 0. && u != 0. && (u > 0.) != (u_prev > 0.))
      ++zeros;
    if (zeros >= enough)
      break;
    if (u != 0.)
      u_prev = u;
  }
  return zeros;
}

} // namespace

double shoot_1d(int k, double p, double length, double tol)
{
  if (k < 1)
    throw InvalidArgument("shoot_1d: k must be >= 1");
  if (!(p > 1.) || !(length > 0.) || !(tol > 0.))
    throw InvalidArgument("shoot_1d: need p > 1, length > 0, tol > 0");

  // The k-th zero moves left as lambda grows, so "at least k sign changes on
  // (0, length]" holds exactly for lambda above the k-th eigenvalue.
  auto const above = [&](double lambda) {
    return shooting_zeros(lambda, p, length, k) >= k;
  };
  double lo = 0.;
  double hi = 1.;
  int doublings = 0;
  while (!above(hi))
  {
    lo = hi;
    hi *= 2.;
    if (++doublings > 200)
      throw NonBracketed("shoot_1d: no upper bound for lambda");
  }
  for (int it = 0; it < 200 && hi - lo > tol * hi; ++it)
  {
    double const mid = 0.5 * (lo + hi);
    (above(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> counterexample_sequence(int n)
{
  if (n < 1)
    throw InvalidArgument("counterexample_sequence: n must be >= 1");
  std::vector<double> x(static_cast<std::size_t>(n));
  x[0] = 0.;
  double sigma = 1.;
  for (int k = 0; k + 1 < n; ++k)
  {
    if (x[k] < 0.)
      sigma = 1.;
    else if (x[k] > 1.)
      sigma = -1.;
    x[k + 1] = x[k] + sigma / (k + 1);
  }
  return x;
}

DiscreteEigenpairs discrete_eigenpairs_p2(std::shared_ptr<Mesh const> mesh,
                                          int count, double tol, int max_iter)
{
  if (!mesh)
    throw InvalidArgument("discrete_eigenpairs_p2: null mesh");
  DofMap const dofs(*mesh);
  auto const n = static_cast<Eigen::Index>(dofs.n_dofs());
  if (count < 1 || count > n)
    throw InvalidArgument("discrete_eigenpairs_p2: bad count");
  SparseMatrix const K = assemble_stiffness(*mesh, dofs);
  SparseMatrix const M = assemble_mass(*mesh, dofs);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(K);
  if (ldlt.info() != Eigen::Success)
    throw InternalError("stiffness factorization failed");

  Eigen::Index const block =
      std::min<Eigen::Index>(n, count + std::max(count, 8));
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> unit(-1., 1.);
  Eigen::MatrixXd X(n, block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      X(i, j) = unit(rng);

  DiscreteEigenpairs out;
  Eigen::VectorXd previous = Eigen::VectorXd::Zero(count);
  bool converged = false;
  for (int it = 1; it <= max_iter && !converged; ++it)
  {
    Eigen::MatrixXd const Y = ldlt.solve(M * X);
    Eigen::MatrixXd const Kr = Y.transpose() * (K * Y);
    Eigen::MatrixXd const Mr = Y.transpose() * (M * Y);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(Kr, Mr);
    if (ritz.info() != Eigen::Success)
      throw InternalError("Rayleigh-Ritz step failed");
    X = Y * ritz.eigenvectors();
    Eigen::VectorXd const values = ritz.eigenvalues().head(count);
    converged = ((values - previous).array().abs() <=
                 tol * values.array().abs())
                    .all();
    previous = values;
    out.iterations = it;
  }
  if (!converged)
    throw NonConvergence("subspace iteration did not converge");

  for (int j = 0; j < count; ++j)
  {
    out.values.push_back(previous[j]);
    FeFunction u = from_interior(mesh, dofs, X.col(j));
    u *= 1. / lp_norm(u, 2.);
    out.vectors.push_back(std::move(u));
  }
  return out;
}

} // namespace plap
