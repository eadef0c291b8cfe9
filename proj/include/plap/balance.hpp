#pragma once

#include "plap/femspace.hpp"
#include "plap/ppoisson.hpp"

#include <deque>
#include <memory>
#include <string>
#include <vector>

namespace plap
{

/// Continuous strictly decreasing weight beta: [0,1] -> [0,1] with
/// beta(0) = 1 and beta(1) = 0.
struct BetaMap
{
  enum class Kind
  {
    linear, ///< 1 - alpha
    power   ///< (1 - alpha^p)^(1/p)
  };

  Kind kind = Kind::linear;
  double p = 2.;

  static BetaMap linear() { return {Kind::linear, 2.}; }
  static BetaMap power(double p) { return {Kind::power, p}; }

  double operator()(double alpha) const;
  std::string name() const;
};

/// The unique alpha* with beta(alpha*) = alpha*, by bisection.
double fixed_point(BetaMap const &beta);

struct RootConfig
{
  double alpha_tol = 1e-9;
  /// Relative tolerance on |R+ - R-| / R.
  double F_tol = 1e-7;
  int max_fevals = 80;
  /// Interior points of the initial scan of (0, 1).
  int grid_points = 9;

  void validate() const;
};

struct Bracket
{
  double alpha_lo = 0.;
  double alpha_hi = 1.;
  int F_lo_sign = +1;
  int F_hi_sign = -1;
};

struct BalanceResult
{
  double alpha = 0.;
  double beta = 0.;
  FeFunction u_next;
  double residual_F = 0.;
  RayleighReport rayleigh;
  Bracket bracket;
  int fevals = 0;
  int newton_iterations = 0;
};

/// Inner problem of one outer step: for a fixed sign-changing iterate u_k,
/// evaluates phi(alpha), the solution of
///   -Delta_p phi = alpha (u~+)^(p-1) - beta(alpha) (u~-)^(p-1),
/// and the balancing residual F(alpha) = R+[phi] - R-[phi], and finds a root
/// of F.  Evaluations are cached per iterate and warm-start each other.
///
/// F is an extended real: +inf when the positive part of phi vanishes, -inf
/// when the negative part vanishes.  This matches the one-sided limits of F
/// at the ends of the interval where both parts are present, so F(0) = +inf,
/// F(1) = -inf, and every sign change of the extended F is a genuine root.
class BalanceSolver
{
public:
  BalanceSolver(std::shared_ptr<Mesh const> mesh, PPoissonConfig solver_cfg,
                BetaMap beta, RootConfig root_cfg = {},
                double zero_tol = default_zero_tol);

  /// Starts a new outer step.  Throws NotSignChanging when u_k lacks either
  /// part.
  void set_iterate(FeFunction const &u_k);

  FeFunction const &phi(double alpha);
  double residual(double alpha);
  RayleighReport const &rayleigh_at(double alpha);

  /// Grid scan for the first sign change from the left (refined x4 once),
  /// then Ridder iterations with bisection fallback.  The result carries the
  /// last sign-change interval around the root (the scan cell when a grid
  /// point balances exactly).  Throws NoSignChange.
  BalanceResult find_balanced_alpha();

  BetaMap const &beta_map() const { return _beta; }
  RootConfig const &root_config() const { return _root; }
  PPoissonSolver &solver() { return _solver; }
  double p() const { return _solver.config().p; }
  FeFunction const &normalized_iterate() const { return *_u_tilde; }
  int fevals() const { return static_cast<int>(_evals.size()); }
  int newton_iterations() const { return _newton_iterations; }

private:
  struct Evaluation
  {
    double alpha;
    FeFunction phi;
    RayleighReport rq;
    double F;
  };

  Evaluation const &evaluate(double alpha);
  bool balanced(Evaluation const &ev) const;
  BalanceResult make_result(Evaluation const &ev, Bracket const &bracket);

  PPoissonSolver _solver;
  BetaMap _beta;
  RootConfig _root;
  double _zero_tol;
  std::unique_ptr<FeFunction> _u_tilde;
  std::unique_ptr<FeFunction> _u_plus;
  std::unique_ptr<FeFunction> _u_minus;
  std::unique_ptr<FeFunction> _hint;
  std::deque<Evaluation> _evals;
  int _newton_iterations = 0;
};

/// Convenience wrappers that build a one-shot BalanceSolver.
FeFunction phi(double alpha, FeFunction const &u_k, BetaMap const &beta,
               PPoissonConfig const &cfg);
double balance_residual(double alpha, FeFunction const &u_k,
                        BetaMap const &beta, PPoissonConfig const &cfg,
                        double zero_tol = default_zero_tol);
BalanceResult find_balanced_alpha(FeFunction const &u_k, BetaMap const &beta,
                                  PPoissonConfig const &cfg,
                                  RootConfig const &root_cfg = {},
                                  double zero_tol = default_zero_tol);

} // namespace plap
