#pragma once

#include "plap/balance.hpp"
#include "plap/femspace.hpp"
#include "plap/ppoisson.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace plap
{

// Initial guesses -------------------------------------------------------------

enum class GuessKind
{
  midline,          ///< xy(x-1)(y-1)(x-1/2)
  diagonal,         ///< xy(x-1)(y-1)(x-y)
  circle,           ///< xy(x-1)(y-1)(1/16 - (x-1/2)^2 - (y-1/2)^2)
  first_eig_product,///< sin(m pi x) sin(n pi y), or sin(m pi x) in 1D
  custom_nodal      ///< raw nodal values
};

GuessKind parse_guess_kind(std::string const &name);
std::string to_string(GuessKind kind);

struct GuessParams
{
  int m = 2;
  int n = 1;
  std::vector<double> values;
};

/// Nodal interpolant of the named guess with coordinates rescaled to the unit
/// square (unit interval); boundary values are forced to zero.  In 1D the
/// midline guess is x(x-1)(x-1/2); diagonal and circle need a 2D mesh.
FeFunction initial_guess(GuessKind kind, std::shared_ptr<Mesh const> mesh,
                         GuessParams const &params = {});

struct U0Diagnostics
{
  double lp_norm_plus = 0.;
  double lp_norm_minus = 0.;
  /// Fraction of interior nodes where u0 is exactly zero.
  double zero_fraction = 0.;
  std::vector<std::string> warnings;
};

/// Throws NotSignChanging unless both parts exceed zero_tol * ||u0||_p; warns
/// when more than 5% of the interior nodes are exact zeros.
U0Diagnostics validate_u0(FeFunction const &u0, double p = 2.,
                          double zero_tol = default_zero_tol);

// Algorithm A ------------------------------------------------------------------

struct RunConfig
{
  double p = 2.;
  BetaMap beta = BetaMap::linear();
  int max_iters = 50;
  double rq_stop_tol = 1e-8;
  double diff_stop_tol = 1e-7;
  /// solver.p is overwritten with p.
  PPoissonConfig solver;
  RootConfig root;
  bool check_invariants = true;
  double invariant_tol = 1e-4;
  double zero_tol = default_zero_tol;
  /// Relative size of a deterministic perturbation added to every iterate
  /// before it enters the next step.
  double symmetry_breaking_noise = 0.;
  std::uint64_t noise_seed = 0x5eed;

  void validate() const;
};

struct IterationState
{
  int k = 0;
  FeFunction u;
  std::optional<double> alpha;
  std::optional<double> beta;
  RayleighReport rayleigh;
  std::optional<double> diff_w;
  std::optional<double> diff_lp;
  double lp_norm = 0.;
  double grad_norm = 0.;
  double clipping_defect = 0.;
  int fevals = 0;
  int newton_iterations = 0;
};

enum class StopReason
{
  rq_stalled,
  diff_small,
  max_iters,
  no_sign_change,
  solver_failure
};

std::string to_string(StopReason reason);

struct InvariantViolation
{
  int k = 0;
  std::string kind; ///< "monotonicity", "balance" or "norm_bounds"
  double value = 0.;
  double limit = 0.;
};

struct RunTrace
{
  double p = 2.;
  BetaMap beta;
  std::vector<IterationState> states;
  double R_star_estimate = 0.;
  double alpha_star = 0.;
  double lp_norm_limit_pred = 0.;
  double w_norm_limit_pred = 0.;
  StopReason stop_reason = StopReason::max_iters;
  std::string stop_message;
  std::vector<InvariantViolation> invariant_violations;

  IterationState const &last() const { return states.back(); }
  bool failed() const
  {
    return stop_reason == StopReason::no_sign_change ||
           stop_reason == StopReason::solver_failure;
  }
};

/// Iterates u_{k+1} = phi_k(alpha_k) until a stop rule fires.  Solver
/// failures and missing brackets end the run with a partial trace.
RunTrace run_algorithm_a(std::shared_ptr<Mesh const> mesh,
                         FeFunction const &u0, RunConfig const &cfg);

struct ConvergenceReport
{
  double alpha_gap = 0.;   ///< |alpha_last - alpha*|
  double beta_gap = 0.;    ///< |beta_last - alpha*|
  double lp_norm_gap = 0.; ///< | ||u||_p - (alpha*/R*)^(1/(p-1)) |
  double w_norm_gap = 0.;  ///< | ||grad u||_p - (alpha*/R*^(1/p))^(1/(p-1)) |
  double lp_norm_rel_gap = 0.;
  double w_norm_rel_gap = 0.;
  /// Ratio of the last two successive decreases of R; < 1 when contracting.
  double rq_contraction = 0.;
  /// Ratio of the last two W-norm step differences.
  double diff_contraction = 0.;
};

/// Needs at least three states; throws TraceTooShort otherwise.
ConvergenceReport convergence_diagnostics(RunTrace const &trace);

// Baseline ---------------------------------------------------------------------

struct FirstEigenResult
{
  FeFunction u;
  std::vector<double> rayleigh;
};

/// Plain inverse iteration -Delta_p u_{k+1} = |u~_k|^(p-2) u~_k, whose
/// Rayleigh quotients decrease towards the first eigenvalue.
FirstEigenResult run_first_eigen_iteration(std::shared_ptr<Mesh const> mesh,
                                           FeFunction const &u0, int iters,
                                           PPoissonConfig const &cfg);

// Output -------------------------------------------------------------------------

inline constexpr char const *trace_csv_header =
    "k,alpha,beta,R,Rplus,Rminus,lp_norm,diff_w,diff_lp";

void write_trace_csv(std::ostream &out, RunTrace const &trace);
/// Structured JSON summary: final values, limit predictions, violations.
void write_trace_summary(std::ostream &out, RunTrace const &trace);

} // namespace plap
