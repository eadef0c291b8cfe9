#include "plap/balance.hpp"

#include "plap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace plap
{

double BetaMap::operator()(double alpha) const
{
  double const a = std::clamp(alpha, 0., 1.);
  switch (kind)
  {
  case Kind::linear:
    return 1. - a;
  case Kind::power:
    return std::pow(1. - std::pow(a, p), 1. / p);
  }
  return 1. - a;
}

std::string BetaMap::name() const
{
  return kind == Kind::linear ? "linear" : "power";
}

double fixed_point(BetaMap const &beta)
{
  double lo = 0.;
  double hi = 1.;
  while (hi - lo > 1e-14)
  {
    double const mid = 0.5 * (lo + hi);
    if (beta(mid) > mid)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

void RootConfig::validate() const
{
  if (!(alpha_tol > 0.) || !(F_tol > 0.))
    throw ValidationError("root tolerances must be positive");
  if (max_fevals < 1)
    throw ValidationError("max_fevals must be >= 1");
  if (grid_points < 1)
    throw ValidationError("grid_points must be >= 1");
}

namespace
{

int sign_of(double f) { return f > 0. ? 1 : (f < 0. ? -1 : 0); }

} // namespace

BalanceSolver::BalanceSolver(std::shared_ptr<Mesh const> mesh,
                             PPoissonConfig solver_cfg, BetaMap beta,
                             RootConfig root_cfg, double zero_tol)
    : _solver(std::move(mesh), std::move(solver_cfg)), _beta(beta),
      _root(root_cfg), _zero_tol(zero_tol)
{
  _root.validate();
  if (!(_zero_tol > 0.))
    throw ValidationError("zero_tol must be positive");
}

void BalanceSolver::set_iterate(FeFunction const &u_k)
{
  RayleighReport const rq =
      rayleigh(u_k, p(), _zero_tol, _solver.config().quad_degree);
  if (!rq.sign_changing())
    throw NotSignChanging("iterate lacks a positive or a negative part");
  _u_tilde = std::make_unique<FeFunction>((1. / rq.lp_norm) * u_k);
  _u_plus = std::make_unique<FeFunction>(positive_part(*_u_tilde));
  _u_minus = std::make_unique<FeFunction>(negative_part(*_u_tilde));
  _hint = std::make_unique<FeFunction>(u_k);
  _evals.clear();
  _newton_iterations = 0;
}

BalanceSolver::Evaluation const &BalanceSolver::evaluate(double alpha)
{
  if (!_u_tilde)
    throw InternalError("BalanceSolver: no iterate set");
  for (auto const &ev : _evals)
    if (ev.alpha == alpha)
      return ev;

  FeFunction const *start = _hint.get();
  double best_gap = std::numeric_limits<double>::infinity();
  for (auto const &ev : _evals)
    if (std::abs(ev.alpha - alpha) < best_gap)
    {
      best_gap = std::abs(ev.alpha - alpha);
      start = &ev.phi;
    }

  auto [v, report] = solve_signed_power_rhs(_solver, alpha, *_u_plus,
                                            _beta(alpha), *_u_minus, start);
  _newton_iterations += report.newton_iterations;
  if (!report.converged)
  {
    std::ostringstream msg;
    msg << "p-Poisson solve did not converge at alpha = " << alpha
        << " (relative residual "
        << report.final_residual_norm / report.initial_residual_norm << ")";
    throw NonConvergence(msg.str());
  }

  RayleighReport rq =
      rayleigh(v, p(), _zero_tol, _solver.config().quad_degree);
  double F;
  if (rq.plus && rq.minus)
    F = *rq.plus - *rq.minus;
  else if (rq.minus)
    F = std::numeric_limits<double>::infinity();
  else if (rq.plus)
    F = -std::numeric_limits<double>::infinity();
  else
    throw InternalError("phi(alpha) vanished for a nonzero load");

  _evals.push_back({alpha, std::move(v), std::move(rq), F});
  return _evals.back();
}

FeFunction const &BalanceSolver::phi(double alpha)
{
  if (!(alpha >= 0. && alpha <= 1.))
    throw InvalidArgument("alpha must lie in [0, 1]");
  return evaluate(alpha).phi;
}

double BalanceSolver::residual(double alpha)
{
  if (!(alpha >= 0. && alpha <= 1.))
    throw InvalidArgument("alpha must lie in [0, 1]");
  return evaluate(alpha).F;
}

RayleighReport const &BalanceSolver::rayleigh_at(double alpha)
{
  return evaluate(alpha).rq;
}

bool BalanceSolver::balanced(Evaluation const &ev) const
{
  return std::isfinite(ev.F) && std::abs(ev.F) <= _root.F_tol * *ev.rq.total;
}

BalanceResult BalanceSolver::make_result(Evaluation const &ev,
                                         Bracket const &bracket)
{
  return BalanceResult{.alpha = ev.alpha,
                       .beta = _beta(ev.alpha),
                       .u_next = ev.phi,
                       .residual_F = ev.F,
                       .rayleigh = ev.rq,
                       .bracket = bracket,
                       .fevals = fevals(),
                       .newton_iterations = _newton_iterations};
}

BalanceResult BalanceSolver::find_balanced_alpha()
{
  struct Probe
  {
    double alpha;
    double F;
  };

  // Bracket reported with an early exit: the current sign-change interval,
  // or the scan cell around a grid point that balances exactly.
  std::optional<Bracket> current;
  double cell = 1. / (_root.grid_points + 1);
  std::optional<BalanceResult> early;
  auto const probe = [&](double alpha) -> Probe {
    Evaluation const &ev = evaluate(alpha);
    if (!early && balanced(ev))
      early = make_result(
          ev, current ? *current
                      : Bracket{std::max(0., alpha - cell),
                                std::min(1., alpha + cell), +1, -1});
    return {alpha, ev.F};
  };

  // Scan for the first sign change from the left.  F(0) and F(1) are only
  // evaluated when the scan needs them.
  auto const scan = [&](int n) -> std::optional<std::pair<Probe, Probe>> {
    std::vector<Probe> probes;
    cell = 1. / (n + 1);
    for (int i = 1; i <= n; ++i)
    {
      probes.push_back(probe(static_cast<double>(i) / (n + 1)));
      if (early)
        return std::nullopt;
    }
    if (sign_of(probes.front().F) < 0)
    {
      Probe const left = probe(0.);
      if (early)
        return std::nullopt;
      if (sign_of(left.F) > 0)
        return std::pair{left, probes.front()};
    }
    for (std::size_t i = 0; i + 1 < probes.size(); ++i)
      if (sign_of(probes[i].F) != sign_of(probes[i + 1].F))
        return std::pair{probes[i], probes[i + 1]};
    if (sign_of(probes.back().F) > 0)
    {
      Probe const right = probe(1.);
      if (early)
        return std::nullopt;
      if (sign_of(right.F) < 0)
        return std::pair{probes.back(), right};
    }
    return std::nullopt;
  };

  auto bracket = scan(_root.grid_points);
  if (!bracket && !early)
    bracket = scan(4 * (_root.grid_points + 1) - 1);
  if (early)
    return *early;
  if (!bracket)
  {
    std::ostringstream msg;
    msg << "no sign change of R+ - R- found; samples (alpha, F):";
    for (auto const &ev : _evals)
      msg << " (" << ev.alpha << ", " << ev.F << ")";
    throw NoSignChange(msg.str());
  }

  Probe lo = bracket->first;
  Probe hi = bracket->second;
  current = Bracket{lo.alpha, hi.alpha, sign_of(lo.F), sign_of(hi.F)};
  auto const absorb = [&](Probe const &pt) {
    if (sign_of(pt.F) == sign_of(lo.F))
      lo = pt;
    else
      hi = pt;
    current = Bracket{lo.alpha, hi.alpha, sign_of(lo.F), sign_of(hi.F)};
  };

  while (hi.alpha - lo.alpha > _root.alpha_tol &&
         fevals() < _root.max_fevals)
  {
    double const mid = 0.5 * (lo.alpha + hi.alpha);
    Probe const m = probe(mid);
    if (early)
      break;

    // Ridder's exponential-fit step; skipped while an end is a marker.
    std::optional<double> ridder;
    if (std::isfinite(lo.F) && std::isfinite(hi.F) && std::isfinite(m.F))
    {
      double const s = std::sqrt(m.F * m.F - lo.F * hi.F);
      if (s > 0.)
        ridder = mid + (mid - lo.alpha) * (lo.F > hi.F ? 1. : -1.) * m.F / s;
    }
    absorb(m);
    if (ridder && *ridder > lo.alpha && *ridder < hi.alpha &&
        *ridder != mid && fevals() < _root.max_fevals)
    {
      Probe const r = probe(*ridder);
      if (early)
        break;
      absorb(r);
    }
  }
  if (early)
    return *early;

  // Tolerance not met: report the better finite end of the final bracket.
  Bracket const final_bracket{lo.alpha, hi.alpha, sign_of(lo.F),
                              sign_of(hi.F)};
  Evaluation const *best = nullptr;
  for (double a : {lo.alpha, hi.alpha})
  {
    Evaluation const &ev = evaluate(a);
    if (!std::isfinite(ev.F) || a <= 0. || a >= 1.)
      continue;
    if (!best || std::abs(ev.F) / *ev.rq.total <
                     std::abs(best->F) / *best->rq.total)
      best = &ev;
  }
  if (!best)
    throw NoSignChange("bracket collapsed onto a vanishing part");
  return make_result(*best, final_bracket);
}

FeFunction phi(double alpha, FeFunction const &u_k, BetaMap const &beta,
               PPoissonConfig const &cfg)
{
  BalanceSolver solver(u_k.mesh_ptr(), cfg, beta);
  solver.set_iterate(u_k);
  return solver.phi(alpha);
}

double balance_residual(double alpha, FeFunction const &u_k,
                        BetaMap const &beta, PPoissonConfig const &cfg,
                        double zero_tol)
{
  BalanceSolver solver(u_k.mesh_ptr(), cfg, beta, {}, zero_tol);
  solver.set_iterate(u_k);
  return solver.residual(alpha);
}

BalanceResult find_balanced_alpha(FeFunction const &u_k, BetaMap const &beta,
                                  PPoissonConfig const &cfg,
                                  RootConfig const &root_cfg, double zero_tol)
{
  BalanceSolver solver(u_k.mesh_ptr(), cfg, beta, root_cfg, zero_tol);
  solver.set_iterate(u_k);
  return solver.find_balanced_alpha();
}

} // namespace plap
