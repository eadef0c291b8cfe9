#include "plap/driver.hpp"

#include "plap/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace plap
{

GuessKind parse_guess_kind(std::string const &name)
{
  if (name == "midline")
    return GuessKind::midline;
  if (name == "diagonal")
    return GuessKind::diagonal;
  if (name == "circle")
    return GuessKind::circle;
  if (name == "first_eig_product")
    return GuessKind::first_eig_product;
  if (name == "custom_nodal")
    return GuessKind::custom_nodal;
  throw UnknownGuess("unknown initial guess '" + name + "'");
}

std::string to_string(GuessKind kind)
{
  switch (kind)
  {
  case GuessKind::midline:
    return "midline";
  case GuessKind::diagonal:
    return "diagonal";
  case GuessKind::circle:
    return "circle";
  case GuessKind::first_eig_product:
    return "first_eig_product";
  case GuessKind::custom_nodal:
    return "custom_nodal";
  }
  return "unknown";
}

FeFunction initial_guess(GuessKind kind, std::shared_ptr<Mesh const> mesh,
                         GuessParams const &params)
{
  if (!mesh)
    throw InvalidArgument("initial_guess: null mesh");
  Mesh const &m = *mesh;
  bool const two_d = m.dimension() == 2;
  double const pi = std::numbers::pi;

  Eigen::VectorXd values(m.n_nodes());
  if (kind == GuessKind::custom_nodal)
  {
    if (params.values.size() != m.n_nodes())
      throw InvalidArgument("custom_nodal: expected one value per node");
    for (std::size_t i = 0; i < m.n_nodes(); ++i)
      values[i] = params.values[i];
  }
  else
  {
    if (!two_d && (kind == GuessKind::diagonal || kind == GuessKind::circle))
      throw InvalidArgument("guess '" + to_string(kind) + "' needs a 2D mesh");
    if (kind == GuessKind::first_eig_product && (params.m < 1 || params.n < 1))
      throw InvalidArgument("first_eig_product: m and n must be >= 1");
    for (std::size_t i = 0; i < m.n_nodes(); ++i)
    {
      double const x = m.node(i)[0] / m.width();
      double const y = two_d ? m.node(i)[1] / m.height() : 0.;
      double const bubble = two_d ? x * y * (x - 1.) * (y - 1.) : x * (x - 1.);
      switch (kind)
      {
      case GuessKind::midline:
        values[i] = bubble * (x - 0.5);
        break;
      case GuessKind::diagonal:
        values[i] = bubble * (x - y);
        break;
      case GuessKind::circle:
        values[i] =
            bubble * (1. / 16. - (x - 0.5) * (x - 0.5) - (y - 0.5) * (y - 0.5));
        break;
      case GuessKind::first_eig_product:
        values[i] = std::sin(params.m * pi * x) *
                    (two_d ? std::sin(params.n * pi * y) : 1.);
        break;
      case GuessKind::custom_nodal:
        break;
      }
    }
  }
  for (std::size_t i = 0; i < m.n_nodes(); ++i)
    if (m.is_boundary(i))
      values[i] = 0.;
  return FeFunction(std::move(mesh), std::move(values));
}

U0Diagnostics validate_u0(FeFunction const &u0, double p, double zero_tol)
{
  RayleighReport const rq = rayleigh(u0, p, zero_tol);
  U0Diagnostics diag;
  diag.lp_norm_plus = rq.lp_norm_plus;
  diag.lp_norm_minus = rq.lp_norm_minus;
  if (!rq.sign_changing())
  {
    std::ostringstream msg;
    msg << "initial guess is not sign-changing (||u+||_p = " << rq.lp_norm_plus
        << ", ||u-||_p = " << rq.lp_norm_minus << ")";
    throw NotSignChanging(msg.str());
  }

  Mesh const &m = u0.mesh();
  std::size_t interior = 0;
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < m.n_nodes(); ++i)
    if (!m.is_boundary(i))
    {
      ++interior;
      zeros += u0[i] == 0. ? 1 : 0;
    }
  diag.zero_fraction =
      interior ? static_cast<double>(zeros) / static_cast<double>(interior)
               : 0.;
  if (diag.zero_fraction > 0.05)
  {
    std::ostringstream msg;
    msg << "u0 vanishes exactly at " << 100. * diag.zero_fraction
        << "% of the interior nodes; its nodal set may have positive measure";
    diag.warnings.push_back(msg.str());
  }
  return diag;
}

void RunConfig::validate() const
{
  if (!(p > 1.) || !std::isfinite(p))
    throw ValidationError("p must lie in (1, inf)");
  if (max_iters < 1)
    throw ValidationError("max_iters must be >= 1");
  // A zero stop tolerance disables that rule.
  if (!(rq_stop_tol >= 0.) || !(diff_stop_tol >= 0.))
    throw ValidationError("stop tolerances must be non-negative");
  if (!(invariant_tol > 0.) || !(zero_tol > 0.))
    throw ValidationError("invariant_tol and zero_tol must be positive");
  if (!(symmetry_breaking_noise >= 0.))
    throw ValidationError("symmetry_breaking_noise must be non-negative");
  root.validate();
  PPoissonConfig s = solver;
  s.p = p;
  s.validate();
}

std::string to_string(StopReason reason)
{
  switch (reason)
  {
  case StopReason::rq_stalled:
    return "rq_stalled";
  case StopReason::diff_small:
    return "diff_small";
  case StopReason::max_iters:
    return "max_iters";
  case StopReason::no_sign_change:
    return "no_sign_change";
  case StopReason::solver_failure:
    return "solver_failure";
  }
  return "unknown";
}

namespace
{

IterationState make_state(int k, FeFunction u, double p, double zero_tol,
                          int quad_degree)
{
  RayleighReport rq = rayleigh(u, p, zero_tol, quad_degree);
  double const defect = rq.grad_norm > 0. ? clipping_defect(u, p) : 0.;
  double const lp = rq.lp_norm;
  double const grad = rq.grad_norm;
  return IterationState{.k = k,
                        .u = std::move(u),
                        .alpha = std::nullopt,
                        .beta = std::nullopt,
                        .rayleigh = std::move(rq),
                        .diff_w = std::nullopt,
                        .diff_lp = std::nullopt,
                        .lp_norm = lp,
                        .grad_norm = grad,
                        .clipping_defect = defect,
                        .fevals = 0,
                        .newton_iterations = 0};
}

double total_or_nan(RayleighReport const &rq)
{
  return rq.total.value_or(std::numeric_limits<double>::quiet_NaN());
}

} // namespace

RunTrace run_algorithm_a(std::shared_ptr<Mesh const> mesh,
                         FeFunction const &u0, RunConfig const &cfg)
{
  cfg.validate();
  if (!mesh || &u0.mesh() != mesh.get())
    throw InvalidArgument("run_algorithm_a: u0 must live on the given mesh");
  validate_u0(u0, cfg.p, cfg.zero_tol);

  PPoissonConfig solver_cfg = cfg.solver;
  solver_cfg.p = cfg.p;
  int const deg = solver_cfg.quad_degree;
  BalanceSolver balance(mesh, solver_cfg, cfg.beta, cfg.root, cfg.zero_tol);

  RunTrace trace;
  trace.p = cfg.p;
  trace.beta = cfg.beta;
  trace.alpha_star = fixed_point(cfg.beta);
  trace.states.push_back(make_state(0, u0, cfg.p, cfg.zero_tol, deg));

  std::mt19937_64 rng(cfg.noise_seed);
  std::uniform_real_distribution<double> unit(-1., 1.);
  double eta_floor = 0.;
  double eta_cap = std::numeric_limits<double>::infinity();

  for (int k = 0; k < cfg.max_iters; ++k)
  {
    IterationState const &prev = trace.states.back();
    FeFunction input = prev.u;
    if (cfg.symmetry_breaking_noise > 0.)
    {
      double const scale = cfg.symmetry_breaking_noise * input.max_abs();
      for (std::size_t i = 0; i < mesh->n_nodes(); ++i)
        if (!mesh->is_boundary(i))
          input.values()[i] += scale * unit(rng);
    }

    std::optional<BalanceResult> step;
    try
    {
      balance.set_iterate(input);
      step = balance.find_balanced_alpha();
    }
    catch (NotSignChanging const &e)
    {
      trace.stop_reason = StopReason::no_sign_change;
      trace.stop_message = e.what();
    }
    catch (NoSignChange const &e)
    {
      trace.stop_reason = StopReason::no_sign_change;
      trace.stop_message = e.what();
    }
    catch (NonConvergence const &e)
    {
      trace.stop_reason = StopReason::solver_failure;
      trace.stop_message = e.what();
    }
    if (!step)
      break;

    IterationState state =
        make_state(k + 1, std::move(step->u_next), cfg.p, cfg.zero_tol, deg);
    state.alpha = step->alpha;
    state.beta = step->beta;
    state.fevals = step->fevals;
    state.newton_iterations = step->newton_iterations;
    FeFunction const diff = state.u - prev.u;
    state.diff_w = grad_lp_norm(diff, cfg.p);
    state.diff_lp = lp_norm(diff, cfg.p, deg);

    double const R_new = total_or_nan(state.rayleigh);
    double const R_old = total_or_nan(prev.rayleigh);
    if (k == 0)
    {
      eta_floor = state.lp_norm / 100.;
      eta_cap = 100. * state.lp_norm;
    }
    if (cfg.check_invariants)
    {
      auto const flag = [&](char const *kind, double value, double limit) {
        trace.invariant_violations.push_back({k + 1, kind, value, limit});
      };
      if (k >= 1 && R_new > R_old * (1. + cfg.invariant_tol))
        flag("monotonicity", R_new, R_old * (1. + cfg.invariant_tol));
      RayleighReport const &rq = state.rayleigh;
      double const gap = rq.sign_changing()
                             ? std::abs(*rq.plus - *rq.minus)
                             : std::numeric_limits<double>::infinity();
      if (!(gap <= cfg.root.F_tol * R_new))
        flag("balance", gap, cfg.root.F_tol * R_new);
      if (state.lp_norm < eta_floor)
        flag("norm_bounds", state.lp_norm, eta_floor);
      else if (state.lp_norm > eta_cap)
        flag("norm_bounds", state.lp_norm, eta_cap);
    }

    trace.states.push_back(std::move(state));
    IterationState const &cur = trace.states.back();
    if (k + 1 >= 2)
    {
      if (std::abs(R_new - R_old) < cfg.rq_stop_tol * R_old)
      {
        trace.stop_reason = StopReason::rq_stalled;
        break;
      }
      if (*cur.diff_w < cfg.diff_stop_tol * cur.grad_norm)
      {
        trace.stop_reason = StopReason::diff_small;
        break;
      }
    }
    if (k + 1 == cfg.max_iters)
      trace.stop_reason = StopReason::max_iters;
  }

  trace.R_star_estimate = total_or_nan(trace.last().rayleigh);
  double const e = 1. / (cfg.p - 1.);
  trace.lp_norm_limit_pred =
      std::pow(trace.alpha_star / trace.R_star_estimate, e);
  trace.w_norm_limit_pred = std::pow(
      trace.alpha_star / std::pow(trace.R_star_estimate, 1. / cfg.p), e);
  return trace;
}

ConvergenceReport convergence_diagnostics(RunTrace const &trace)
{
  std::size_t const n = trace.states.size();
  if (n < 3)
    throw TraceTooShort("convergence diagnostics need at least three states");
  IterationState const &last = trace.last();
  ConvergenceReport rep;
  rep.alpha_gap = std::abs(last.alpha.value_or(0.) - trace.alpha_star);
  rep.beta_gap = std::abs(last.beta.value_or(0.) - trace.alpha_star);
  rep.lp_norm_gap = std::abs(last.lp_norm - trace.lp_norm_limit_pred);
  rep.w_norm_gap = std::abs(last.grad_norm - trace.w_norm_limit_pred);
  rep.lp_norm_rel_gap = rep.lp_norm_gap / trace.lp_norm_limit_pred;
  rep.w_norm_rel_gap = rep.w_norm_gap / trace.w_norm_limit_pred;

  auto const R = [&](std::size_t i) {
    return total_or_nan(trace.states[i].rayleigh);
  };
  double const d1 = R(n - 2) - R(n - 1);
  double const d0 = R(n - 3) - R(n - 2);
  rep.rq_contraction = d0 != 0. ? d1 / d0 : 0.;
  auto const &w1 = trace.states[n - 1].diff_w;
  auto const &w0 = trace.states[n - 2].diff_w;
  rep.diff_contraction = (w1 && w0 && *w0 > 0.) ? *w1 / *w0 : 0.;
  return rep;
}

FirstEigenResult run_first_eigen_iteration(std::shared_ptr<Mesh const> mesh,
                                           FeFunction const &u0, int iters,
                                           PPoissonConfig const &cfg)
{
  if (iters < 1)
    throw InvalidArgument("iters must be >= 1");
  PPoissonSolver solver(mesh, cfg);
  FeFunction u = u0;
  FirstEigenResult out{.u = u0, .rayleigh = {}};
  for (int k = 0; k < iters; ++k)
  {
    FeFunction const u_tilde = normalize_lp(u, cfg.p, cfg.quad_degree);
    LoadVector const load =
        signed_power_load(u_tilde, cfg.p, solver.dofs(), cfg.quad_degree);
    auto [v, report] = solver.solve(load, &u);
    if (!report.converged)
      throw NonConvergence("first-eigenvalue iteration: solve failed");
    u = std::move(v);
    out.rayleigh.push_back(
        rayleigh(u, cfg.p, default_zero_tol, cfg.quad_degree).total.value());
  }
  out.u = std::move(u);
  return out;
}

namespace
{

std::string fmt17(std::optional<double> const &v)
{
  if (!v)
    return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

} // namespace

void write_trace_csv(std::ostream &out, RunTrace const &trace)
{
  out << trace_csv_header << '\n';
  for (IterationState const &s : trace.states)
  {
    RayleighReport const &rq = s.rayleigh;
    out << s.k << ',' << fmt17(s.alpha) << ',' << fmt17(s.beta) << ','
        << fmt17(rq.total) << ',' << fmt17(rq.plus) << ',' << fmt17(rq.minus)
        << ',' << fmt17(s.lp_norm) << ',' << fmt17(s.diff_w) << ','
        << fmt17(s.diff_lp) << '\n';
  }
}

void write_trace_summary(std::ostream &out, RunTrace const &trace)
{
  using nlohmann::json;
  auto const opt = [](std::optional<double> const &v) -> json {
    return v ? json(*v) : json(nullptr);
  };
  IterationState const &last = trace.last();
  json j;
  j["p"] = trace.p;
  j["beta"] = trace.beta.name();
  j["alpha_star"] = trace.alpha_star;
  j["iterations"] = last.k;
  j["R_star"] = trace.R_star_estimate;
  j["alpha_last"] = opt(last.alpha);
  j["beta_last"] = opt(last.beta);
  j["lp_norm_last"] = last.lp_norm;
  j["grad_norm_last"] = last.grad_norm;
  j["lp_norm_limit_pred"] = trace.lp_norm_limit_pred;
  j["w_norm_limit_pred"] = trace.w_norm_limit_pred;
  j["stop_reason"] = to_string(trace.stop_reason);
  if (!trace.stop_message.empty())
    j["stop_message"] = trace.stop_message;
  json R = json::array();
  for (IterationState const &s : trace.states)
    R.push_back(opt(s.rayleigh.total));
  j["R"] = R;
  json viol = json::array();
  for (InvariantViolation const &v : trace.invariant_violations)
    viol.push_back(
        {{"k", v.k}, {"kind", v.kind}, {"value", v.value}, {"limit", v.limit}});
  j["invariant_violations"] = viol;
  out << j.dump(2) << '\n';
}

} // namespace plap
