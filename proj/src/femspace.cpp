#include "plap/femspace.hpp"

#include "plap/errors.hpp"

#include <array>
#include <cmath>
#include <mutex>
#include <ostream>

namespace plap
{

FeFunction::FeFunction(std::shared_ptr<Mesh const> mesh)
    : _mesh(std::move(mesh)), _values(Eigen::VectorXd::Zero(_mesh->n_nodes()))
{
}

FeFunction::FeFunction(std::shared_ptr<Mesh const> mesh,
                       Eigen::VectorXd values)
    : _mesh(std::move(mesh)), _values(std::move(values))
{
  if (static_cast<std::size_t>(_values.size()) != _mesh->n_nodes())
    throw InvalidArgument("FeFunction: value count does not match node count");
}

FeFunction
FeFunction::interpolate(std::shared_ptr<Mesh const> mesh,
                        std::function<double(Point const &)> const &f)
{
  Eigen::VectorXd values(mesh->n_nodes());
  for (std::size_t i = 0; i < mesh->n_nodes(); ++i)
    values[i] = f(mesh->node(i));
  return FeFunction(std::move(mesh), std::move(values));
}

bool FeFunction::is_dirichlet_admissible(double tol) const
{
  for (std::size_t i = 0; i < _mesh->n_nodes(); ++i)
    if (_mesh->is_boundary(i) && std::abs(_values[i]) > tol)
      return false;
  return true;
}

FeFunction &FeFunction::operator*=(double c)
{
  _values *= c;
  return *this;
}

FeFunction &FeFunction::operator+=(FeFunction const &other)
{
  _values += other._values;
  return *this;
}

FeFunction &FeFunction::operator-=(FeFunction const &other)
{
  _values -= other._values;
  return *this;
}

FeFunction operator*(double c, FeFunction u) { return u *= c; }
FeFunction operator+(FeFunction u, FeFunction const &v) { return u += v; }
FeFunction operator-(FeFunction u, FeFunction const &v) { return u -= v; }

QuadratureRule const &quadrature(int dimension, int degree)
{
  static std::array<std::array<QuadratureRule, 8>, 3> rules;
  static std::array<std::array<std::once_flag, 8>, 3> flags;
  if (dimension < 1 || dimension > 2 || degree < 1 || degree > 7)
    throw InvalidArgument("quadrature: unsupported dimension or degree");
  std::call_once(flags[dimension][degree], [&] {
    rules[dimension][degree] = simplex_quadrature(dimension, degree);
  });
  return rules[dimension][degree];
}

namespace
{

double integrate_abs_power(FeFunction const &u, double p, int quad_degree)
{
  Mesh const &mesh = u.mesh();
  QuadratureRule const &rule = quadrature(mesh.dimension(), quad_degree);
  std::size_t const nloc = mesh.nodes_per_element();
  auto const &v = u.values();
  double total = 0.;
  for (std::size_t e = 0; e < mesh.n_elements(); ++e)
  {
    auto const &el = mesh.element(e);
    double local = 0.;
    for (std::size_t q = 0; q < rule.size(); ++q)
    {
      double uq = 0.;
      for (std::size_t a = 0; a < nloc; ++a)
        uq += rule.points[q][a] * v[el[a]];
      if (uq != 0.)
        local += rule.weights[q] * std::pow(std::abs(uq), p);
    }
    total += local * mesh.element_volume(e);
  }
  return total;
}

double integrate_grad_power(FeFunction const &u, double p)
{
  Mesh const &mesh = u.mesh();
  std::size_t const nloc = mesh.nodes_per_element();
  auto const &v = u.values();
  double total = 0.;
  for (std::size_t e = 0; e < mesh.n_elements(); ++e)
  {
    auto const &el = mesh.element(e);
    auto const &grad = mesh.basis_gradients(e);
    double gx = 0.;
    double gy = 0.;
    for (std::size_t a = 0; a < nloc; ++a)
    {
      gx += grad[a][0] * v[el[a]];
      gy += grad[a][1] * v[el[a]];
    }
    double const g2 = gx * gx + gy * gy;
    if (g2 > 0.)
      total += std::pow(g2, 0.5 * p) * mesh.element_volume(e);
  }
  return total;
}

void check_exponent(double p)
{
  if (!(p > 1.) || !std::isfinite(p))
    throw InvalidArgument("exponent p must lie in (1, inf)");
}

} // namespace

double lp_norm(FeFunction const &u, double p, int quad_degree)
{
  check_exponent(p);
  return std::pow(integrate_abs_power(u, p, quad_degree), 1. / p);
}

double grad_lp_norm(FeFunction const &u, double p)
{
  check_exponent(p);
  return std::pow(integrate_grad_power(u, p), 1. / p);
}

FeFunction positive_part(FeFunction const &u)
{
  return FeFunction(u.mesh_ptr(), u.values().cwiseMax(0.));
}

FeFunction negative_part(FeFunction const &u)
{
  return FeFunction(u.mesh_ptr(), (-u.values()).cwiseMax(0.));
}

RayleighReport rayleigh(FeFunction const &u, double p, double zero_tol,
                        int quad_degree)
{
  check_exponent(p);
  RayleighReport r;
  FeFunction const up = positive_part(u);
  FeFunction const um = negative_part(u);
  r.lp_norm = lp_norm(u, p, quad_degree);
  r.lp_norm_plus = lp_norm(up, p, quad_degree);
  r.lp_norm_minus = lp_norm(um, p, quad_degree);
  r.grad_norm = grad_lp_norm(u, p);
  r.grad_norm_plus = grad_lp_norm(up, p);
  r.grad_norm_minus = grad_lp_norm(um, p);

  constexpr double absolute_floor = 1e-200;
  if (!(r.lp_norm > absolute_floor))
    return r;
  auto const quotient = [p](double grad, double lp) {
    return std::pow(grad / lp, p);
  };
  r.total = quotient(r.grad_norm, r.lp_norm);
  double const threshold = zero_tol * r.lp_norm;
  if (r.lp_norm_plus > threshold)
    r.plus = quotient(r.grad_norm_plus, r.lp_norm_plus);
  if (r.lp_norm_minus > threshold)
    r.minus = quotient(r.grad_norm_minus, r.lp_norm_minus);
  return r;
}

FeFunction normalize_lp(FeFunction const &u, double p, int quad_degree)
{
  double const norm = lp_norm(u, p, quad_degree);
  if (!(norm > 0.))
    throw InvalidArgument("normalize_lp: zero function");
  return (1. / norm) * u;
}

double clipping_defect(FeFunction const &u, double p)
{
  double const whole = integrate_grad_power(u, p);
  if (!(whole > 0.))
    return 0.;
  double const parts = integrate_grad_power(positive_part(u), p) +
                       integrate_grad_power(negative_part(u), p);
  return std::abs(parts - whole) / whole;
}

void write_function(std::ostream &out, FeFunction const &u)
{
  auto const old_precision = out.precision(17);
  Mesh const &mesh = u.mesh();
  for (std::size_t i = 0; i < mesh.n_nodes(); ++i)
  {
    out << mesh.node(i)[0] << ' ';
    if (mesh.dimension() == 2)
      out << mesh.node(i)[1] << ' ';
    out << u[i] << '\n';
  }
  out.precision(old_precision);
}

} // namespace plap
