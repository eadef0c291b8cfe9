#include "plap/quadrature.hpp"

#include "plap/errors.hpp"

#include <cmath>
#include <numbers>

namespace plap
{

void gauss_legendre_unit(int n, std::vector<double> &nodes,
                         std::vector<double> &weights)
{
  nodes.assign(n, 0.);
  weights.assign(n, 0.);
  for (int i = 0; i < n; ++i)
  {
    // Newton iteration on P_n starting from the Chebyshev-like guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.;
    for (int it = 0; it < 100; ++it)
    {
      double p0 = 1.;
      double p1 = x;
      for (int k = 2; k <= n; ++k)
      {
        double const pk = ((2. * k - 1.) * x * p1 - (k - 1.) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.);
      double const dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    {
      double p0 = 1.;
      double p1 = x;
      for (int k = 2; k <= n; ++k)
      {
        double const pk = ((2. * k - 1.) * x * p1 - (k - 1.) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.);
    }
    nodes[i] = 0.5 * (1. - x);
    weights[i] = 1. / ((1. - x * x) * dp * dp);
  }
}

namespace
{

void add_orbit_3(QuadratureRule &rule, double a, double w)
{
  double const b = 1. - 2. * a;
  rule.points.push_back({a, a, b});
  rule.points.push_back({a, b, a});
  rule.points.push_back({b, a, a});
  for (int i = 0; i < 3; ++i)
    rule.weights.push_back(w);
}

QuadratureRule collapsed_triangle_rule(int degree)
{
  // Duffy map (s, t) -> (x, y) = (s, t (1 - s)) with Jacobian (1 - s); the
  // integrand has degree + 1 in s and degree in t.
  int const n = (degree + 2 + 1) / 2;
  std::vector<double> x, w;
  gauss_legendre_unit(n, x, w);
  QuadratureRule rule;
  rule.dimension = 2;
  rule.degree = degree;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
    {
      double const s = x[i];
      double const t = x[j] * (1. - s);
      rule.points.push_back({1. - s - t, s, t});
      // Reference area is 1/2, so normalized weight is 2 * w_i w_j (1 - s).
      rule.weights.push_back(2. * w[i] * w[j] * (1. - s));
    }
  return rule;
}

} // namespace

QuadratureRule simplex_quadrature(int dimension, int degree)
{
  if (degree < 1 || degree > 7)
    throw InvalidArgument("quadrature degree must be in 1..7");
  QuadratureRule rule;
  rule.dimension = dimension;
  if (dimension == 1)
  {
    int const n = (degree + 2) / 2;
    std::vector<double> x, w;
    gauss_legendre_unit(n, x, w);
    rule.degree = 2 * n - 1;
    for (int i = 0; i < n; ++i)
    {
      rule.points.push_back({1. - x[i], x[i], 0.});
      rule.weights.push_back(w[i]);
    }
    return rule;
  }
  if (dimension != 2)
    throw InvalidArgument("quadrature: dimension must be 1 or 2");

  if (degree == 1)
  {
    rule.degree = 1;
    rule.points.push_back({1. / 3., 1. / 3., 1. / 3.});
    rule.weights.push_back(1.);
  }
  else if (degree == 2)
  {
    rule.degree = 2;
    add_orbit_3(rule, 1. / 6., 1. / 3.);
  }
  else if (degree <= 4)
  {
    // Strang-Fix / Dunavant six-point rule.
    rule.degree = 4;
    add_orbit_3(rule, 0.44594849091596488632, 0.22338158967801146570);
    add_orbit_3(rule, 0.09157621350977074346, 0.10995174365532186764);
  }
  else if (degree == 5)
  {
    // Radon's seven-point rule.
    rule.degree = 5;
    double const s15 = std::sqrt(15.);
    rule.points.push_back({1. / 3., 1. / 3., 1. / 3.});
    rule.weights.push_back(9. / 40.);
    add_orbit_3(rule, (6. - s15) / 21., (155. - s15) / 1200.);
    add_orbit_3(rule, (6. + s15) / 21., (155. + s15) / 1200.);
  }
  else
  {
    rule = collapsed_triangle_rule(degree);
  }
  return rule;
}

} // namespace plap
