// Independent reference formulas shared by the test programs.
#pragma once

#include "plap/mesh.hpp"

#include <cmath>
#include <numbers>

namespace plap::test
{

/// Solution of -(|u'|^(p-2) u')' = 1 on (0, 1), u(0) = u(1) = 0, obtained by
/// integrating twice: the flux is 1/2 - x.
inline double torsion_1d(double x, double p)
{
  double const q = p / (p - 1.);
  return (p - 1.) / p * (std::pow(0.5, q) - std::pow(std::abs(x - 0.5), q));
}

/// Average of x^a y^b over the reference triangle (0,0), (1,0), (0,1):
/// 2 a! b! / (a + b + 2)!.
inline double triangle_monomial_mean(int a, int b)
{
  return 2. * std::tgamma(a + 1.) * std::tgamma(b + 1.) /
         std::tgamma(a + b + 3.);
}

/// First Dirichlet eigenvalue of -Delta_p on (0, length).
inline double lambda1_interval(double p, double length = 1.)
{
  double const pi_p =
      2. * std::numbers::pi / (p * std::sin(std::numbers::pi / p));
  return (p - 1.) * std::pow(pi_p / length, p);
}

/// Bound of the continuous dependence estimate for p >= 2:
/// ||grad(v1 - v2)||_p <= 2^((p-2)/(p-1)) lambda1^(-1/(p(p-1)))
///                         ||f1 - f2||_p'^(1/(p-1)).
inline double continuous_dependence_bound(double p, double lambda1,
                                          double load_gap)
{
  return std::pow(2., (p - 2.) / (p - 1.)) *
         std::pow(lambda1, -1. / (p * (p - 1.))) *
         std::pow(load_gap, 1. / (p - 1.));
}

inline bool same_point(Point const &a, Point const &b, double tol = 1e-12)
{
  return std::abs(a[0] - b[0]) <= tol && std::abs(a[1] - b[1]) <= tol;
}

} // namespace plap::test
