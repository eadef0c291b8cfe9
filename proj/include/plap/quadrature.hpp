#pragma once

#include <array>
#include <vector>

namespace plap
{

/// Quadrature on the reference simplex in barycentric coordinates.  Weights
/// are positive and sum to 1, so an element integral is
/// `volume * sum_q w_q f(x_q)`.
struct QuadratureRule
{
  int dimension = 0;
  int degree = 0;
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// Smallest available rule exact for polynomials of total degree `degree` on
/// the reference simplex.  Supported degrees are 1..7.  Triangle rules up to
/// degree 5 are fully symmetric; degrees 6 and 7 use a collapsed Gauss
/// product rule.
QuadratureRule simplex_quadrature(int dimension, int degree);

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre_unit(int n, std::vector<double> &nodes,
                         std::vector<double> &weights);

} // namespace plap
