#pragma once

#include "plap/mesh.hpp"
#include "plap/quadrature.hpp"

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>

namespace plap
{

inline constexpr int default_quadrature_degree = 4;
inline constexpr double default_zero_tol = 1e-8;

/// Continuous piecewise-linear function, one coefficient per mesh node.
class FeFunction
{
public:
  explicit FeFunction(std::shared_ptr<Mesh const> mesh);
  FeFunction(std::shared_ptr<Mesh const> mesh, Eigen::VectorXd values);

  static FeFunction interpolate(std::shared_ptr<Mesh const> mesh,
                                std::function<double(Point const &)> const &f);

  Mesh const &mesh() const { return *_mesh; }
  std::shared_ptr<Mesh const> const &mesh_ptr() const { return _mesh; }

  Eigen::VectorXd const &values() const { return _values; }
  Eigen::VectorXd &values() { return _values; }
  double operator[](std::size_t i) const { return _values[i]; }
  std::size_t size() const { return static_cast<std::size_t>(_values.size()); }

  /// Zero (within tol) at every boundary node.
  bool is_dirichlet_admissible(double tol = 0.) const;
  double max_abs() const { return _values.lpNorm<Eigen::Infinity>(); }

  FeFunction &operator*=(double c);
  FeFunction &operator+=(FeFunction const &other);
  FeFunction &operator-=(FeFunction const &other);

private:
  std::shared_ptr<Mesh const> _mesh;
  Eigen::VectorXd _values;
};

FeFunction operator*(double c, FeFunction u);
FeFunction operator+(FeFunction u, FeFunction const &v);
FeFunction operator-(FeFunction u, FeFunction const &v);

/// Cached rule for the mesh dimension; thread-safe.
QuadratureRule const &quadrature(int dimension, int degree);

/// ||u||_p over Omega, integrating |u|^p with the given quadrature degree.
double lp_norm(FeFunction const &u, double p,
               int quad_degree = default_quadrature_degree);
/// ||grad u||_p; exact since grad u is elementwise constant.
double grad_lp_norm(FeFunction const &u, double p);

/// Nodal clipping: (u+)_i = max(0, u_i).
FeFunction positive_part(FeFunction const &u);
/// Nodal clipping: (u-)_i = max(0, -u_i).
FeFunction negative_part(FeFunction const &u);

struct RayleighReport
{
  std::optional<double> total;
  std::optional<double> plus;
  std::optional<double> minus;
  double lp_norm = 0.;
  double lp_norm_plus = 0.;
  double lp_norm_minus = 0.;
  double grad_norm = 0.;
  double grad_norm_plus = 0.;
  double grad_norm_minus = 0.;

  bool sign_changing() const { return plus && minus; }
};

/// R[u], R+[u] and R-[u].  A part quotient is undefined when the part's L^p
/// norm is below zero_tol * ||u||_p; everything is undefined for u = 0.
RayleighReport rayleigh(FeFunction const &u, double p,
                        double zero_tol = default_zero_tol,
                        int quad_degree = default_quadrature_degree);

/// u / ||u||_p.  Throws InvalidArgument for a zero function.
FeFunction normalize_lp(FeFunction const &u, double p,
                        int quad_degree = default_quadrature_degree);

/// Relative mismatch |(||grad u+||^p + ||grad u-||^p) - ||grad u||^p| /
/// ||grad u||^p caused by clipping the parts at the nodes instead of
/// pointwise.  Zero when no element carries nodal values of strictly mixed
/// sign.
double clipping_defect(FeFunction const &u, double p);

/// Rows "x y value" (or "x value" in 1D), one per node.
void write_function(std::ostream &out, FeFunction const &u);

} // namespace plap
