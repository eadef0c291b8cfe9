#include "plap/mesh.hpp"

#include "plap/errors.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

namespace plap
{

std::vector<std::size_t> Mesh::boundary_nodes() const
{
  std::vector<std::size_t> result;
  for (std::size_t i = 0; i < _boundary.size(); ++i)
    if (_boundary[i])
      result.push_back(i);
  return result;
}

double Mesh::measure() const
{
  return std::accumulate(_volumes.begin(), _volumes.end(), 0.);
}

void Mesh::finalize()
{
  _volumes.resize(_elements.size());
  _gradients.resize(_elements.size());
  for (std::size_t e = 0; e < _elements.size(); ++e)
  {
    auto const &el = _elements[e];
    auto &grad = _gradients[e];
    if (_dimension == 1)
    {
      double const h = _nodes[el[1]][0] - _nodes[el[0]][0];
      if (!(h > 0.))
        throw DegenerateMesh("segment with non-positive length");
      _volumes[e] = h;
      grad[0] = {-1. / h, 0.};
      grad[1] = {1. / h, 0.};
      grad[2] = {0., 0.};
    }
    else
    {
      Point const &a = _nodes[el[0]];
      Point const &b = _nodes[el[1]];
      Point const &c = _nodes[el[2]];
      double const det =
          (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
      if (!(det > 0.))
        throw DegenerateMesh("triangle with non-positive area");
      _volumes[e] = 0.5 * det;
      // Gradient of the barycentric coordinate of node i is the rotated
      // opposite edge divided by twice the area.
      grad[0] = {(b[1] - c[1]) / det, (c[0] - b[0]) / det};
      grad[1] = {(c[1] - a[1]) / det, (a[0] - c[0]) / det};
      grad[2] = {(a[1] - b[1]) / det, (b[0] - a[0]) / det};
    }
  }
}

Mesh build_rect_mesh(std::size_t nx, std::size_t ny, double width,
                     double height, DiagonalPattern pattern)
{
  if (nx < 1 || ny < 1)
    throw InvalidArgument("build_rect_mesh: nx and ny must be >= 1");
  if (!(width > 0.) || !(height > 0.))
    throw InvalidArgument("build_rect_mesh: dimensions must be positive");

  Mesh mesh;
  mesh._dimension = 2;
  mesh._extent = {width, height};
  mesh._nodes.reserve((nx + 1) * (ny + 1));
  mesh._boundary.reserve((nx + 1) * (ny + 1));
  for (std::size_t j = 0; j <= ny; ++j)
    for (std::size_t i = 0; i <= nx; ++i)
    {
      // Exact endpoints so that refined meshes share the coarse nodes.
      double const x = (i == nx) ? width : width * static_cast<double>(i) / nx;
      double const y =
          (j == ny) ? height : height * static_cast<double>(j) / ny;
      mesh._nodes.push_back({x, y});
      mesh._boundary.push_back(i == 0 || i == nx || j == 0 || j == ny);
    }

  auto const id = [nx](std::size_t i, std::size_t j) {
    return j * (nx + 1) + i;
  };
  mesh._elements.reserve(2 * nx * ny);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i)
    {
      std::size_t const sw = id(i, j);
      std::size_t const se = id(i + 1, j);
      std::size_t const ne = id(i + 1, j + 1);
      std::size_t const nw = id(i, j + 1);
      bool const rising =
          pattern == DiagonalPattern::fixed || (i + j) % 2 == 0;
      if (rising)
      {
        mesh._elements.push_back({sw, se, ne});
        mesh._elements.push_back({sw, ne, nw});
      }
      else
      {
        mesh._elements.push_back({sw, se, nw});
        mesh._elements.push_back({se, ne, nw});
      }
    }
  mesh.finalize();
  return mesh;
}

Mesh build_interval_mesh(std::size_t n, double length)
{
  if (n < 2)
    throw InvalidArgument("build_interval_mesh: n must be >= 2");
  if (!(length > 0.))
    throw InvalidArgument("build_interval_mesh: length must be positive");

  Mesh mesh;
  mesh._dimension = 1;
  mesh._extent = {length, 0.};
  for (std::size_t i = 0; i <= n; ++i)
  {
    double const x = (i == n) ? length : length * static_cast<double>(i) / n;
    mesh._nodes.push_back({x, 0.});
    mesh._boundary.push_back(i == 0 || i == n);
  }
  for (std::size_t i = 0; i < n; ++i)
    mesh._elements.push_back({i, i + 1, 0});
  mesh.finalize();
  return mesh;
}

DofMap::DofMap(Mesh const &mesh) : _to_dof(mesh.n_nodes(), npos)
{
  for (std::size_t i = 0; i < mesh.n_nodes(); ++i)
    if (!mesh.is_boundary(i))
    {
      _to_dof[i] = _to_node.size();
      _to_node.push_back(i);
    }
}

DofMap interior_dof_map(Mesh const &mesh) { return DofMap(mesh); }

void write_mesh(std::ostream &out, Mesh const &mesh)
{
  auto const old_precision = out.precision(17);
  for (auto const &x : mesh.nodes())
  {
    out << x[0];
    if (mesh.dimension() == 2)
      out << ' ' << x[1];
    out << '\n';
  }
  for (auto const &el : mesh.elements())
  {
    out << el[0] << ' ' << el[1];
    if (mesh.dimension() == 2)
      out << ' ' << el[2];
    out << '\n';
  }
  out.precision(old_precision);
}

} // namespace plap
