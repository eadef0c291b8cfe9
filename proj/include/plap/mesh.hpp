#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

namespace plap
{

/// How each rectangular cell of a structured mesh is cut into two triangles.
enum class DiagonalPattern
{
  /// Every cell is split along the diagonal from its lower-left to its
  /// upper-right corner.
  fixed,
  /// Alternating diagonals ("union jack"); with an even cell count per side
  /// the mesh is invariant under both mid-line reflections.
  union_jack
};

using Point = std::array<double, 2>;

/// Conforming simplicial mesh of an interval (segments) or an axis-aligned
/// rectangle (triangles).  Immutable after construction.
///
/// Elements always store `dimension + 1` node indices; for 1D meshes the third
/// entry of each element is unused.  Triangles are counter-clockwise.
class Mesh
{
public:
  using Element = std::array<std::size_t, 3>;

  int dimension() const { return _dimension; }
  std::size_t n_nodes() const { return _nodes.size(); }
  std::size_t n_elements() const { return _elements.size(); }
  std::size_t nodes_per_element() const { return _dimension + 1; }

  Point const &node(std::size_t i) const { return _nodes[i]; }
  std::vector<Point> const &nodes() const { return _nodes; }
  Element const &element(std::size_t e) const { return _elements[e]; }
  std::vector<Element> const &elements() const { return _elements; }
  double element_volume(std::size_t e) const { return _volumes[e]; }
  std::vector<double> const &element_volumes() const { return _volumes; }

  bool is_boundary(std::size_t i) const { return _boundary[i]; }
  std::vector<std::size_t> boundary_nodes() const;

  /// Bounding box extents; for 1D meshes height() is 0.
  double width() const { return _extent[0]; }
  double height() const { return _extent[1]; }
  /// |Omega|, the sum of all element measures.
  double measure() const;

  /// Gradients of the element's barycentric basis functions, one row per local
  /// node; constant on the element.  Rows have `dimension()` meaningful
  /// entries.
  std::array<Point, 3> const &basis_gradients(std::size_t e) const
  {
    return _gradients[e];
  }

private:
  friend Mesh build_rect_mesh(std::size_t, std::size_t, double, double,
                              DiagonalPattern);
  friend Mesh build_interval_mesh(std::size_t, double);

  void finalize();

  int _dimension = 0;
  Point _extent{0., 0.};
  std::vector<Point> _nodes;
  std::vector<Element> _elements;
  std::vector<double> _volumes;
  std::vector<bool> _boundary;
  std::vector<std::array<Point, 3>> _gradients;
};

/// Uniform triangulation of [0, width] x [0, height] with nx * ny cells, each
/// cut into two triangles.  Nodes are numbered row by row (x fastest).
Mesh build_rect_mesh(std::size_t nx, std::size_t ny, double width,
                     double height,
                     DiagonalPattern pattern = DiagonalPattern::fixed);

/// n equal segments on [0, length].
Mesh build_interval_mesh(std::size_t n, double length);

/// Contiguous numbering of the interior (non-Dirichlet) nodes.
class DofMap
{
public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit DofMap(Mesh const &mesh);

  std::size_t n_dofs() const { return _to_node.size(); }
  /// Solver index of a node, or npos for boundary nodes.
  std::size_t dof(std::size_t node) const { return _to_dof[node]; }
  std::size_t node(std::size_t dof) const { return _to_node[dof]; }

private:
  std::vector<std::size_t> _to_dof;
  std::vector<std::size_t> _to_node;
};

DofMap interior_dof_map(Mesh const &mesh);

/// Plain-text dump: "x y" (or "x") per node, then one line of node indices per
/// element.
void write_mesh(std::ostream &out, Mesh const &mesh);

} // namespace plap
