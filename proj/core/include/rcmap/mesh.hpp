#ifndef RCMAP_MESH_HPP
#define RCMAP_MESH_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace rcmap {

struct Rect {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

/// Conforming triangulation with counter-clockwise triangles and
/// per-edge adjacency. Immutable after construction.
class TriMesh {
 public:
  struct Tri {
    std::array<int, 3> v;
  };

  TriMesh(std::vector<Eigen::Vector2d> nodes, std::vector<Tri> triangles);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_triangles() const { return static_cast<int>(tris_.size()); }
  const std::vector<Eigen::Vector2d>& nodes() const { return nodes_; }
  const std::vector<Tri>& triangles() const { return tris_; }

  double area(int tri) const;
  Eigen::Vector2d centroid(int tri) const;

  /// Neighbor across the edge (v[e], v[(e+1)%3]) of triangle `tri`, or -1.
  int neighbor(int tri, int e) const { return neighbors_[tri][e]; }

  /// Nodes connected to each node by a mesh edge (sorted).
  const std::vector<std::vector<int>>& node_adjacency() const {
    return node_adj_;
  }

  double min_angle_deg() const;
  double max_edge_length() const;
  double longest_edge_of(int tri) const;
  Rect bounds() const;

  /// Index of a triangle containing p (edges inclusive), or -1.
  int locate(const Eigen::Vector2d& p) const;
  Eigen::Vector3d barycentric(int tri, const Eigen::Vector2d& p) const;

  /// Interior edges have exactly two incident triangles, boundary edges one.
  bool is_conforming() const;

  void write(std::ostream& os) const;
  static TriMesh read(std::istream& is);

 private:
  std::vector<Eigen::Vector2d> nodes_;
  std::vector<Tri> tris_;
  std::vector<std::array<int, 3>> neighbors_;
  std::vector<std::vector<int>> node_adj_;

  // uniform bucket grid for point location
  Rect bounds_;
  int grid_nx_ = 0, grid_ny_ = 0;
  std::vector<std::vector<int>> buckets_;

  void build_adjacency();
  void build_buckets();
};

/// Structured triangulation of a rectangle: nx*ny nodes, every cell split
/// along the same diagonal.
TriMesh uniform_initial_mesh(const Rect& domain, int nx, int ny);

constexpr std::size_t kNoRefineBudget = std::numeric_limits<std::size_t>::max();

/// Longest-edge bisection of the marked triangles with recursive
/// conformity closure (Rivara). Marked triangles are processed in the
/// given order; no new bisection is initiated once the triangle count
/// reaches `max_triangles` (closure always completes).
TriMesh refine(const TriMesh& mesh, const std::vector<int>& marked,
               std::size_t max_triangles = kNoRefineBudget);

/// Piecewise-linear nodal (hat) basis over a TriMesh.
class NodalBasis {
 public:
  explicit NodalBasis(std::shared_ptr<const TriMesh> mesh)
      : mesh_(std::move(mesh)) {}

  const TriMesh& mesh() const { return *mesh_; }

  /// Hat value of node l at p. Throws std::domain_error outside the mesh.
  double eval(int l, const Eigen::Vector2d& p) const;

  /// Piecewise-linear interpolant of nodal values at p.
  double interpolate(const Eigen::VectorXd& nodal,
                     const Eigen::Vector2d& p) const;

 private:
  std::shared_ptr<const TriMesh> mesh_;
};

}  // namespace rcmap

#endif
