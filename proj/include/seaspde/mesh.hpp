// Triangular FEM mesh over the observation domain plus an extension zone.
//
// Spherical domains are stored as piecewise-planar triangles between points
// on the unit sphere; planar domains carry a zero third coordinate. Basis
// functions live on non-boundary ("active") vertices: the outer rim of the
// extension carries the homogeneous Dirichlet condition and is excluded from
// the FEM system.
#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "seaspde/common.hpp"

namespace seaspde {

enum class Region { interior, extension };

struct Vertex {
  Eigen::Vector3d position;  // unit sphere, or (x, y, 0)
  int index = -1;
};

struct Triangle {
  std::array<int, 3> v{};
  Region flag = Region::interior;
};

struct Mesh {
  std::vector<Vertex> vertices;
  std::vector<Triangle> triangles;
  bool spherical = false;

  // Dirichlet bookkeeping: active_index[v] is the row of vertex v in the
  // reduced FEM system, or -1 on the outer boundary.
  std::vector<int> active_index;
  std::vector<char> on_boundary;
  int n_active = 0;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }

  // Chart coordinates of a vertex: (lon, lat) in degrees when spherical,
  // (x, y) otherwise. Cosine-basis fields are evaluated in this chart.
  Eigen::Vector2d chart_of(int vertex) const;
  Eigen::Vector2d chart_of_point(const Eigen::Vector3d& p) const;

  double triangle_area(int t) const;
  Eigen::Vector3d triangle_centroid(int t) const;
  Eigen::Vector2d triangle_chart_centroid(int t) const;
  double interior_area() const;
  double total_area() const;

  // Containing triangle of a chart-coordinate point and its barycentric
  // weights there; returns -1 if outside every triangle.
  int locate(const Eigen::Vector2d& chart_pt, Eigen::Vector3d* bary,
             double tol = 1e-9) const;
};

Eigen::Vector3d lonlat_to_xyz(const Eigen::Vector2d& lonlat_deg);

// Constrained-quality mesh of the given lon/lat points (degrees) plus a ring
// lattice of extension points out to extension_width_deg. Interior triangles
// are those whose centroid lies in the convex hull of the input points.
Mesh build_lonlat_mesh(const std::vector<Eigen::Vector2d>& lonlat_deg,
                       double extension_width_deg);

// Planar analogue working directly in (x, y) coordinates.
Mesh build_planar_mesh(const std::vector<Eigen::Vector2d>& xy,
                       double extension_width);

// M x n_vertices barycentric interpolation matrix; rows sum to one.
// Locations given in chart coordinates; throws DataError naming the first
// location that falls outside the mesh.
SpMat observation_matrix(const Mesh& mesh,
                         const std::vector<Eigen::Vector2d>& locations);

// Plain-text persistence: `v x y z` and `t i j k flag` lines.
void save_mesh(const Mesh& mesh, const std::string& path);
Mesh load_mesh(const std::string& path);

}  // namespace seaspde
