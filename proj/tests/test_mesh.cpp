#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <set>

#include "seaspde/mesh.hpp"
#include "testutil.hpp"

using namespace seaspde;
using namespace seaspde::testutil;

TEST_CASE("quad with no extension gives two interior triangles") {
  auto pts = grid_points(0, 0, 1, 1, 2, 2);
  Mesh m = build_lonlat_mesh(pts, 0.0);
  int interior = 0, extension = 0;
  for (const auto& t : m.triangles)
    (t.flag == Region::interior ? interior : extension)++;
  CHECK(interior == 2);
  CHECK(extension == 0);
  for (const auto& v : m.vertices)
    CHECK(std::abs(v.position.norm() - 1.0) < 1e-9);
}

TEST_CASE("extension triangles are flagged and interior count unchanged") {
  auto pts = grid_points(0, 0, 1, 1, 2, 2);
  Mesh m = build_lonlat_mesh(pts, 1.0);
  int interior = 0, extension = 0;
  for (const auto& t : m.triangles)
    (t.flag == Region::interior ? interior : extension)++;
  CHECK(interior == 2);
  CHECK(extension > 0);
  // Interior triangles reference only the original four vertices.
  for (const auto& t : m.triangles)
    if (t.flag == Region::interior)
      for (int k = 0; k < 3; ++k) CHECK(t.v[k] < 4);
}

TEST_CASE("Euler characteristic of a 10x10 planar grid mesh") {
  auto pts = grid_points(0, 0, 9, 9, 10, 10);
  Mesh m = build_planar_mesh(pts, 0.0);
  std::set<std::pair<int, int>> edges;
  for (const auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) {
      auto k = std::minmax(t.v[e], t.v[(e + 1) % 3]);
      edges.insert({k.first, k.second});
    }
  long V = m.n_vertices(), E = static_cast<long>(edges.size()),
       F = m.n_triangles();
  CHECK(V - E + F == 1);  // disk-like complex without the outer face
}

TEST_CASE("degenerate input is rejected") {
  std::vector<Eigen::Vector2d> collinear = {{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  CHECK_THROWS_AS(build_planar_mesh(collinear, 0.0), DataError);
  std::vector<Eigen::Vector2d> dup = {{0, 0}, {1, 0}, {0, 1}, {0, 0}};
  CHECK_THROWS_AS(build_planar_mesh(dup, 0.0), DataError);
  CHECK_THROWS_AS(build_planar_mesh({{0, 0}, {1, 1}}, 0.0), DataError);
}

TEST_CASE("observation matrix: vertex, centroid, linear reproduction") {
  auto pts = grid_points(0, 0, 4, 4, 5, 5);
  Mesh m = build_planar_mesh(pts, 1.0);

  // location exactly at vertex 7
  Eigen::Vector2d at_vertex = m.chart_of(7);
  SpMat A1 = observation_matrix(m, {at_vertex});
  CHECK(A1.nonZeros() == 1);
  CHECK(A1.coeff(0, 7) == doctest::Approx(1.0));

  // location at a triangle chart centroid: three weights of 1/3
  Eigen::Vector2d c = m.triangle_chart_centroid(0);
  SpMat A2 = observation_matrix(m, {c});
  CHECK(A2.nonZeros() == 3);
  for (int k = 0; k < A2.outerSize(); ++k)
    for (SpMat::InnerIterator it(A2, k); it; ++it)
      CHECK(it.value() == doctest::Approx(1.0 / 3.0));

  // random interior points reproduce affine functions exactly
  auto f = [](const Eigen::Vector2d& p) {
    return 0.3 * p.x() - 1.2 * p.y() + 0.7;
  };
  Eigen::VectorXd nodal(m.n_vertices());
  for (int v = 0; v < m.n_vertices(); ++v) nodal[v] = f(m.chart_of(v));
  std::vector<Eigen::Vector2d> q = {{0.37, 1.21}, {2.9, 3.01}, {1.5, 0.05}};
  SpMat A3 = observation_matrix(m, q);
  Eigen::VectorXd vals = A3 * nodal;
  for (size_t i = 0; i < q.size(); ++i)
    CHECK(vals[i] == doctest::Approx(f(q[i])).epsilon(1e-12));

  // rows sum to one
  Eigen::VectorXd rowsum = A3 * Eigen::VectorXd::Ones(m.n_vertices());
  for (int i = 0; i < rowsum.size(); ++i)
    CHECK(rowsum[i] == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(observation_matrix(m, {{100.0, 100.0}}), DataError);
}

TEST_CASE("interior area is invariant under refinement") {
  auto coarse = build_planar_mesh(grid_points(0, 0, 3, 3, 4, 4), 1.0);
  auto fine = build_planar_mesh(grid_points(0, 0, 3, 3, 13, 13), 1.0);
  CHECK(coarse.interior_area() == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(fine.interior_area() == doctest::Approx(9.0).epsilon(1e-12));
}

TEST_CASE("interior triangles reference grid vertices; interior observations "
          "avoid extension-exclusive nodes") {
  auto pts = grid_points(0, 0, 4, 4, 5, 5);
  Mesh m = build_planar_mesh(pts, 1.5);
  for (const auto& t : m.triangles)
    if (t.flag == Region::interior)
      for (int k = 0; k < 3; ++k) CHECK(t.v[k] < 25);
  SpMat A = observation_matrix(m, {{2.1, 2.2}});
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) CHECK(it.col() < 25);
}

TEST_CASE("mesh save/load round trip") {
  auto pts = grid_points(-10, 40, -5, 44, 4, 4);
  Mesh m = build_lonlat_mesh(pts, 2.0);
  std::string path = "mesh_roundtrip_test.txt";
  save_mesh(m, path);
  Mesh l = load_mesh(path);
  std::remove(path.c_str());
  REQUIRE(l.n_vertices() == m.n_vertices());
  REQUIRE(l.n_triangles() == m.n_triangles());
  CHECK(l.spherical == m.spherical);
  CHECK(l.n_active == m.n_active);
  for (int v = 0; v < m.n_vertices(); ++v)
    CHECK((l.vertices[v].position - m.vertices[v].position).norm() < 1e-15);
  for (int t = 0; t < m.n_triangles(); ++t)
    CHECK(l.triangles[t].flag == m.triangles[t].flag);
}
