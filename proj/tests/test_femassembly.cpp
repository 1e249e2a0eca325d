#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "seaspde/femassembly.hpp"
#include "testutil.hpp"

using namespace seaspde;
using namespace seaspde::testutil;

namespace {
DeformationParams zero_deformation() {
  DeformationParams d;  // empty cosine fields evaluate to zero
  return d;
}

DeformationParams constant_kappa(double kappa) {
  // kappa = exp(-(h1+h2)/2) with h3 = 0; set h1 = h2 = -log(kappa).
  DeformationParams d;
  d.h1.coefficients(0, 0) = -std::log(kappa);
  d.h2.coefficients(0, 0) = -std::log(kappa);
  return d;
}
}  // namespace

TEST_CASE("lumped mass of a single unit-area triangle") {
  // Right triangle with legs sqrt(2): area 1.
  std::vector<Eigen::Vector2d> pts = {
      {0, 0}, {std::sqrt(2.0), 0}, {0, std::sqrt(2.0)}};
  Mesh m = build_planar_mesh(pts, 0.0);
  REQUIRE(m.n_triangles() == 1);
  Eigen::VectorXd C = assemble_mass(m);
  for (int i = 0; i < 3; ++i)
    CHECK(C[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("mass diagonal sums to the mesh area, stable under refinement") {
  auto coarse = build_planar_mesh(grid_points(0, 0, 2, 2, 5, 5), 0.0);
  auto fine = build_planar_mesh(grid_points(0, 0, 2, 2, 9, 9), 0.0);
  CHECK(assemble_mass(coarse).sum() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(assemble_mass(fine).sum() == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("stiffness of the unit right triangle matches hand assembly") {
  std::vector<Eigen::Vector2d> pts = {{0, 0}, {1, 0}, {0, 1}};
  Mesh m = build_planar_mesh(pts, 0.0);
  auto om = assemble_operator(m, zero_deformation(), 2.0);
  // Hand-assembled local stiffness for vertices (0,0), (1,0), (0,1):
  // gradients (-1,-1), (1,0), (0,1); area 1/2.
  Eigen::Matrix3d G_ref;
  G_ref << 1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5;
  Eigen::Matrix3d G = dense(om.G);
  CHECK((G - G_ref).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("constant kappa makes B the scaled consistent mass (alpha = 2)") {
  const double c = 3.7;
  Mesh m = build_planar_mesh(grid_points(0, 0, 2, 2, 4, 4), 0.0);
  auto om = assemble_operator(m, constant_kappa(c), 2.0);
  Eigen::MatrixXd B = dense(om.B);
  Eigen::MatrixXd Mc = dense(consistent_mass(m));
  CHECK((B - c * Mc).cwiseAbs().maxCoeff() < 1e-12 * c);
}

TEST_CASE("K is symmetric for non-constant coefficient fields") {
  Mesh m = build_planar_mesh(grid_points(0, 0, 5, 3, 11, 7), 1.0);
  DeformationParams d;
  d.h1 = CosineField(2, {0, 0, 5, 3});
  d.h2 = CosineField(2, {0, 0, 5, 3});
  d.h3 = CosineField(2, {0, 0, 5, 3});
  d.h1.coefficients << 0.3, -0.2, 0.1, 0.4, 0.0, -0.3, 0.2, 0.1, 0.05;
  d.h2.coefficients << -0.1, 0.2, 0.0, 0.3, -0.4, 0.1, 0.0, 0.2, -0.1;
  d.h3.coefficients << 0.5, 0.1, -0.2, 0.0, 0.3, 0.1, -0.1, 0.0, 0.2;
  auto om = assemble_operator(m, d, 2.7);
  Eigen::MatrixXd K = dense(om.K);
  double scale = K.cwiseAbs().maxCoeff();
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-10 * scale);
}

TEST_CASE("serial and parallel assembly agree bit for bit") {
  Mesh m = build_planar_mesh(grid_points(0, 0, 6, 6, 13, 13), 1.0);
  DeformationParams d;
  d.h1 = CosineField(1, {0, 0, 6, 6});
  d.h1.coefficients << 0.2, -0.4, 0.6, 0.3;
  d.h2 = d.h1;
  d.h3 = CosineField(0, {0, 0, 6, 6});
  d.h3.coefficients(0, 0) = 0.5;
  auto a = assemble_operator(m, d, 1.7, nullptr, Exec::serial);
  auto b = assemble_operator(m, d, 1.7, nullptr, Exec::parallel);
  CHECK((dense(a.K) - dense(b.K)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cross matrices: rho = 0, 1, -1") {
  Mesh m = build_planar_mesh(grid_points(0, 0, 3, 3, 6, 6), 1.0);
  auto om = assemble_operator(m, zero_deformation(), 2.0);
  Eigen::VectorXd C = assemble_mass(m);
  BoundingBox box{0, 0, 3, 3};

  CrossCorrField rho0;
  rho0.rho = CosineField(0, box);
  auto cm0 = assemble_cross(m, rho0, om.K, C);
  CHECK(dense(cm0.C_rho).cwiseAbs().maxCoeff() == 0.0);
  CHECK(dense(cm0.K_rho).cwiseAbs().maxCoeff() == 0.0);

  CrossCorrField rho1;
  rho1.rho = CosineField(0, box);
  rho1.rho.coefficients(0, 0) = 1.0;
  auto cm1 = assemble_cross(m, rho1, om.K, C);
  CHECK((dense(cm1.C_rho).diagonal() - C).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((dense(cm1.K_rho) + dense(om.K)).cwiseAbs().maxCoeff() < 1e-12);

  CrossCorrField rhom1;
  rhom1.rho = CosineField(0, box);
  rhom1.rho.coefficients(0, 0) = -1.0;
  auto cmm = assemble_cross(m, rhom1, om.K, C);
  CHECK((dense(cmm.K_rho) - dense(om.K)).cwiseAbs().maxCoeff() < 1e-12);

  // invariant: K_rho = -C^{-1} C_rho K_Y on construction
  auto cm = assemble_cross(m, rho1, om.K, C);
  Eigen::MatrixXd lhs = dense(cm.K_rho);
  Eigen::MatrixXd rhs =
      -(C.cwiseInverse().asDiagonal() * dense(cm.C_rho) * dense(om.K));
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);

  SpMat wrong(4, 4);
  CHECK_THROWS_AS(assemble_cross(m, rho1, wrong, Eigen::VectorXd::Ones(4)),
                  ConfigError);
}

TEST_CASE("nnz grows linearly with vertex count") {
  auto m1 = build_planar_mesh(grid_points(0, 0, 4, 4, 9, 9), 0.0);
  auto m2 = build_planar_mesh(grid_points(0, 0, 4, 4, 17, 17), 0.0);
  auto k1 = assemble_operator(m1, zero_deformation(), 2.0);
  auto k2 = assemble_operator(m2, zero_deformation(), 2.0);
  double per1 = double(k1.K.nonZeros()) / m1.n_vertices();
  double per2 = double(k2.K.nonZeros()) / m2.n_vertices();
  CHECK(per2 < 1.3 * per1);  // bounded by mesh adjacency
}

TEST_CASE("COO export writes i j value lines") {
  Mesh m = build_planar_mesh(grid_points(0, 0, 1, 1, 2, 2), 0.0);
  auto om = assemble_operator(m, zero_deformation(), 2.0);
  std::string path = "coo_test.txt";
  export_coo(om.K, path);
  std::ifstream f(path);
  int i, j;
  double v;
  int count = 0;
  while (f >> i >> j >> v) ++count;
  std::remove(path.c_str());
  CHECK(count == om.K.nonZeros());
}
