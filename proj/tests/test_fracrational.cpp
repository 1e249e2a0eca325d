#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "seaspde/femassembly.hpp"
#include "seaspde/fracrational.hpp"
#include "seaspde/rngutil.hpp"
#include "testutil.hpp"

using namespace seaspde;
using namespace seaspde::testutil;

namespace {

// Small FEM pair (K, C) on a planar grid with unit coefficients.
std::pair<SpMat, Eigen::VectorXd> small_fem(int nx, double alpha) {
  Mesh m = build_planar_mesh(grid_points(0, 0, 3, 3, nx, nx), 1.0);
  DeformationParams d;
  auto om = assemble_operator(m, d, alpha);
  return {restrict_to_active(om.K, m), restrict_to_active(om.C, m)};
}

}  // namespace

TEST_CASE("integer smoothness degenerates to the identity rational") {
  auto c = fit_rational(2.0, 0.5, 100.0, 2);
  CHECK(c.identity);
  CHECK(c.m_alpha == 2);
  CHECK(c.max_rel_error == 0.0);
}

TEST_CASE("alpha = 1.5, m = 2 fit is below 1e-3 on a ratio-100 interval") {
  auto c = fit_rational(1.5, 1.0, 100.0, 2);
  CHECK(c.exponent_s == doctest::Approx(0.75));
  CHECK(c.max_rel_error < 1e-3);
  // independent dense evaluation of the factored rational
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    double x = 1.0 * std::pow(100.0, i / 9999.0);
    double r = eval_rational_pl(c, x) / eval_rational_pr(c, x);
    worst = std::max(worst, std::abs(r / std::pow(x, 0.75) - 1.0));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("max error is non-increasing in m") {
  for (double alpha : {1.5, 2.5, 3.3}) {
    double prev = 1e9;
    for (int m = 1; m <= 3; ++m) {
      auto c = fit_rational(alpha, 0.7, 300.0, m);
      CHECK(c.max_rel_error <= prev * (1 + 1e-9));
      prev = c.max_rel_error;
    }
  }
}

TEST_CASE("no-op rational with the integer power leaves Pl = K, Pr = I") {
  auto [K, C] = small_fem(5, 2.0);
  RationalCoeffs rc;
  rc.m = 2;
  rc.m_alpha = 2;
  rc.identity = true;
  rc.poles_r2.assign(3, 0.0);
  rc.roots_r1.assign(2, 0.0);
  rc.scale_b = 1.0;
  rc.scale_c = 1.0;
  auto op = build_factors(K, C, rc);
  CHECK((dense(op.Pl) - dense(K)).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::MatrixXd Pr = dense(op.Pr);
  CHECK((Pr - Eigen::MatrixXd::Identity(K.rows(), K.cols()))
            .cwiseAbs()
            .maxCoeff() < 1e-14);
}

TEST_CASE("dense eigendecomposition oracle: Pr Pl^-1 applies the rational to "
          "the generalized eigenvalues") {
  auto [K, C] = small_fem(4, 1.5);
  auto [lo, hi] = spectral_interval(K, C);
  auto coeffs = fit_rational(1.5, lo, hi, 2);
  auto op = build_factors(K, C, coeffs);

  // Generalized eigenproblem K v = lambda C v in the C-inner product.
  Eigen::MatrixXd Kd = dense(K);
  Eigen::MatrixXd Cd = C.asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Kd, Cd);
  Eigen::VectorXd lam = ges.eigenvalues();
  Eigen::MatrixXd V = ges.eigenvectors();  // V^T C V = I

  Eigen::VectorXd r(lam.size());
  for (int i = 0; i < lam.size(); ++i) {
    double pl = eval_rational_pl(op.coeffs, lam[i]) *
                std::pow(lam[i], op.coeffs.m_alpha - 1);
    r[i] = eval_rational_pr(op.coeffs, lam[i]) / pl;
  }
  Eigen::MatrixXd expected = V * r.asDiagonal() * V.transpose();
  Eigen::MatrixXd actual =
      dense(op.Pr) * dense(op.Pl).inverse();
  CHECK((actual - expected).cwiseAbs().maxCoeff() <
        1e-9 * expected.cwiseAbs().maxCoeff());
}

TEST_CASE("the polynomial factors commute in the discrete operator") {
  // Pl carries the mass matrix on the left, so the polynomial parts are
  // C^{-1} Pl and Pr: both polynomials in the same C^{-1}K.
  auto [K, C] = small_fem(5, 1.5);
  auto op = make_fractional(K, C, 1.5, 2);
  Eigen::MatrixXd pl = Eigen::MatrixXd(C.cwiseInverse().asDiagonal()) *
                       dense(op.Pl);
  Eigen::MatrixXd pr = dense(op.Pr);
  Eigen::MatrixXd ab = pl * pr;
  Eigen::MatrixXd ba = pr * pl;
  CHECK((ab - ba).cwiseAbs().maxCoeff() < 1e-10 * ab.cwiseAbs().maxCoeff());
}

TEST_CASE("zero noise maps to zero") {
  auto [K, C] = small_fem(4, 1.7);
  auto op = make_fractional(K, C, 1.7, 2);
  Eigen::VectorXd u = nested_sample(op, Eigen::VectorXd::Zero(K.rows()));
  CHECK(u.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("alpha = 2 sampling equals the direct solve K U = noise") {
  auto [K, C] = small_fem(5, 2.0);
  auto op = make_fractional(K, C, 2.0, 2);
  NormalSampler rng(3);
  Eigen::VectorXd noise(K.rows());
  for (int i = 0; i < noise.size(); ++i) noise[i] = rng();
  Eigen::VectorXd u = nested_sample(op, noise);
  SparseChol kchol(K);
  CHECK((u - kchol.solve(noise)).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("empirical covariance matches Pr Pl^-1 C Pl^-T Pr^T") {
  auto [K, C] = small_fem(4, 1.5);  // ~25 active nodes
  auto op = make_fractional(K, C, 1.5, 2);
  const int n = 100000;
  Eigen::MatrixXd S = nested_sample_batch(op, n, 2024);
  Eigen::MatrixXd emp = S * S.transpose() / n;

  Eigen::MatrixXd Pl = dense(op.Pl);
  Eigen::MatrixXd Pr = dense(op.Pr);
  Eigen::MatrixXd Plinv = Pl.inverse();
  Eigen::MatrixXd target =
      Pr * Plinv * Eigen::MatrixXd(C.asDiagonal()) * Plinv.transpose() *
      Pr.transpose();
  // entrywise within 3 Monte Carlo standard errors
  for (int i = 0; i < emp.rows(); ++i)
    for (int j = 0; j < emp.cols(); ++j) {
      double se = std::sqrt((target(i, i) * target(j, j) +
                             target(i, j) * target(i, j)) /
                            n);
      CHECK(std::abs(emp(i, j) - target(i, j)) < 3.5 * se);
    }
}

TEST_CASE("latent precision is SPD across fuzzed parameter fields") {
  std::mt19937 eng(99);
  std::normal_distribution<double> nd(0.0, 0.8);
  Mesh m = build_planar_mesh(grid_points(0, 0, 3, 3, 5, 5), 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    DeformationParams d;
    d.h1 = CosineField(1, {0, 0, 3, 3});
    d.h2 = CosineField(1, {0, 0, 3, 3});
    d.h3 = CosineField(1, {0, 0, 3, 3});
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        d.h1.coefficients(i, j) = nd(eng);
        d.h2.coefficients(i, j) = nd(eng);
        d.h3.coefficients(i, j) = nd(eng);
      }
    double alpha = 1.2 + 2.0 * (rep / 10.0);
    auto om = assemble_operator(m, d, alpha);
    SpMat K = restrict_to_active(om.K, m);
    Eigen::VectorXd C = restrict_to_active(om.C, m);
    auto op = make_fractional(K, C, alpha, 2);
    CHECK_NOTHROW(SparseChol{op.latent_precision});
  }
}

TEST_CASE("fit input validation") {
  CHECK_THROWS_AS(fit_rational(0.5, 1, 10, 2), ConfigError);
  CHECK_THROWS_AS(fit_rational(1.5, -1, 10, 2), ConfigError);
  CHECK_THROWS_AS(fit_rational(1.5, 1, 10, 0), ConfigError);
}
