#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "seaspde/sparsela.hpp"
#include "testutil.hpp"

using namespace seaspde;
using namespace seaspde::testutil;

TEST_CASE("identity factorization") {
  SpMat I(5, 5);
  I.setIdentity();
  SparseChol c(I);
  CHECK(c.logdet() == doctest::Approx(0.0));
  Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(5, 1, 5);
  CHECK((c.solve(b) - b).norm() < 1e-14);
}

TEST_CASE("diagonal case logdet") {
  Eigen::VectorXd d(2);
  d << 2.0, 8.0;
  SparseChol c(sparse_diag(d));
  CHECK(c.logdet() == doctest::Approx(std::log(16.0)).epsilon(1e-14));
}

TEST_CASE("random 30x30 SPD matches the dense oracle") {
  Eigen::MatrixXd A = random_spd(30, 1234);
  SparseChol c(to_sparse(A));
  double logdet_ref = std::log(A.determinant());
  CHECK(c.logdet() == doctest::Approx(logdet_ref).epsilon(1e-8));
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(30, -1, 1);
  Eigen::VectorXd b = A * x;
  CHECK((c.solve(b) - x).norm() / x.norm() < 1e-8);
}

TEST_CASE("solve(A, A x) = x for random x on FEM-like patterns") {
  for (unsigned seed : {1u, 2u, 3u}) {
    Eigen::MatrixXd A = random_spd(60, seed);
    SparseChol c(to_sparse(A));
    std::mt19937 eng(seed + 100);
    std::normal_distribution<double> nd;
    Eigen::VectorXd x(60);
    for (int i = 0; i < 60; ++i) x[i] = nd(eng);
    CHECK((c.solve(Eigen::VectorXd(A * x)) - x).norm() / x.norm() < 1e-8);
  }
}

TEST_CASE("logdet matches dense oracle up to 200x200") {
  for (int n : {50, 120, 200}) {
    Eigen::MatrixXd A = random_spd(n, 7u + n);
    SparseChol c(to_sparse(A));
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    double ref = 2.0 * Eigen::MatrixXd(llt.matrixL())
                           .diagonal()
                           .array()
                           .log()
                           .sum();
    CHECK(c.logdet() == doctest::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("non-SPD input is rejected with a pivot report") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 4);
  A(2, 2) = -1.0;
  CHECK_THROWS_AS(SparseChol{to_sparse(A)}, NumericalError);
}

TEST_CASE("gmrf samples from identity precision are standard normal") {
  SpMat I(4, 4);
  I.setIdentity();
  SparseChol c(I);
  Eigen::MatrixXd X = c.sample_gmrf(10000, 42);
  for (int coord = 0; coord < 4; ++coord) {
    std::vector<double> xs(X.row(coord).data(),
                           X.row(coord).data() + X.cols());
    // row() of a col-major matrix is strided; copy explicitly
    xs.assign(X.cols(), 0.0);
    for (int j = 0; j < X.cols(); ++j) xs[j] = X(coord, j);
    CHECK(ks_pvalue_normal(xs) > 0.01);
  }
}

TEST_CASE("fixed seed gives bit-identical samples, serial == parallel") {
  Eigen::MatrixXd A = random_spd(25, 5);
  SparseChol c(to_sparse(A));
  Eigen::MatrixXd s1 = c.sample_gmrf(64, 99, Exec::serial);
  Eigen::MatrixXd s2 = c.sample_gmrf(64, 99, Exec::parallel);
  Eigen::MatrixXd s3 = c.sample_gmrf(64, 99, Exec::parallel);
  CHECK((s1 - s2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s2 - s3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("precision diag(4) gives variance 1/4") {
  Eigen::VectorXd d = Eigen::VectorXd::Constant(3, 4.0);
  SparseChol c(sparse_diag(d));
  const int n = 100000;
  Eigen::MatrixXd X = c.sample_gmrf(n, 7);
  for (int coord = 0; coord < 3; ++coord) {
    double var = X.row(coord).squaredNorm() / n;
    // 3 standard errors of a chi^2 variance estimate
    double se = 0.25 * std::sqrt(2.0 / n);
    CHECK(std::abs(var - 0.25) < 3 * se);
  }
}

TEST_CASE("takahashi: diagonal matrix") {
  Eigen::VectorXd d(4);
  d << 2, 5, 0.5, 9;
  SparseChol c(sparse_diag(d));
  SelectedInverse s(c);
  for (int i = 0; i < 4; ++i)
    CHECK(s.entry(i, i) == doctest::Approx(1.0 / d[i]).epsilon(1e-14));
}

TEST_CASE("takahashi: banded SPD matches dense inverse") {
  const int n = 20;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = 4.0 + 0.1 * i;
    if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = -1.0;
    if (i + 2 < n) A(i, i + 2) = A(i + 2, i) = 0.3;
  }
  SparseChol c(to_sparse(A));
  SelectedInverse s(c);
  Eigen::MatrixXd Ainv = A.inverse();
  int checked = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      bool found;
      double v = s.entry(i, j, &found);
      if (found) {
        CHECK(v == doctest::Approx(Ainv(i, j)).epsilon(1e-9));
        ++checked;
      }
    }
  CHECK(checked >= 3 * n - 2);  // at least the original band
}

TEST_CASE("takahashi: arrowhead diagonal matches dense inverse") {
  const int n = 15;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) * 3.0;
  for (int i = 1; i < n; ++i) A(0, i) = A(i, 0) = 0.4;
  SparseChol c(to_sparse(A));
  SelectedInverse s(c);
  Eigen::MatrixXd Ainv = A.inverse();
  Eigen::VectorXd diag = s.diagonal();
  for (int i = 0; i < n; ++i)
    CHECK(diag[i] == doctest::Approx(Ainv(i, i)).epsilon(1e-9));
}

TEST_CASE("takahashi diagonal is positive and bounded by 1/lambda_min") {
  Eigen::MatrixXd A = random_spd(40, 77);
  SparseChol c(to_sparse(A));
  SelectedInverse s(c);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  double bound = 1.0 / es.eigenvalues().minCoeff();
  Eigen::VectorXd diag = s.diagonal();
  for (int i = 0; i < 40; ++i) {
    CHECK(diag[i] > 0);
    CHECK(diag[i] <= bound * (1 + 1e-12));
  }
}
