#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "seaspde/bivarmodel.hpp"
#include "testutil.hpp"

using namespace seaspde;
using namespace seaspde::testutil;

namespace {

struct Fixture {
  std::shared_ptr<const Mesh> mesh;
  std::vector<Eigen::Vector2d> locations;
  MarginalSpec sx, sy;
  BoundingBox box;
};

// Planar mesh with ~30 active nodes and a handful of interior locations.
Fixture tiny_fixture(double alpha_x, double alpha_y, double range_scale = 1.0) {
  Fixture f;
  auto pts = grid_points(0, 0, 3, 3, 4, 4);
  f.mesh = std::make_shared<const Mesh>(build_planar_mesh(pts, 0.9));
  f.locations = {{0.8, 0.8}, {1.5, 1.6}, {2.2, 1.1}, {1.0, 2.3}, {2.4, 2.4}};
  f.box = {0, 0, 3, 3};
  f.sx.alpha = alpha_x;
  f.sy.alpha = alpha_y;
  double kappa = 1.2 / range_scale;
  for (MarginalSpec* s : {&f.sx, &f.sy}) {
    s->deformation.h1 = CosineField(0, f.box);
    s->deformation.h2 = CosineField(0, f.box);
    s->deformation.h3 = CosineField(0, f.box);
    s->deformation.h1.coefficients(0, 0) = -std::log(kappa);
    s->deformation.h2.coefficients(0, 0) = -std::log(kappa);
    s->nugget_variance = 0.01;
    s->mean_field = Eigen::VectorXd::Zero(f.locations.size());
    s->var_field = Eigen::VectorXd::Ones(f.locations.size());
  }
  return f;
}

CrossCorrField const_rho(double value, const BoundingBox& box) {
  CrossCorrField r;
  r.rho = CosineField(0, box);
  r.rho.coefficients(0, 0) = value;
  return r;
}

}  // namespace

TEST_CASE("rho = 0 gives a block-diagonal latent precision and independent "
          "fields") {
  Fixture f = tiny_fixture(2.0, 1.5);
  auto model =
      build(f.mesh, f.sx, f.sy, const_rho(0.0, f.box), f.locations, 2);
  const int N = model.n_active();
  Eigen::MatrixXd Q = dense(model.Q_tilde);
  CHECK(Q.topRightCorner(N, N).cwiseAbs().maxCoeff() == 0.0);

  const int n = 20000;
  BivarSamples s = sample(model, n, 11);
  for (int node : {N / 4, N / 2, 3 * N / 4}) {
    double c = s.x.row(node).dot(s.y.row(node)) / n;
    CHECK(std::abs(c) < 3.0 / std::sqrt((double)n));
  }
}

TEST_CASE("constant rho with identical marginals gives corr rho/sqrt(1+rho^2)"
          " including the -0.98 -> -0.7 pairing") {
  Fixture f = tiny_fixture(1.8, 1.8);
  const int n = 10000;
  for (double rho : {0.6, -0.98}) {
    auto model =
        build(f.mesh, f.sx, f.sy, const_rho(rho, f.box), f.locations, 2);
    double target = rho / std::sqrt(1.0 + rho * rho);
    BivarSamples s = sample(model, n, 2030);
    const int N = model.n_active();
    for (int node : {N / 3, N / 2, 2 * N / 3}) {
      double cxy = s.x.row(node).dot(s.y.row(node)) / n;
      double vx = s.x.row(node).squaredNorm() / n;
      double vy = s.y.row(node).squaredNorm() / n;
      double corr = cxy / std::sqrt(vx * vy);
      double se = (1.0 - target * target) / std::sqrt((double)n);
      CHECK(std::abs(corr - target) < 3 * se);
    }
    if (rho == -0.98)
      CHECK(target == doctest::Approx(-0.7).epsilon(2e-4));
  }
}

TEST_CASE("dense brute-force equivalence of the latent formulation") {
  Fixture f = tiny_fixture(1.5, 2.3);
  auto model =
      build(f.mesh, f.sx, f.sy, const_rho(0.8, f.box), f.locations, 2);
  const int N = model.n_active();
  REQUIRE(N <= 30);

  Eigen::MatrixXd Plx = dense(model.op_x.Pl), Prx = dense(model.op_x.Pr);
  Eigen::MatrixXd Qly = dense(model.op_y.Pl), Qry = dense(model.op_y.Pr);
  Eigen::MatrixXd Cd = Eigen::MatrixXd(model.op_x.C.asDiagonal());
  Eigen::MatrixXd Kx = Plx * Prx.inverse();
  Eigen::MatrixXd Ky = Qly * Qry.inverse();
  Eigen::MatrixXd Crho = Eigen::MatrixXd(model.c_rho.asDiagonal());
  Eigen::MatrixXd Krho = -Cd.inverse() * Crho * Ky;

  // direct block covariance
  Eigen::MatrixXd Kxi = Kx.inverse(), Kyi = Ky.inverse();
  Eigen::MatrixXd Sy = Kyi * Cd * Kyi.transpose();
  Eigen::MatrixXd Sx = Kxi * Cd * Kxi.transpose() +
                       Kxi * Krho * Sy * Krho.transpose() * Kxi.transpose();
  Eigen::MatrixXd Sxy = -Kxi * Krho * Sy;

  // latent covariance mapped through Pr/Qr
  Eigen::MatrixXd Qt = dense(model.Q_tilde);
  Eigen::MatrixXd St = Qt.inverse();
  Eigen::MatrixXd mapped_xx =
      Prx * St.topLeftCorner(N, N) * Prx.transpose();
  Eigen::MatrixXd mapped_xy =
      Prx * St.topRightCorner(N, N) * Qry.transpose();
  Eigen::MatrixXd mapped_yy =
      Qry * St.bottomRightCorner(N, N) * Qry.transpose();

  double scale = Sx.cwiseAbs().maxCoeff();
  CHECK((mapped_xx - Sx).cwiseAbs().maxCoeff() < 1e-8 * scale);
  CHECK((mapped_xy - Sxy).cwiseAbs().maxCoeff() < 1e-8 * scale);
  CHECK((mapped_yy - Sy).cwiseAbs().maxCoeff() < 1e-8 * scale);
}

TEST_CASE("samples are reproducible and identical across policies") {
  Fixture f = tiny_fixture(2.0, 1.6);
  auto model =
      build(f.mesh, f.sx, f.sy, const_rho(0.4, f.box), f.locations, 2);
  BivarSamples a = sample(model, 12, 77, Exec::serial);
  BivarSamples b = sample(model, 12, 77, Exec::parallel);
  BivarSamples c = sample(model, 12, 77, Exec::parallel);
  CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK((b.y - c.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("with rho = 0 the X stream reproduces the univariate sampler") {
  Fixture f = tiny_fixture(1.5, 2.0);
  auto model =
      build(f.mesh, f.sx, f.sy, const_rho(0.0, f.box), f.locations, 2);
  Eigen::MatrixXd ux = nested_sample_batch(model.op_x, 5, 123);
  BivarSamples s = sample(model, 5, 123);
  for (int c = 0; c < 5; ++c)
    ux.col(c) = ux.col(c).cwiseQuotient(model.sd_x);
  CHECK((s.x - ux).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("marginal variance of Y matches the selected-inverse diagonal") {
  Fixture f = tiny_fixture(2.0, 1.7);
  auto model =
      build(f.mesh, f.sx, f.sy, const_rho(0.5, f.box), f.locations, 2);
  const int n = 10000;
  BivarSamples s = sample(model, n, 5150);
  // standardized fields have unit nodal variance by construction, so the
  // raw-field variance target is sd_y^2
  const int N = model.n_active();
  for (int node : {N / 4, N / 2, 3 * N / 4}) {
    double var = s.y.row(node).squaredNorm() / n;
    double se = std::sqrt(2.0 / n);  // relative se of a variance estimate
    CHECK(std::abs(var - 1.0) < 3 * se);
  }
}

TEST_CASE("pointwise cross-correlation: zero, paper pairing, dense oracle") {
  Fixture f = tiny_fixture(1.6, 1.6);

  auto m0 = build(f.mesh, f.sx, f.sy, const_rho(0.0, f.box), f.locations, 2);
  PointwiseCrossCorr g0 = pointwise_crosscorr(m0);
  CHECK(g0.gamma.cwiseAbs().maxCoeff() < 1e-12);

  auto m1 = build(f.mesh, f.sx, f.sy, const_rho(1.0, f.box), f.locations, 2);
  PointwiseCrossCorr g1 = pointwise_crosscorr(m1);
  for (int j = 0; j < g1.gamma.size(); ++j)
    CHECK(g1.gamma[j] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(5e-3));

  // dense-covariance oracle at a general rho field
  CrossCorrField rho;
  rho.rho = CosineField(1, f.box);
  rho.rho.coefficients << 0.5, -0.3, 0.4, 0.2;
  auto m2 = build(f.mesh, f.sx, f.sy, rho, f.locations, 2);
  PointwiseCrossCorr g2 = pointwise_crosscorr(m2);
  const int N = m2.n_active();
  Eigen::MatrixXd St = dense(m2.Q_tilde).inverse();
  Eigen::MatrixXd Prx = dense(m2.op_x.Pr), Qry = dense(m2.op_y.Pr);
  Eigen::MatrixXd Ad = dense(m2.A_active);
  Eigen::MatrixXd Sxx = Ad * Prx * St.topLeftCorner(N, N) * Prx.transpose() *
                        Ad.transpose();
  Eigen::MatrixXd Sxy = Ad * Prx * St.topRightCorner(N, N) * Qry.transpose() *
                        Ad.transpose();
  Eigen::MatrixXd Syy = Ad * Qry * St.bottomRightCorner(N, N) *
                        Qry.transpose() * Ad.transpose();
  for (int j = 0; j < g2.gamma.size(); ++j) {
    double ref = Sxy(j, j) / std::sqrt(Sxx(j, j) * Syy(j, j));
    CHECK(g2.gamma[j] == doctest::Approx(ref).epsilon(1e-6));
    CHECK(std::abs(g2.gamma[j]) <= 1.0);
  }
}

TEST_CASE("positive rho fields give positive gamma everywhere") {
  Fixture f = tiny_fixture(1.8, 1.8);
  CrossCorrField rho;
  rho.rho = CosineField(1, f.box);
  rho.rho.coefficients << 1.0, 0.2, -0.15, 0.1;  // positive over the box
  auto m = build(f.mesh, f.sx, f.sy, rho, f.locations, 2);
  PointwiseCrossCorr g = pointwise_crosscorr(m);
  for (int j = 0; j < g.gamma.size(); ++j) CHECK(g.gamma[j] > 0);
}

TEST_CASE("Q_tilde stays SPD for wild rho fields") {
  Fixture f = tiny_fixture(1.4, 2.6);
  std::mt19937 eng(4);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (int rep = 0; rep < 8; ++rep) {
    CrossCorrField rho;
    rho.rho = CosineField(2, f.box);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) rho.rho.coefficients(i, j) = nd(eng);
    CHECK_NOTHROW(build(f.mesh, f.sx, f.sy, rho, f.locations, 2));
  }
}

TEST_CASE("destandardize: median, round trip, unit case") {
  Eigen::VectorXd mean(3), var(3), z(3);
  mean << 0.5, -0.2, 1.0;
  var << 0.25, 1.0, 4.0;
  z.setZero();
  Eigen::VectorXd v = destandardize(z, mean, var);
  for (int i = 0; i < 3; ++i)
    CHECK(v[i] == doctest::Approx(std::exp(mean[i])).epsilon(1e-14));

  z << 0.3, -1.2, 2.0;
  Eigen::VectorXd field = destandardize(z, mean, var);
  Eigen::VectorXd back =
      (field.array().log() - mean.array()) / var.array().sqrt();
  CHECK((back - z).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::VectorXd one_mean = Eigen::VectorXd::Zero(1),
                  one_var = Eigen::VectorXd::Ones(1),
                  one_z = Eigen::VectorXd::Ones(1);
  CHECK(destandardize(one_z, one_mean, one_var)[0] ==
        doctest::Approx(std::exp(1.0)).epsilon(1e-15));

  CHECK_THROWS_AS(destandardize(z, mean.head(2), var), DataError);
}
