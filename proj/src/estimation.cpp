#include "seaspde/estimation.hpp"

#include <cmath>
#include <limits>

namespace seaspde {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

SpMat restrict_obs_columns(const SpMat& A, const Mesh& mesh) {
  std::vector<Triplet> trip;
  trip.reserve(A.nonZeros());
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) {
      int a = mesh.active_index[it.col()];
      if (a < 0)
        throw DataError(
            "observation location touches the Dirichlet boundary; widen the "
            "mesh extension");
      trip.emplace_back(static_cast<int>(it.row()), a, it.value());
    }
  SpMat out(A.rows(), mesh.n_active);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

// Gaussian replicate log-likelihood for observations y_t = Atil u~ + eps,
// precision Q of u~, R = diag(r) nugget covariance:
//   log|Sigma_y| = log|Qc| - log|Q| + sum log r,   Qc = Q + Atil' R^-1 Atil
//   y' Sigma_y^-1 y = y'R^-1 y - (Atil'R^-1 y)' Qc^-1 (Atil'R^-1 y)
double gmrf_replicate_loglik(const SpMat& Q, const SpMat& Atil,
                             const Eigen::VectorXd& r_diag,
                             const Eigen::MatrixXd& Yt) {
  const int M = static_cast<int>(Atil.rows());
  const int n = static_cast<int>(Yt.cols());
  Eigen::VectorXd rinv = r_diag.cwiseInverse();
  SpMat AtR = SpMat(Atil.transpose()) * rinv.asDiagonal();
  SpMat Qc = Q + SpMat(AtR * Atil);
  Qc = 0.5 * (Qc + SpMat(Qc.transpose()));
  SparseChol chol_q(Q);
  SparseChol chol_c(Qc);
  double logdet_sigma =
      chol_c.logdet() - chol_q.logdet() + r_diag.array().log().sum();
  Eigen::MatrixXd U = AtR * Yt;           // N x n
  Eigen::MatrixXd S = chol_c.solve(U);    // Qc^-1 U
  double quad = 0;
  for (int t = 0; t < n; ++t) {
    quad += Yt.col(t).dot(rinv.cwiseProduct(Yt.col(t)));
    quad -= U.col(t).dot(S.col(t));
  }
  return -0.5 * (static_cast<double>(n) * M * std::log(2.0 * kPi) +
                 n * logdet_sigma + quad);
}

// Matern nu=1 correlation u K1(u), used by the kappa initialization.
double matern1_corr(double u) {
  if (u <= 0) return 1.0;
  return u * std::cyl_bessel_k(1.0, u);
}

double kappa_heuristic(const std::vector<Eigen::Vector2d>& locations,
                       const Eigen::MatrixXd& Z) {
  const int M = static_cast<int>(locations.size());
  if (M < 2) return 1.0;
  // Mean correlation between nearest-neighbour pairs.
  double corr_sum = 0, dist_sum = 0;
  int count = 0;
  const int n = static_cast<int>(Z.rows());
  for (int j = 0; j < M; ++j) {
    int best = -1;
    double bd = std::numeric_limits<double>::max();
    for (int l = 0; l < M; ++l)
      if (l != j) {
        double d = (locations[j] - locations[l]).norm();
        if (d < bd) {
          bd = d;
          best = l;
        }
      }
    double c = Z.col(j).dot(Z.col(best)) / (n - 1);
    corr_sum += c;
    dist_sum += bd;
    ++count;
  }
  double c_nn = std::clamp(corr_sum / count, 0.05, 0.99);
  double delta = dist_sum / count;
  // Solve u K1(u) = c_nn by bisection.
  double lo = 1e-6, hi = 30.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (matern1_corr(mid) > c_nn)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi) / delta;
}

CosineField constant_field(int k, const BoundingBox& box, double value) {
  CosineField f(k, box);
  f.coefficients(0, 0) = value;
  return f;
}

DeformationParams unpack_deformation(const Eigen::VectorXd& theta, int k,
                                     const BoundingBox& box) {
  const int nb = (k + 1) * (k + 1);
  DeformationParams d;
  d.h1 = CosineField(k, box);
  d.h2 = CosineField(k, box);
  d.h3 = CosineField(k, box);
  for (int i = 0; i < nb; ++i) {
    d.h1.coefficients(i / (k + 1), i % (k + 1)) = theta[i];
    d.h2.coefficients(i / (k + 1), i % (k + 1)) = theta[nb + i];
    d.h3.coefficients(i / (k + 1), i % (k + 1)) = theta[2 * nb + i];
  }
  return d;
}

}  // namespace

StandardizedField standardize(const Eigen::MatrixXd& raw) {
  const int n = static_cast<int>(raw.rows());
  const int M = static_cast<int>(raw.cols());
  if (n < 2) throw DataError("standardize: need at least 2 replicates");
  StandardizedField out;
  out.mean = raw.colwise().mean();
  out.var.resize(M);
  out.z.resize(n, M);
  for (int j = 0; j < M; ++j) {
    Eigen::VectorXd c = raw.col(j).array() - out.mean[j];
    out.var[j] = c.squaredNorm() / (n - 1);
    if (!(out.var[j] > 0))
      throw DataError("standardize: zero variance at location " +
                      std::to_string(j));
    out.z.col(j) = c / std::sqrt(out.var[j]);
  }
  return out;
}

double marginal_loglik(const Mesh& mesh, const SpMat& A_full,
                       const DeformationParams& d, double alpha,
                       double nugget_var, const Eigen::MatrixXd& Z,
                       int m_rational) {
  if (!(nugget_var > 0)) return kNegInf;
  try {
    auto om = assemble_operator(mesh, d, alpha);
    SpMat K = restrict_to_active(om.K, mesh);
    Eigen::VectorXd C = restrict_to_active(om.C, mesh);
    FractionalOperator op = make_fractional(K, C, alpha, m_rational);
    Eigen::VectorXd sd = node_stddev(op);
    SpMat A_act = restrict_obs_columns(A_full, mesh);
    SpMat Atil = A_act * sd.cwiseInverse().asDiagonal() * op.Pr;
    Eigen::VectorXd r =
        Eigen::VectorXd::Constant(A_full.rows(), nugget_var);
    return gmrf_replicate_loglik(op.latent_precision, Atil, r,
                                 Z.transpose());
  } catch (const std::exception&) {
    return kNegInf;
  }
}

MarginalFit fit_marginal(const Mesh& mesh,
                         const std::vector<Eigen::Vector2d>& locations,
                         const StandardizedField& field,
                         const FitConfig& cfg) {
  BoundingBox box = bounding_box(locations);
  const int k = cfg.k;
  const int nb = (k + 1) * (k + 1);
  SpMat A_full = observation_matrix(mesh, locations);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(3 * nb + 2);
  double kappa0 = kappa_heuristic(locations, field.z);
  theta[0] = -std::log(kappa0);       // h1 constant coefficient
  theta[nb] = -std::log(kappa0);      // h2
  theta[3 * nb] = std::log(std::max(cfg.alpha_init - 1.0, 1e-3));
  theta[3 * nb + 1] = std::log(cfg.nugget_init);

  auto objective = [&](const Eigen::VectorXd& th) {
    DeformationParams d = unpack_deformation(th, k, box);
    double alpha = 1.0 + std::exp(th[3 * nb]);
    double nugget = std::exp(th[3 * nb + 1]);
    return -marginal_loglik(mesh, A_full, d, alpha, nugget, field.z,
                            cfg.m_rational);
  };

  BfgsOptions opt;
  opt.max_iter = cfg.max_iter;
  opt.grad_tol = cfg.grad_tol;
  opt.fd_step = cfg.fd_step;
  opt.exec = cfg.exec;
  BfgsResult r = bfgs_minimize(objective, theta, opt);

  MarginalFit out;
  out.spec.deformation = unpack_deformation(r.x, k, box);
  out.spec.alpha = 1.0 + std::exp(r.x[3 * nb]);
  out.spec.nugget_variance = std::exp(r.x[3 * nb + 1]);
  out.spec.mean_field = field.mean;
  out.spec.var_field = field.var;
  out.report.parameters = r.x;
  out.report.final_nll = r.f;
  out.report.iterations = r.iterations;
  out.report.converged = r.converged;
  out.report.gradient_norm = r.grad_norm;
  out.report.objective_history = r.history;
  return out;
}

double bivariate_loglik(const Mesh& mesh, const SpMat& A_full,
                        const MarginalSpec& sx, const MarginalSpec& sy,
                        const CrossCorrField& rho, const Eigen::MatrixXd& Zx,
                        const Eigen::MatrixXd& Zy, int m_rational) {
  if (!(sx.nugget_variance > 0) || !(sy.nugget_variance > 0)) return kNegInf;
  try {
    // Locations are implied by A_full's pattern; rebuild the model pieces.
    auto om_x = assemble_operator(mesh, sx.deformation, sx.alpha, &rho.rho);
    auto om_y = assemble_operator(mesh, sy.deformation, sy.alpha);
    SpMat Kx = restrict_to_active(om_x.K, mesh);
    SpMat Ky = restrict_to_active(om_y.K, mesh);
    Eigen::VectorXd C = restrict_to_active(om_x.C, mesh);
    FractionalOperator opx = make_fractional(Kx, C, sx.alpha, m_rational);
    FractionalOperator opy = make_fractional(Ky, C, sy.alpha, m_rational);
    Eigen::VectorXd c_rho =
        restrict_to_active(assemble_rho_mass(mesh, rho), mesh);

    const int N = static_cast<int>(C.size());
    Eigen::VectorXd c2 = C.cwiseProduct(C);
    Eigen::VectorXd c3 = c2.cwiseProduct(C);
    Eigen::VectorXd w_xy = -c_rho.cwiseQuotient(c2);
    SpMat top_right =
        SpMat(opx.Pl.transpose()) * w_xy.asDiagonal() * opy.Pl;
    Eigen::VectorXd w_yy =
        C.cwiseInverse() + c_rho.cwiseProduct(c_rho).cwiseQuotient(c3);
    SpMat bottom_right =
        SpMat(opy.Pl.transpose()) * w_yy.asDiagonal() * opy.Pl;
    std::vector<Triplet> trip;
    auto add_block = [&](const SpMat& b, int r0, int c0) {
      for (int kk = 0; kk < b.outerSize(); ++kk)
        for (SpMat::InnerIterator it(b, kk); it; ++it)
          trip.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
    };
    add_block(opx.latent_precision, 0, 0);
    add_block(top_right, 0, N);
    add_block(SpMat(top_right.transpose()), N, 0);
    add_block(bottom_right, N, N);
    SpMat Q(2 * N, 2 * N);
    Q.setFromTriplets(trip.begin(), trip.end());

    Eigen::VectorXd sdx = node_stddev(opx);
    Eigen::VectorXd sdy = node_stddev(opy);
    SpMat A_act = restrict_obs_columns(A_full, mesh);
    SpMat Ax = A_act * sdx.cwiseInverse().asDiagonal() * opx.Pr;
    SpMat Ay = A_act * sdy.cwiseInverse().asDiagonal() * opy.Pr;
    const int M = static_cast<int>(A_act.rows());
    std::vector<Triplet> at;
    for (int kk = 0; kk < Ax.outerSize(); ++kk)
      for (SpMat::InnerIterator it(Ax, kk); it; ++it)
        at.emplace_back(it.row(), it.col(), it.value());
    for (int kk = 0; kk < Ay.outerSize(); ++kk)
      for (SpMat::InnerIterator it(Ay, kk); it; ++it)
        at.emplace_back(M + it.row(), N + it.col(), it.value());
    SpMat Abig(2 * M, 2 * N);
    Abig.setFromTriplets(at.begin(), at.end());

    Eigen::VectorXd r(2 * M);
    r.head(M).setConstant(sx.nugget_variance);
    r.tail(M).setConstant(sy.nugget_variance);

    const int n = static_cast<int>(Zx.rows());
    Eigen::MatrixXd Yt(2 * M, n);
    Yt.topRows(M) = Zx.transpose();
    Yt.bottomRows(M) = Zy.transpose();
    return gmrf_replicate_loglik(Q, Abig, r, Yt);
  } catch (const std::exception&) {
    return kNegInf;
  }
}

RhoFit fit_rho_fullml(const Mesh& mesh,
                      const std::vector<Eigen::Vector2d>& locations,
                      const MarginalSpec& sx, const MarginalSpec& sy,
                      const Eigen::MatrixXd& Zx, const Eigen::MatrixXd& Zy,
                      const FitConfig& cfg) {
  BoundingBox box = bounding_box(locations);
  const int k = cfg.k;
  const int nb = (k + 1) * (k + 1);
  SpMat A_full = observation_matrix(mesh, locations);
  auto unpack = [&](const Eigen::VectorXd& th) {
    CrossCorrField rho;
    rho.rho = CosineField(k, box);
    for (int i = 0; i < nb; ++i)
      rho.rho.coefficients(i / (k + 1), i % (k + 1)) = th[i];
    return rho;
  };
  auto objective = [&](const Eigen::VectorXd& th) {
    return -bivariate_loglik(mesh, A_full, sx, sy, unpack(th), Zx, Zy,
                             cfg.m_rational);
  };
  BfgsOptions opt;
  opt.max_iter = cfg.max_iter;
  opt.grad_tol = cfg.grad_tol;
  opt.fd_step = cfg.fd_step;
  opt.exec = cfg.exec;
  BfgsResult r = bfgs_minimize(objective, Eigen::VectorXd::Zero(nb), opt);
  RhoFit out;
  out.rho = unpack(r.x);
  out.report.parameters = r.x;
  out.report.final_nll = r.f;
  out.report.iterations = r.iterations;
  out.report.converged = r.converged;
  out.report.gradient_norm = r.grad_norm;
  out.report.objective_history = r.history;
  return out;
}

double pointwise_ml_objective(const Eigen::VectorXd& gamma_model,
                              const Eigen::VectorXd& gamma_hat,
                              const Eigen::VectorXd& counts) {
  double l = 0;
  for (int j = 0; j < gamma_model.size(); ++j) {
    double g = gamma_model[j];
    if (!(std::abs(g) < 1.0)) return kNegInf;
    if (!(std::abs(gamma_hat[j]) < 1.0))
      throw DataError("pointwise_ml: |gamma_hat| >= 1 at location " +
                      std::to_string(j));
    double o = counts[j];
    double omg2 = 1.0 - g * g;
    l += o * (-std::log(2.0 * kPi) - 0.5 * std::log(omg2) - 1.0 / omg2 +
              g / omg2 * ((o - 1.0) / o) * gamma_hat[j]);
  }
  return l;
}

RhoFit fit_rho_pointwise(const Mesh& mesh,
                         const std::vector<Eigen::Vector2d>& locations,
                         const MarginalSpec& sx, const MarginalSpec& sy,
                         const Eigen::VectorXd& gamma_hat,
                         const Eigen::VectorXd& counts, const FitConfig& cfg) {
  for (int j = 0; j < gamma_hat.size(); ++j)
    if (!(std::abs(gamma_hat[j]) < 1.0))
      throw DataError("fit_rho_pointwise: |gamma_hat| >= 1 at location " +
                      std::to_string(j));
  BoundingBox box = bounding_box(locations);
  const int k = cfg.k;
  const int nb = (k + 1) * (k + 1);
  auto mesh_ptr = std::make_shared<const Mesh>(mesh);
  auto unpack = [&](const Eigen::VectorXd& th) {
    CrossCorrField rho;
    rho.rho = CosineField(k, box);
    for (int i = 0; i < nb; ++i)
      rho.rho.coefficients(i / (k + 1), i % (k + 1)) = th[i];
    return rho;
  };
  auto objective = [&](const Eigen::VectorXd& th) {
    try {
      BivariateModel model = build(mesh_ptr, sx, sy, unpack(th), locations,
                                   cfg.m_rational);
      PointwiseCrossCorr pc = pointwise_crosscorr(model);
      return -pointwise_ml_objective(pc.gamma, gamma_hat, counts);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  BfgsOptions opt;
  opt.max_iter = cfg.max_iter;
  opt.grad_tol = cfg.grad_tol;
  opt.fd_step = cfg.fd_step;
  opt.exec = cfg.exec;
  BfgsResult r = bfgs_minimize(objective, Eigen::VectorXd::Zero(nb), opt);
  RhoFit out;
  out.rho = unpack(r.x);
  out.report.parameters = r.x;
  out.report.final_nll = r.f;
  out.report.iterations = r.iterations;
  out.report.converged = r.converged;
  out.report.gradient_norm = r.grad_norm;
  out.report.objective_history = r.history;
  return out;
}

CrossCorrStats sample_crosscorr_stats(const Dataset& data, int radius_cells) {
  const int M = data.n_locations();
  const int n = data.n_replicates();
  if (n < 2) throw DataError("sample_crosscorr_stats: need >= 2 replicates");
  CrossCorrStats out;
  out.gamma_hat.setZero(M);
  out.gamma_shifted.setZero(M);
  out.shifts.assign(M, Eigen::Vector2i::Zero());
  out.valid.assign(M, 1);
  out.counts = Eigen::VectorXd::Constant(M, n);

  Eigen::MatrixXd X = data.log_hs, Y = data.log_t;
  Eigen::RowVectorXd mx = X.colwise().mean(), my = Y.colwise().mean();
  X.rowwise() -= mx;
  Y.rowwise() -= my;
  Eigen::VectorXd sx = X.colwise().norm(), sy = Y.colwise().norm();

  auto corr = [&](int jx, int jy) {
    if (sx[jx] <= 0 || sy[jy] <= 0)
      return std::numeric_limits<double>::quiet_NaN();
    return X.col(jx).dot(Y.col(jy)) / (sx[jx] * sy[jy]);
  };

  // Lattice lookup for the shift search.
  std::vector<int> lattice;
  bool have_lattice = data.grid_nx > 0 && data.grid_ny > 0 &&
                      static_cast<int>(data.grid_index.size()) == M;
  if (have_lattice) {
    lattice.assign(data.grid_nx * data.grid_ny, -1);
    for (int j = 0; j < M; ++j)
      lattice[data.grid_index[j].y() * data.grid_nx + data.grid_index[j].x()] =
          j;
  }

  for (int j = 0; j < M; ++j) {
    double c0 = corr(j, j);
    if (!std::isfinite(c0)) {
      out.valid[j] = 0;
      continue;
    }
    out.gamma_hat[j] = c0;
    double best = c0;
    Eigen::Vector2i bs(0, 0);
    if (have_lattice && radius_cells > 0) {
      int ix = data.grid_index[j].x(), iy = data.grid_index[j].y();
      for (int dy = -radius_cells; dy <= radius_cells; ++dy)
        for (int dx = -radius_cells; dx <= radius_cells; ++dx) {
          int nx = ix + dx, ny = iy + dy;
          if (nx < 0 || ny < 0 || nx >= data.grid_nx || ny >= data.grid_ny)
            continue;
          int l = lattice[ny * data.grid_nx + nx];
          if (l < 0) continue;
          double c = corr(j, l);
          if (std::isfinite(c) && c > best) {
            best = c;
            bs = {dx, dy};
          }
        }
    }
    out.gamma_shifted[j] = best;
    out.shifts[j] = bs;
  }
  return out;
}

BoundingBox bounding_box(const std::vector<Eigen::Vector2d>& locations) {
  if (locations.empty()) throw DataError("bounding_box: no locations");
  double x0 = locations[0].x(), x1 = x0, y0 = locations[0].y(), y1 = y0;
  for (const auto& p : locations) {
    x0 = std::min(x0, p.x());
    x1 = std::max(x1, p.x());
    y0 = std::min(y0, p.y());
    y1 = std::max(y1, p.y());
  }
  BoundingBox b;
  b.origin_s1 = x0;
  b.origin_s2 = y0;
  b.extent_s1 = std::max(x1 - x0, 1e-9);
  b.extent_s2 = std::max(y1 - y0, 1e-9);
  return b;
}

}  // namespace seaspde
