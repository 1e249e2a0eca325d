#include "seaspde/bivarmodel.hpp"

#include <cmath>

#include "seaspde/rngutil.hpp"

namespace seaspde {
namespace {

// Nonzeros of observation row `row` mapped to active indexing.
std::vector<std::pair<int, double>> active_row(const Mesh& mesh, const SpMat& A,
                                               int row) {
  std::vector<std::pair<int, double>> out;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it)
      if (it.row() == row) {
        int a = mesh.active_index[it.col()];
        if (a < 0)
          throw DataError(
              "observation touches a Dirichlet boundary vertex; widen the "
              "mesh extension");
        out.push_back({a, it.value()});
      }
  return out;
}

std::vector<std::pair<int, double>> sparse_col(const SpMat& M, int col) {
  std::vector<std::pair<int, double>> out;
  for (SpMat::InnerIterator it(M, col); it; ++it)
    out.push_back({static_cast<int>(it.row()), it.value()});
  return out;
}

void place_block(std::vector<Triplet>& trip, const SpMat& block, int r0,
                 int c0) {
  for (int k = 0; k < block.outerSize(); ++k)
    for (SpMat::InnerIterator it(block, k); it; ++it)
      trip.emplace_back(r0 + static_cast<int>(it.row()),
                        c0 + static_cast<int>(it.col()), it.value());
}

}  // namespace

Eigen::VectorXd node_stddev(const FractionalOperator& op, int* fallback_count) {
  const int n = static_cast<int>(op.K.rows());
  SparseChol chol(op.latent_precision);
  SelectedInverse sel(chol);
  SpMat PrT = op.Pr.transpose();
  Eigen::VectorXd sd(n);
  int misses = 0;
  for (int i = 0; i < n; ++i) {
    auto p = sparse_col(PrT, i);
    double acc = 0;
    bool ok = true;
    for (auto [k, vk] : p) {
      for (auto [l, vl] : p) {
        bool found;
        double e = sel.entry(k, l, &found);
        if (!found) {
          ok = false;
          break;
        }
        acc += vk * vl * e;
      }
      if (!ok) break;
    }
    if (!ok) {
      ++misses;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
      for (auto [k, vk] : p) rhs[k] = vk;
      Eigen::VectorXd z = chol.solve(rhs);
      acc = rhs.dot(z);
    }
    if (!(acc > 0))
      throw NumericalError("node_stddev: nonpositive marginal variance");
    sd[i] = std::sqrt(acc);
  }
  if (fallback_count) *fallback_count = misses;
  return sd;
}

BivariateModel build(std::shared_ptr<const Mesh> mesh,
                     const MarginalSpec& spec_x, const MarginalSpec& spec_y,
                     const CrossCorrField& rho,
                     const std::vector<Eigen::Vector2d>& obs_locations,
                     int m_rational) {
  BivariateModel m;
  m.mesh = mesh;
  m.spec_x = spec_x;
  m.spec_y = spec_y;
  m.rho = rho;
  m.m_rational = m_rational;

  Eigen::VectorXd C_full = assemble_mass(*mesh);
  Eigen::VectorXd C = restrict_to_active(C_full, *mesh);

  auto om_x =
      assemble_operator(*mesh, spec_x.deformation, spec_x.alpha, &rho.rho);
  auto om_y = assemble_operator(*mesh, spec_y.deformation, spec_y.alpha);
  SpMat Kx = restrict_to_active(om_x.K, *mesh);
  SpMat Ky = restrict_to_active(om_y.K, *mesh);
  m.op_x = make_fractional(Kx, C, spec_x.alpha, m_rational);
  m.op_y = make_fractional(Ky, C, spec_y.alpha, m_rational);

  m.c_rho = restrict_to_active(assemble_rho_mass(*mesh, rho), *mesh);

  // Latent block precision; C and C_rho diagonal keep every block sparse.
  const int N = static_cast<int>(C.size());
  const SpMat& Plx = m.op_x.Pl;
  const SpMat& Qly = m.op_y.Pl;
  Eigen::VectorXd c2 = C.cwiseProduct(C);
  Eigen::VectorXd c3 = c2.cwiseProduct(C);
  Eigen::VectorXd w_xy = -m.c_rho.cwiseQuotient(c2);
  SpMat top_right = SpMat(Plx.transpose()) * w_xy.asDiagonal() * Qly;
  Eigen::VectorXd w_yy =
      C.cwiseInverse() + m.c_rho.cwiseProduct(m.c_rho).cwiseQuotient(c3);
  SpMat bottom_right = SpMat(Qly.transpose()) * w_yy.asDiagonal() * Qly;

  std::vector<Triplet> trip;
  trip.reserve(m.op_x.latent_precision.nonZeros() + bottom_right.nonZeros() +
               2 * top_right.nonZeros());
  place_block(trip, m.op_x.latent_precision, 0, 0);
  place_block(trip, top_right, 0, N);
  place_block(trip, SpMat(top_right.transpose()), N, 0);
  place_block(trip, bottom_right, N, N);
  m.Q_tilde.resize(2 * N, 2 * N);
  m.Q_tilde.setFromTriplets(trip.begin(), trip.end());

  m.A = observation_matrix(*mesh, obs_locations);
  {
    std::vector<Triplet> at;
    for (int k = 0; k < m.A.outerSize(); ++k)
      for (SpMat::InnerIterator it(m.A, k); it; ++it) {
        int a = mesh->active_index[it.col()];
        if (a < 0)
          throw DataError(
              "observation location touches the Dirichlet boundary; widen "
              "the mesh extension");
        at.emplace_back(static_cast<int>(it.row()), a, it.value());
      }
    m.A_active.resize(m.A.rows(), N);
    m.A_active.setFromTriplets(at.begin(), at.end());
  }

  m.sd_x = node_stddev(m.op_x);
  m.sd_y = node_stddev(m.op_y);

  try {
    m.Q_chol = std::make_shared<SparseChol>(m.Q_tilde);
  } catch (const NumericalError& e) {
    throw NumericalError(
        std::string("bivariate model: latent precision not SPD: ") + e.what());
  }
  return m;
}

BivarSamples sample(const BivariateModel& model, int n, std::uint64_t seed,
                    Exec exec) {
  const int N = model.n_active();
  BivarSamples out;
  out.x.resize(N, n);
  out.y.resize(N, n);
  Eigen::VectorXd csqrt = model.op_x.C.cwiseSqrt();
  Eigen::VectorXd rho_over_c = model.c_rho.cwiseQuotient(model.op_x.C);
  auto draw = [&](int c) {
    NormalSampler rng(mix_seed(seed, c));
    Eigen::VectorXd w(N), v(N);
    for (int i = 0; i < N; ++i) w[i] = csqrt[i] * rng();
    for (int i = 0; i < N; ++i) v[i] = csqrt[i] * rng();
    // Ql u~_y = v ; Pl u~_x = w + C^{-1} C_rho v
    Eigen::VectorXd uy = model.op_y.Pl_chol->solve(v);
    Eigen::VectorXd ux =
        model.op_x.Pl_chol->solve(
            Eigen::VectorXd(w + rho_over_c.cwiseProduct(v)));
    out.x.col(c) = (model.op_x.Pr * ux).cwiseQuotient(model.sd_x);
    out.y.col(c) = (model.op_y.Pr * uy).cwiseQuotient(model.sd_y);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < n; ++c) draw(c);
  } else {
    for (int c = 0; c < n; ++c) draw(c);
  }
  return out;
}

PointwiseCrossCorr pointwise_crosscorr(const BivariateModel& model) {
  const int N = model.n_active();
  const int M = model.n_obs();
  SelectedInverse sel(*model.Q_chol);
  SpMat PrxT = model.op_x.Pr.transpose();
  SpMat QryT = model.op_y.Pr.transpose();

  PointwiseCrossCorr out;
  out.gamma.resize(M);
  for (int j = 0; j < M; ++j) {
    auto arow = active_row(*model.mesh, model.A, j);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(N), b = Eigen::VectorXd::Zero(N);
    for (auto [col, w] : arow) {
      for (SpMat::InnerIterator it(PrxT, col); it; ++it)
        a[it.row()] += w * it.value();
      for (SpMat::InnerIterator it(QryT, col); it; ++it)
        b[it.row()] += w * it.value();
    }
    std::vector<int> ia, ib;
    for (int i = 0; i < N; ++i) {
      if (a[i] != 0.0) ia.push_back(i);
      if (b[i] != 0.0) ib.push_back(i);
    }
    double sxy = 0, sxx = 0, syy = 0;
    bool ok = true;
    for (int k : ia) {
      for (int l : ib) {
        bool f;
        double e = sel.entry(k, N + l, &f);
        if (!f) {
          ok = false;
          break;
        }
        sxy += a[k] * b[l] * e;
      }
      if (!ok) break;
    }
    if (ok)
      for (size_t p = 0; p < ia.size() && ok; ++p)
        for (size_t q = p; q < ia.size(); ++q) {
          bool f;
          double e = sel.entry(ia[p], ia[q], &f);
          if (!f) {
            ok = false;
            break;
          }
          sxx += (p == q ? 1.0 : 2.0) * a[ia[p]] * a[ia[q]] * e;
        }
    if (ok)
      for (size_t p = 0; p < ib.size() && ok; ++p)
        for (size_t q = p; q < ib.size(); ++q) {
          bool f;
          double e = sel.entry(N + ib[p], N + ib[q], &f);
          if (!f) {
            ok = false;
            break;
          }
          syy += (p == q ? 1.0 : 2.0) * b[ib[p]] * b[ib[q]] * e;
        }
    if (!ok) {
      ++out.fallback_count;
      Eigen::VectorXd ra = Eigen::VectorXd::Zero(2 * N);
      Eigen::VectorXd rb = Eigen::VectorXd::Zero(2 * N);
      ra.head(N) = a;
      rb.tail(N) = b;
      Eigen::VectorXd za = model.Q_chol->solve(ra);
      Eigen::VectorXd zb = model.Q_chol->solve(rb);
      sxx = ra.dot(za);
      syy = rb.dot(zb);
      sxy = ra.dot(zb);
    }
    out.gamma[j] = sxy / std::sqrt(sxx * syy);
  }
  return out;
}

Eigen::VectorXd destandardize(const Eigen::VectorXd& z,
                              const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& var) {
  if (z.size() != mean.size() || z.size() != var.size())
    throw DataError("destandardize: missing location statistics");
  return (mean.array() + var.array().sqrt() * z.array()).exp();
}

}  // namespace seaspde
