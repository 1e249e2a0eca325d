#include "seaspde/femassembly.hpp"

#include <cmath>
#include <Eigen/Geometry>
#include <fstream>

namespace seaspde {
namespace {

struct LocalContrib {
  Eigen::Matrix3d B;
  Eigen::Matrix3d G;
};

// In-plane gradients of the three barycentric basis functions and the local
// orthonormal tangent frame (east/north for spherical meshes, x/y planar).
void triangle_geometry(const Mesh& mesh, int t, double& area,
                       Eigen::Matrix<double, 2, 3>& grad2) {
  const auto& T = mesh.triangles[t];
  Eigen::Vector3d p0 = mesh.vertices[T.v[0]].position;
  Eigen::Vector3d p1 = mesh.vertices[T.v[1]].position;
  Eigen::Vector3d p2 = mesh.vertices[T.v[2]].position;
  Eigen::Vector3d nvec = (p1 - p0).cross(p2 - p0);
  double n2 = nvec.norm();
  area = 0.5 * n2;
  if (!(area > 0))
    throw NumericalError("assembly: zero-area triangle " + std::to_string(t));
  Eigen::Vector3d n = nvec / n2;

  Eigen::Vector3d g0 = n.cross(p2 - p1) / (2.0 * area);
  Eigen::Vector3d g1 = n.cross(p0 - p2) / (2.0 * area);
  Eigen::Vector3d g2 = n.cross(p1 - p0) / (2.0 * area);

  Eigen::Vector3d t1, t2;
  if (mesh.spherical) {
    Eigen::Vector3d c = mesh.triangle_centroid(t).normalized();
    double lon = std::atan2(c.y(), c.x());
    double lat = std::asin(std::clamp(c.z(), -1.0, 1.0));
    Eigen::Vector3d east(-std::sin(lon), std::cos(lon), 0.0);
    Eigen::Vector3d north(-std::sin(lat) * std::cos(lon),
                          -std::sin(lat) * std::sin(lon), std::cos(lat));
    // Project onto the triangle plane and orthonormalize.
    t1 = (east - east.dot(n) * n).normalized();
    Eigen::Vector3d n2v = north - north.dot(n) * n;
    t2 = (n2v - n2v.dot(t1) * t1).normalized();
  } else {
    t1 = Eigen::Vector3d::UnitX();
    t2 = Eigen::Vector3d::UnitY();
  }
  grad2.col(0) << t1.dot(g0), t2.dot(g0);
  grad2.col(1) << t1.dot(g1), t2.dot(g1);
  grad2.col(2) << t1.dot(g2), t2.dot(g2);
}

LocalContrib local_operator(const Mesh& mesh, int t,
                            const DeformationParams& d, double alpha,
                            const CosineField* rho_fold) {
  double area;
  Eigen::Matrix<double, 2, 3> grad2;
  triangle_geometry(mesh, t, area, grad2);

  Eigen::Vector2d sc = mesh.triangle_chart_centroid(t);
  HKappa hk;
  try {
    hk = eval_H_kappa(d, sc);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " (triangle " +
                         std::to_string(t) + ")");
  }
  double coef = std::pow(hk.kappa, 2.0 / alpha - 2.0);
  if (rho_fold) {
    double rho = eval_cosine(*rho_fold, sc);
    coef *= std::pow(1.0 + rho * rho, 1.0 / alpha);
  }
  if (!std::isfinite(coef))
    throw NumericalError("assembly: non-finite coefficient at triangle " +
                         std::to_string(t));

  LocalContrib out;
  // Reaction: coef * kappa^2 * consistent phi_i phi_j integral.
  Eigen::Matrix3d mass;
  mass << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  out.B = (coef * hk.kappa * hk.kappa * area / 12.0) * mass;
  // Diffusion: coef * area * grad_i' H grad_j.
  out.G = coef * area * (grad2.transpose() * hk.H * grad2);
  return out;
}

}  // namespace

Eigen::VectorXd assemble_mass(const Mesh& mesh) {
  Eigen::VectorXd C = Eigen::VectorXd::Zero(mesh.n_vertices());
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    double a = mesh.triangle_area(t);
    if (!(a > 0))
      throw NumericalError("assemble_mass: zero-area triangle " +
                           std::to_string(t));
    for (int k = 0; k < 3; ++k) C[mesh.triangles[t].v[k]] += a / 3.0;
  }
  return C;
}

SpMat consistent_mass(const Mesh& mesh) {
  std::vector<Triplet> trip;
  trip.reserve(mesh.n_triangles() * 9);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    double a = mesh.triangle_area(t);
    const auto& v = mesh.triangles[t].v;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(v[i], v[j], a / 12.0 * (i == j ? 2.0 : 1.0));
  }
  SpMat M(mesh.n_vertices(), mesh.n_vertices());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

OperatorMatrices assemble_operator(const Mesh& mesh,
                                   const DeformationParams& d, double alpha,
                                   const CosineField* rho_fold, Exec exec) {
  if (alpha < 1.0) throw ConfigError("assemble_operator: alpha must be >= 1");
  const int nt = mesh.n_triangles();
  std::vector<LocalContrib> locals(nt);

  if (exec == Exec::parallel) {
    std::exception_ptr err;
#pragma omp parallel for schedule(static)
    for (int t = 0; t < nt; ++t) {
      try {
        locals[t] = local_operator(mesh, t, d, alpha, rho_fold);
      } catch (...) {
#pragma omp critical
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
  } else {
    for (int t = 0; t < nt; ++t)
      locals[t] = local_operator(mesh, t, d, alpha, rho_fold);
  }

  // Merge in triangle order so serial and parallel results are identical.
  std::vector<Triplet> tb, tg;
  tb.reserve(nt * 9);
  tg.reserve(nt * 9);
  for (int t = 0; t < nt; ++t) {
    const auto& v = mesh.triangles[t].v;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        tb.emplace_back(v[i], v[j], locals[t].B(i, j));
        tg.emplace_back(v[i], v[j], locals[t].G(i, j));
      }
  }
  OperatorMatrices out;
  const int n = mesh.n_vertices();
  out.B.resize(n, n);
  out.B.setFromTriplets(tb.begin(), tb.end());
  out.G.resize(n, n);
  out.G.setFromTriplets(tg.begin(), tg.end());
  out.K = out.B + out.G;
  out.C = assemble_mass(mesh);
  out.Cinv = out.C.cwiseInverse();
  return out;
}

Eigen::VectorXd assemble_rho_mass(const Mesh& mesh,
                                  const CrossCorrField& rho) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(mesh.n_vertices());
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    double a = mesh.triangle_area(t);
    double r = eval_cosine(rho.rho, mesh.triangle_chart_centroid(t));
    for (int k = 0; k < 3; ++k) diag[mesh.triangles[t].v[k]] += r * a / 3.0;
  }
  return diag;
}

CrossMatrices assemble_cross(const Mesh& mesh, const CrossCorrField& rho,
                             const SpMat& K_Y, const Eigen::VectorXd& C) {
  if (K_Y.rows() != K_Y.cols() || K_Y.rows() != C.size())
    throw ConfigError("assemble_cross: dimension mismatch between K_Y and C");
  const bool reduced = K_Y.rows() == mesh.n_active;
  if (!reduced && K_Y.rows() != mesh.n_vertices())
    throw ConfigError(
        "assemble_cross: K_Y size matches neither all nor active vertices");

  Eigen::VectorXd diag = assemble_rho_mass(mesh, rho);
  Eigen::VectorXd use = diag;
  if (reduced) {
    use.resize(mesh.n_active);
    for (int v = 0; v < mesh.n_vertices(); ++v)
      if (mesh.active_index[v] >= 0) use[mesh.active_index[v]] = diag[v];
  }
  CrossMatrices out;
  out.C_rho = SpMat(use.size(), use.size());
  for (int i = 0; i < use.size(); ++i)
    if (use[i] != 0.0) out.C_rho.insert(i, i) = use[i];
  out.C_rho.makeCompressed();
  Eigen::VectorXd neg_scale = -use.cwiseQuotient(C);
  out.K_rho = (neg_scale.asDiagonal() * K_Y).eval();
  return out;
}

SpMat restrict_to_active(const SpMat& full, const Mesh& mesh) {
  if (full.rows() != mesh.n_vertices() || full.cols() != mesh.n_vertices())
    throw ConfigError("restrict_to_active: matrix is not vertex-indexed");
  std::vector<Triplet> trip;
  trip.reserve(full.nonZeros());
  for (int k = 0; k < full.outerSize(); ++k)
    for (SpMat::InnerIterator it(full, k); it; ++it) {
      int i = mesh.active_index[it.row()];
      int j = mesh.active_index[it.col()];
      if (i >= 0 && j >= 0) trip.emplace_back(i, j, it.value());
    }
  SpMat out(mesh.n_active, mesh.n_active);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Eigen::VectorXd restrict_to_active(const Eigen::VectorXd& full,
                                   const Mesh& mesh) {
  Eigen::VectorXd out(mesh.n_active);
  for (int v = 0; v < mesh.n_vertices(); ++v)
    if (mesh.active_index[v] >= 0) out[mesh.active_index[v]] = full[v];
  return out;
}

void export_coo(const SpMat& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("export_coo: cannot open " + path);
  f.precision(17);
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      f << it.row() << " " << it.col() << " " << it.value() << "\n";
}

}  // namespace seaspde
