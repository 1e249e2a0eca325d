// Shared helpers for the test suites.
#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "seaspde/common.hpp"
#include "seaspde/mesh.hpp"

namespace seaspde::testutil {

inline std::vector<Eigen::Vector2d> grid_points(double x0, double y0,
                                                double x1, double y1, int nx,
                                                int ny) {
  std::vector<Eigen::Vector2d> pts;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      pts.emplace_back(x0 + (x1 - x0) * i / (nx - 1),
                       y0 + (y1 - y0) * j / (ny - 1));
  return pts;
}

inline Eigen::MatrixXd dense(const SpMat& m) {
  return Eigen::MatrixXd(m);
}

// Random SPD matrix A^T A + I with a fixed-seed generator.
inline Eigen::MatrixXd random_spd(int n, unsigned seed) {
  std::mt19937 eng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = nd(eng);
  return A.transpose() * A + Eigen::MatrixXd::Identity(n, n);
}

inline SpMat to_sparse(const Eigen::MatrixXd& m, double drop_tol = 0.0) {
  std::vector<Triplet> t;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (std::abs(m(i, j)) > drop_tol) t.emplace_back(i, j, m(i, j));
  SpMat s(m.rows(), m.cols());
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

// Kolmogorov-Smirnov p-value against the standard normal CDF.
inline double ks_pvalue_normal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const int n = static_cast<int>(xs.size());
  double d = 0;
  for (int i = 0; i < n; ++i) {
    double f = 0.5 * std::erfc(-xs[i] / std::sqrt(2.0));
    d = std::max(d, std::abs(f - (i + 1.0) / n));
    d = std::max(d, std::abs(f - i * 1.0 / n));
  }
  double lambda = (std::sqrt((double)n) + 0.12 + 0.11 / std::sqrt((double)n)) * d;
  double p = 0;
  for (int k = 1; k <= 100; ++k)
    p += 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace seaspde::testutil
