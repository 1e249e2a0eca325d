// Sparse numerical kernel: Cholesky factorization with AMD ordering,
// triangular solves, log-determinants, GMRF sampling and Takahashi selected
// inversion. Factorization is exclusive; completed factors are read-only and
// safe to share.
#pragma once

#include <cstdint>

#include <Eigen/SparseCholesky>

#include "seaspde/common.hpp"

namespace seaspde {

using PermMat = Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>;

class SparseChol {
 public:
  // Factorizes a symmetric positive definite sparse matrix.
  // Throws NumericalError (with the offending pivot when identifiable)
  // if the matrix is not numerically SPD.
  explicit SparseChol(const SpMat& A);

  int size() const { return n_; }
  double logdet() const { return logdet_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;

  // Lower factor with P A P^{-1} = L L^T.
  const SpMat& L() const { return L_; }
  // Permuted row holding original index j.
  int permuted_of(int j) const { return perm_of_original_[j]; }

  // x = P^{-1} L^{-T} z for standard normal z: samples with precision A,
  // one column per draw. Columns use independent derived streams, so the
  // result does not depend on the execution policy.
  Eigen::MatrixXd sample_gmrf(int n, std::uint64_t seed,
                              Exec exec = Exec::parallel) const;

 private:
  int n_ = 0;
  double logdet_ = 0;
  SpMat L_;
  PermMat P_, Pinv_;
  Eigen::VectorXi perm_of_original_;
};

// Entries of A^{-1} on the sparsity pattern of L + L^T, via the Takahashi
// recursion on the Cholesky factor.
class SelectedInverse {
 public:
  explicit SelectedInverse(const SparseChol& chol);

  // A^{-1}(i,j) in original indexing; *found tells whether (i,j) lies on
  // the computed pattern (value is 0 when it does not).
  double entry(int i, int j, bool* found = nullptr) const;

  // Diagonal of A^{-1} (always on the pattern).
  Eigen::VectorXd diagonal() const;

 private:
  const SparseChol* chol_;
  SpMat Z_;  // lower-triangular storage in permuted indexing
};

inline SpMat sparse_diag(const Eigen::VectorXd& d) {
  SpMat m(d.size(), d.size());
  m.reserve(Eigen::VectorXi::Constant(static_cast<int>(d.size()), 1));
  for (int i = 0; i < d.size(); ++i) m.insert(i, i) = d[i];
  m.makeCompressed();
  return m;
}

}  // namespace seaspde
