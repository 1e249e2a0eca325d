#include "seaspde/sparsela.hpp"

#include <cmath>

#include "seaspde/rngutil.hpp"

namespace seaspde {

SparseChol::SparseChol(const SpMat& A) {
  if (A.rows() != A.cols())
    throw NumericalError("factorize: matrix is not square");
  n_ = static_cast<int>(A.rows());
  Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
  llt.compute(A);
  L_ = llt.matrixL();
  if (llt.info() != Eigen::Success) {
    int pivot = -1;
    for (int i = 0; i < L_.rows(); ++i) {
      double d = L_.coeff(i, i);
      if (!(d > 0) || !std::isfinite(d)) {
        pivot = i;
        break;
      }
    }
    throw NumericalError("factorize: matrix not positive definite (pivot " +
                         std::to_string(pivot) + ")");
  }
  P_ = llt.permutationP();
  Pinv_ = llt.permutationPinv();
  // Convention-proof map: permuted vector y = P*x has y[i] = x[src[i]].
  Eigen::VectorXi iota(n_);
  for (int i = 0; i < n_; ++i) iota[i] = i;
  Eigen::VectorXi src = P_ * iota;
  perm_of_original_.resize(n_);
  for (int i = 0; i < n_; ++i) perm_of_original_[src[i]] = i;
  logdet_ = 0;
  for (int i = 0; i < n_; ++i) logdet_ += 2.0 * std::log(L_.coeff(i, i));
}

Eigen::VectorXd SparseChol::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd y = P_ * b;
  L_.triangularView<Eigen::Lower>().solveInPlace(y);
  L_.transpose().triangularView<Eigen::Upper>().solveInPlace(y);
  return Pinv_ * y;
}

Eigen::MatrixXd SparseChol::solve(const Eigen::MatrixXd& B) const {
  Eigen::MatrixXd X(B.rows(), B.cols());
  for (int c = 0; c < B.cols(); ++c)
    X.col(c) = solve(Eigen::VectorXd(B.col(c)));
  return X;
}

Eigen::MatrixXd SparseChol::sample_gmrf(int n, std::uint64_t seed,
                                        Exec exec) const {
  Eigen::MatrixXd X(n_, n);
  auto draw = [&](int c) {
    NormalSampler rng(mix_seed(seed, c));
    Eigen::VectorXd z(n_);
    for (int i = 0; i < n_; ++i) z[i] = rng();
    L_.transpose().triangularView<Eigen::Upper>().solveInPlace(z);
    X.col(c) = Pinv_ * z;
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < n; ++c) draw(c);
  } else {
    for (int c = 0; c < n; ++c) draw(c);
  }
  return X;
}

namespace {

// Binary search for row i within column j of a compressed column matrix.
inline const double* find_in_col(const SpMat& Z, int j, int i) {
  const int* idx = Z.innerIndexPtr();
  const double* val = Z.valuePtr();
  int lo = Z.outerIndexPtr()[j];
  int hi = Z.outerIndexPtr()[j + 1];
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (idx[mid] < i)
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo < Z.outerIndexPtr()[j + 1] && idx[lo] == i) return &val[lo];
  return nullptr;
}

}  // namespace

SelectedInverse::SelectedInverse(const SparseChol& chol) : chol_(&chol) {
  const SpMat& L = chol.L();
  const int n = static_cast<int>(L.rows());
  Z_ = L;  // same pattern, values overwritten below

  const int* Lp = L.outerIndexPtr();
  const int* Li = L.innerIndexPtr();
  const double* Lx = L.valuePtr();
  double* Zx = Z_.valuePtr();

  // Takahashi recursion on Sigma = (L L^T)^{-1}:
  //   Sigma_ij = (delta_ij / L_jj - sum_{k>j in col j} L_kj Sigma_ik) / L_jj
  // for j = n-1..0, i walking column j bottom-up. Every Sigma_ik needed lies
  // on the factor pattern, which is closed under the recursion.
  for (int j = n - 1; j >= 0; --j) {
    double Ljj = Lx[Lp[j]];
    for (int ptr = Lp[j + 1] - 1; ptr >= Lp[j]; --ptr) {
      int i = Li[ptr];
      double s = 0.0;
      for (int q = Lp[j] + 1; q < Lp[j + 1]; ++q) {
        int k = Li[q];
        const double* z =
            (i >= k) ? find_in_col(Z_, k, i) : find_in_col(Z_, i, k);
        if (z) s += Lx[q] * (*z);
      }
      Zx[ptr] = ((i == j ? 1.0 / Ljj : 0.0) - s) / Ljj;
    }
  }
}

double SelectedInverse::entry(int i, int j, bool* found) const {
  int pi = chol_->permuted_of(i);
  int pj = chol_->permuted_of(j);
  if (pi < pj) std::swap(pi, pj);
  const double* z = find_in_col(Z_, pj, pi);
  if (found) *found = z != nullptr;
  return z ? *z : 0.0;
}

Eigen::VectorXd SelectedInverse::diagonal() const {
  Eigen::VectorXd d(Z_.rows());
  for (int i = 0; i < Z_.rows(); ++i) {
    int p = chol_->permuted_of(i);
    const double* z = find_in_col(Z_, p, p);
    d[i] = z ? *z : 0.0;
  }
  return d;
}

}  // namespace seaspde
