// Rational approximation of fractional operator powers. The power
// lambda^{alpha/2} is split into an integer factor lambda^{m_alpha - 1}
// carried by K and a fractional remainder s = alpha/2 - (m_alpha - 1)
// approximated by a degree-(m+1)/m rational function on the spectral
// interval of C^{-1}K. The sparse factors are
//   Pl = C * b * (C^{-1}K)^{m_alpha-1} prod_j (I - r2_j C^{-1}K)
//   Pr =     c * prod_i (I - r1_i C^{-1}K)
// so that Pl at alpha = 2 reduces to K, the latent precision Pl^T C^{-1} Pl
// is sparse SPD, and Pr Pl^{-1} approximates the inverse fractional power in
// the C-weighted spectral sense.
#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "seaspde/common.hpp"
#include "seaspde/sparsela.hpp"

namespace seaspde {

struct RationalCoeffs {
  int m = 2;
  int m_alpha = 1;            // max{1, floor(alpha)}
  std::vector<double> poles_r2;  // m+1 factors of Pl
  std::vector<double> roots_r1;  // m factors of Pr
  double scale_b = 1.0;
  double scale_c = 1.0;
  bool identity = false;  // fractional remainder is exactly zero
  double exponent_s = 0.0;
  double lo = 0.0, hi = 1.0;   // fitted interval
  double max_rel_error = 0.0;  // measured on a dense grid of the interval
};

// Scalar evaluation of the factored rational part (without the integer
// power); p_l/p_r approximates x^s on [lo, hi].
double eval_rational_pl(const RationalCoeffs& c, double x);
double eval_rational_pr(const RationalCoeffs& c, double x);

// Minimax-style fit (Lawson-reweighted least squares seeded by Chebyshev
// interpolation) of x^s on [lo, hi]; factored into real roots and poles.
// Throws NumericalError if the exchange fails to produce real factors.
RationalCoeffs fit_rational(double alpha, double lo, double hi, int m);

// [lambda_min, lambda_max] estimate for C^{-1}K: Gershgorin upper bound and
// an inverse-iteration lower estimate, padded by 10%.
std::pair<double, double> spectral_interval(const SpMat& K,
                                            const Eigen::VectorXd& C);

struct FractionalOperator {
  SpMat K;
  Eigen::VectorXd C;
  Eigen::VectorXd Cinv;
  RationalCoeffs coeffs;
  SpMat Pl;
  SpMat Pr;
  SpMat latent_precision;  // Pl^T C^{-1} Pl
  std::shared_ptr<SparseChol> Pl_chol;
};

FractionalOperator build_factors(const SpMat& K, const Eigen::VectorXd& C,
                                 const RationalCoeffs& coeffs);

// Convenience: spectral interval + rational fit + factors for a given alpha.
FractionalOperator make_fractional(const SpMat& K, const Eigen::VectorXd& C,
                                   double alpha, int m);

// Solves Pl u~ = noise and returns U = Pr u~. With noise ~ N(0, C) the
// result has covariance Pr Pl^{-1} C Pl^{-T} Pr^T.
Eigen::VectorXd nested_sample(const FractionalOperator& op,
                              const Eigen::VectorXd& noise);

// n independent draws with generated N(0, C) noise, one column per draw;
// per-column seed streams keep the output identical across policies.
Eigen::MatrixXd nested_sample_batch(const FractionalOperator& op, int n,
                                    std::uint64_t seed,
                                    Exec exec = Exec::parallel);

}  // namespace seaspde
