// Spatially varying model parameters as cosine-basis regressions: the
// deformation fields h1, h2, h3 (hence H, kappa) and the cross-correlation
// field rho. All evaluation is pure and reentrant.
#pragma once

#include <Eigen/Core>

#include "seaspde/common.hpp"

namespace seaspde {

// Bounding box of the observation locations; the chart for s1, s2.
struct BoundingBox {
  double origin_s1 = 0, origin_s2 = 0;
  double extent_s1 = 1, extent_s2 = 1;
};

struct CosineField {
  Eigen::MatrixXd coefficients;  // (k+1) x (k+1), beta(n, p)
  BoundingBox box;

  CosineField() : coefficients(Eigen::MatrixXd::Zero(1, 1)) {}
  CosineField(int k, const BoundingBox& b)
      : coefficients(Eigen::MatrixXd::Zero(k + 1, k + 1)), box(b) {}
  int order() const { return static_cast<int>(coefficients.rows()) - 1; }
};

// sum_n sum_p beta(n,p) cos(n pi s1/S1) cos(p pi s2/S2); bounded outside the
// box as well, so extrapolation onto the mesh extension is permitted.
double eval_cosine(const CosineField& field, const Eigen::Vector2d& s);

struct DeformationParams {
  CosineField h1, h2, h3;
};

struct CrossCorrField {
  CosineField rho;
};

struct HKappa {
  Eigen::Matrix2d H;      // SPD
  double kappa = 1.0;     // det(Htilde)^{-1/2}
  Eigen::Matrix2d Htilde;
};

// Htilde has exp(h1), exp(h2) on the diagonal and
// (2 sigmoid(h3) - 1) exp((h1+h2)/2) off it; kappa = det(Htilde)^{-1/2} and
// H = kappa^2 Htilde. Throws NumericalError if the exponentials overflow.
HKappa eval_H_kappa(const DeformationParams& d, const Eigen::Vector2d& s);

double sigmoid(double x);

}  // namespace seaspde
