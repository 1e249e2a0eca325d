#include "seaspde/paramfield.hpp"

#include <cmath>

namespace seaspde {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double eval_cosine(const CosineField& field, const Eigen::Vector2d& s) {
  const auto& beta = field.coefficients;
  double u1 = kPi * (s.x() - field.box.origin_s1) / field.box.extent_s1;
  double u2 = kPi * (s.y() - field.box.origin_s2) / field.box.extent_s2;
  int k = field.order();
  double acc = 0.0;
  for (int n = 0; n <= k; ++n) {
    double c1 = std::cos(n * u1);
    for (int p = 0; p <= k; ++p) acc += beta(n, p) * c1 * std::cos(p * u2);
  }
  return acc;
}

HKappa eval_H_kappa(const DeformationParams& d, const Eigen::Vector2d& s) {
  double h1 = eval_cosine(d.h1, s);
  double h2 = eval_cosine(d.h2, s);
  double h3 = eval_cosine(d.h3, s);
  double e1 = std::exp(h1);
  double e2 = std::exp(h2);
  double off = (2.0 * sigmoid(h3) - 1.0) * std::exp(0.5 * (h1 + h2));
  if (!std::isfinite(e1) || !std::isfinite(e2) || !std::isfinite(off))
    throw NumericalError("eval_H_kappa: parameter overflow in exp(h)");
  HKappa out;
  out.Htilde << e1, off, off, e2;
  double det = e1 * e2 - off * off;  // > 0 since |2S(h3)-1| < 1
  if (!(det > 0) || !std::isfinite(det))
    throw NumericalError("eval_H_kappa: degenerate Htilde determinant");
  out.kappa = 1.0 / std::sqrt(det);
  out.H = out.kappa * out.kappa * out.Htilde;
  return out;
}

}  // namespace seaspde
