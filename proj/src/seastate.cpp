#include "seaspde/seastate.hpp"

#include <cmath>

#include "seaspde/quadrature.hpp"

namespace seaspde {
namespace {

double to_tp_factor(PeriodKind k) {
  switch (k) {
    case PeriodKind::Tp:
      return 1.0;
    case PeriodKind::Tz:
      return 1.408;
    case PeriodKind::T1:
      return 1.2965;
  }
  throw ConfigError("convert_period: unknown period kind");
}

// Upper cutoff multiple of omega_p keeping the m00 tail below 1e-6 and the
// m02 tail below 1e-4 (relative); closed-form tail bounds of the spectrum
// with exp(-1.25 wp^4/w^4) ~ 1 above the peak:
//   m00 tail ratio ~ 5/(4 M^4), m02 tail ratio ~ sqrt(1.25/pi)*2/M^2.
double tail_controlled_hi_factor() {
  double m_m00 = std::pow(5.0 / 4.0 / 1e-6, 0.25);
  double m_m02 = std::sqrt(2.0 * std::sqrt(1.25 / kPi) / 1e-4);
  return std::max(m_m00, m_m02);
}

}  // namespace

double peak_angular_frequency(const SeaStateParams& p) {
  if (!(p.hs > 0) || !(p.t > 0))
    throw DataError("sea state requires Hs > 0 and T > 0");
  double tp = convert_period(p.t, p.kind, PeriodKind::Tp);
  return 2.0 * kPi / tp;
}

double bretschneider(const SeaStateParams& p, double omega) {
  double wp = peak_angular_frequency(p);
  double c = 1.25 / 4.0 * p.hs * p.hs * std::pow(wp, 4);
  double r = wp / omega;
  return c * std::pow(omega, -5) * std::exp(-1.25 * r * r * r * r);
}

double convert_period(double value, PeriodKind from, PeriodKind to) {
  if (!(value > 0)) throw DataError("convert_period: period must be positive");
  return value * to_tp_factor(from) / to_tp_factor(to);
}

SpectralMoments spectral_moments(const SeaStateParams& p,
                                 const CutoffPolicy& cutoff) {
  double wp = peak_angular_frequency(p);
  SpectralMoments m;
  m.omega_lo = cutoff.lo_factor * wp;
  m.omega_hi =
      (cutoff.hi_factor > 0 ? cutoff.hi_factor : tail_controlled_hi_factor()) *
      wp;
  auto integrand = [&](double w, double* out) {
    double s = bretschneider(p, w);
    out[0] = s;
    out[1] = w * w * s;
    out[2] = w * w * w / kGravity * s;
    out[3] = std::pow(w * w / kGravity, 2) * s;
  };
  Eigen::VectorXd v = gk_adaptive(integrand, 4, m.omega_lo, m.omega_hi, 1e-9);
  m.m00 = v[0];
  m.m02 = v[1];
  m.m11 = -v[2];  // waves travel toward +x
  m.m20 = v[3];
  return m;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace seaspde
