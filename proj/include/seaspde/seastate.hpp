// Deterministic sea-state mathematics: the two-parameter wave spectrum,
// period-kind conversions, and the spectral moments feeding the broaching
// engine. Pure functions throughout.
#pragma once

#include "seaspde/common.hpp"

namespace seaspde {

enum class PeriodKind { Tp, T1, Tz };

struct SeaStateParams {
  double hs = 1.0;  // significant wave height [m], > 0
  double t = 8.0;   // wave period [s], > 0
  PeriodKind kind = PeriodKind::Tp;
};

// S(omega) = c omega^-5 exp(-1.25 (omega_p/omega)^4), c = 1.25/4 Hs^2 wp^4.
double bretschneider(const SeaStateParams& p, double omega);

// Exact ratio conversions Tp = 1.408 Tz = 1.2965 T1.
double convert_period(double value, PeriodKind from, PeriodKind to);

// Spectral moments m_ij = int (omega^2/g)^i omega^j S over the bandwidth.
// The x axis points along the wave propagation direction, which makes the
// space-time cross moment negative: m11 = -(1/g) int omega^3 S. The upper
// cutoff defaults to the multiple of omega_p at which the omitted tails
// contribute < 1e-6 of m00 and < 1e-4 of m02; m20 itself only exists as a
// bandwidth-limited quantity.
struct SpectralMoments {
  double m00 = 0, m02 = 0, m11 = 0, m20 = 0;
  double omega_lo = 0, omega_hi = 0;
};

struct CutoffPolicy {
  double lo_factor = 0.3;  // omega_lo = lo_factor * omega_p
  double hi_factor = 0.0;  // 0 = tail-controlled default (~112 omega_p)
};

SpectralMoments spectral_moments(const SeaStateParams& p,
                                 const CutoffPolicy& cutoff = {});

double peak_angular_frequency(const SeaStateParams& p);  // 2 pi / Tp

// Standard normal CDF.
double normal_cdf(double x);

}  // namespace seaspde
