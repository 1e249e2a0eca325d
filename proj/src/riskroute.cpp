#include "seaspde/riskroute.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "seaspde/mesh.hpp"
#include "seaspde/rngutil.hpp"

namespace seaspde {
namespace {

constexpr double kEarthRadius = 6371000.0;  // [m]

double wrap_angle(double a) {
  while (a > kPi) a -= 2 * kPi;
  while (a < -kPi) a += 2 * kPi;
  return a;
}

// Bearing of the geodesic from p to q at p, ccw from east in the local
// tangent frame.
double bearing(const Eigen::Vector2d& p_lonlat, const Eigen::Vector2d& q_lonlat,
               bool spherical) {
  if (!spherical) {
    Eigen::Vector2d d = q_lonlat - p_lonlat;
    return std::atan2(d.y(), d.x());
  }
  Eigen::Vector3d a = lonlat_to_xyz(p_lonlat);
  Eigen::Vector3d b = lonlat_to_xyz(q_lonlat);
  double lon = deg2rad(p_lonlat.x()), lat = deg2rad(p_lonlat.y());
  Eigen::Vector3d east(-std::sin(lon), std::cos(lon), 0.0);
  Eigen::Vector3d north(-std::sin(lat) * std::cos(lon),
                        -std::sin(lat) * std::sin(lon), std::cos(lat));
  Eigen::Vector3d dir = b - a.dot(b) * a;  // tangent component toward q
  return std::atan2(dir.dot(north), dir.dot(east));
}

double circular_mean(double a, double b) {
  return std::atan2(0.5 * (std::sin(a) + std::sin(b)),
                    0.5 * (std::cos(a) + std::cos(b)));
}

void fill_headings(Route& r) {
  const int n = static_cast<int>(r.waypoints.size());
  r.heading_rad.resize(n);
  for (int i = 0; i < n; ++i) {
    double in = i > 0 ? bearing(r.waypoints[i - 1], r.waypoints[i], r.spherical)
                      : bearing(r.waypoints[0], r.waypoints[1], r.spherical);
    double out = i + 1 < n
                     ? bearing(r.waypoints[i], r.waypoints[i + 1], r.spherical)
                     : bearing(r.waypoints[n - 2], r.waypoints[n - 1],
                               r.spherical);
    r.heading_rad[i] = circular_mean(in, out);
  }
}

}  // namespace

Route make_great_circle_route(const Eigen::Vector2d& from_lonlat,
                              const Eigen::Vector2d& to_lonlat, int n_points,
                              double speed_mps) {
  if (n_points < 2) throw ConfigError("route: need at least 2 points");
  Route r;
  r.spherical = true;
  r.speed_mps = speed_mps;
  Eigen::Vector3d a = lonlat_to_xyz(from_lonlat);
  Eigen::Vector3d b = lonlat_to_xyz(to_lonlat);
  double ang = std::acos(std::clamp(a.dot(b), -1.0, 1.0));
  if (!(ang > 0)) throw ConfigError("route: endpoints coincide");
  for (int i = 0; i < n_points; ++i) {
    double t = static_cast<double>(i) / (n_points - 1);
    Eigen::Vector3d p = (std::sin((1 - t) * ang) * a + std::sin(t * ang) * b) /
                        std::sin(ang);
    p.normalize();
    r.waypoints.emplace_back(rad2deg(std::atan2(p.y(), p.x())),
                             rad2deg(std::asin(std::clamp(p.z(), -1.0, 1.0))));
  }
  double duration_h = ang * kEarthRadius / speed_mps / 3600.0;
  r.dt_hours = duration_h / n_points;
  fill_headings(r);
  return r;
}

Route make_planar_route(const Eigen::Vector2d& from, const Eigen::Vector2d& to,
                        int n_points, double speed_mps) {
  if (n_points < 2) throw ConfigError("route: need at least 2 points");
  Route r;
  r.spherical = false;
  r.speed_mps = speed_mps;
  for (int i = 0; i < n_points; ++i) {
    double t = static_cast<double>(i) / (n_points - 1);
    r.waypoints.push_back((1 - t) * from + t * to);
  }
  double duration_h = (to - from).norm() / speed_mps / 3600.0;
  r.dt_hours = duration_h / n_points;
  fill_headings(r);
  return r;
}

Route make_route_from_waypoints(const std::vector<Eigen::Vector2d>& waypoints,
                                double speed_mps, bool spherical) {
  if (waypoints.size() < 2)
    throw ConfigError("route: need at least 2 waypoints");
  Route r;
  r.spherical = spherical;
  r.speed_mps = speed_mps;
  r.waypoints = waypoints;
  double length = 0;
  for (size_t i = 0; i + 1 < waypoints.size(); ++i) {
    if (spherical) {
      Eigen::Vector3d a = lonlat_to_xyz(waypoints[i]);
      Eigen::Vector3d b = lonlat_to_xyz(waypoints[i + 1]);
      length += std::acos(std::clamp(a.dot(b), -1.0, 1.0)) * kEarthRadius;
    } else {
      length += (waypoints[i + 1] - waypoints[i]).norm();
    }
  }
  r.dt_hours = length / speed_mps / 3600.0 / waypoints.size();
  fill_headings(r);
  return r;
}

Route reverse_route(const Route& r) {
  Route out = r;
  std::reverse(out.waypoints.begin(), out.waypoints.end());
  fill_headings(out);
  return out;
}

double fatigue_rate(double hs, double tz, double speed_mps, double angle_rad,
                    const FatigueConfig& cfg, int* clamped) {
  if (!(hs > 0) || !(tz > 0))
    throw DataError("fatigue_rate: Hs and Tz must be positive");
  double d = 0.47 * std::pow(cfg.c_ship, cfg.beta) * std::pow(hs, cfg.beta) /
             cfg.gamma *
             (1.0 / tz -
              2.0 * kPi * speed_mps * std::cos(angle_rad) / (cfg.g * tz * tz));
  if (d < 0) {
    if (clamped) ++*clamped;
    return 0.0;
  }
  return d;
}

double accumulate_damage(const Route& route, const std::vector<double>& hs,
                         const std::vector<double>& t1,
                         const std::vector<double>& wave_dir_rad,
                         const FatigueConfig& cfg, int* clamped) {
  const size_t n = route.waypoints.size();
  if (hs.size() != n || t1.size() != n || wave_dir_rad.size() != n)
    throw DataError("accumulate_damage: fields not defined at all waypoints");
  double total = 0;
  for (size_t i = 0; i < n; ++i) {
    double tz = convert_period(t1[i], PeriodKind::T1, PeriodKind::Tz);
    double alpha = wrap_angle(route.heading_rad[i] - wave_dir_rad[i]);
    total += fatigue_rate(hs[i], tz, route.speed_mps, alpha, cfg, clamped);
  }
  return total * route.dt_hours * 3600.0;
}

double overtake_intensity(const SpectralMoments& m, double v_x) {
  if (!(m.m00 > 0) || !(m.m20 > 0))
    throw DataError("overtake_intensity: m00 and m20 must be positive");
  double disc = v_x * v_x + 2.0 * v_x * m.m11 / m.m20 + m.m02 / m.m20;
  if (disc < -1e-9 * (m.m02 / m.m20))
    throw NumericalError("overtake_intensity: negative discriminant");
  double bracket = -m.m11 / m.m20 - v_x + std::sqrt(std::max(disc, 0.0));
  return std::max(0.0, std::sqrt(m.m20 / m.m00) / (4.0 * kPi) * bracket);
}

double slope_cdf(double r, const SpectralMoments& m, double v_x) {
  if (r > 0) return 1.0;
  double denom =
      m.m20 * (v_x * v_x * m.m20 + 2.0 * v_x * m.m11 + m.m02);
  if (!(denom > 0)) throw NumericalError("slope_cdf: degenerate sea");
  double rho = (v_x * m.m20 + m.m11) / std::sqrt(denom);
  if (!(std::abs(rho) < 1.0)) throw NumericalError("slope_cdf: |rho| >= 1");
  double sigma = std::sqrt(m.m20 * (1.0 - rho * rho));
  double v = 2.0 / (1.0 - rho) *
             (normal_cdf(r / sigma) -
              rho * std::exp(-r * r / (2.0 * m.m20)) *
                  normal_cdf(r * rho / sigma));
  return std::clamp(v, 0.0, 1.0);
}

double dangerous_intensity(const SpectralMoments& m, double v_x,
                           double slope_lo, double slope_hi) {
  double mu = overtake_intensity(m, v_x);
  return mu * (slope_cdf(slope_hi, m, v_x) - slope_cdf(slope_lo, m, v_x));
}

double capsize_intensity(double hs, double t, double mu_d,
                         const BroachingConfig& cfg) {
  if (!(hs > 0) || !(t > 0))
    throw DataError("capsize_intensity: Hs and T must be positive");
  return mu_d * std::exp(cfg.beta0 + cfg.beta_h * std::log(hs) +
                         cfg.beta_t * std::log(t));
}

double route_capsize_intensity(const Route& route,
                               const std::vector<double>& hs,
                               const std::vector<double>& t1,
                               const std::vector<double>& wave_dir_rad,
                               const BroachingConfig& cfg) {
  const size_t n = route.waypoints.size();
  if (hs.size() != n || t1.size() != n || wave_dir_rad.size() != n)
    throw DataError(
        "route_capsize_intensity: fields not defined at all waypoints");
  const double cutoff = deg2rad(cfg.cutoff_angle_deg);
  double total = 0;
  for (size_t i = 0; i < n; ++i) {
    double alpha = wrap_angle(route.heading_rad[i] - wave_dir_rad[i]);
    if (std::abs(alpha) > cutoff) continue;
    SeaStateParams ss{hs[i], t1[i], PeriodKind::T1};
    SpectralMoments m = spectral_moments(ss);
    double v_x = route.speed_mps * std::cos(alpha);
    double mu_d = dangerous_intensity(m, v_x, cfg.slope_lo, cfg.slope_hi);
    total += capsize_intensity(hs[i], t1[i], mu_d, cfg);
  }
  return total * cfg.time_scale * route.dt_hours * 3600.0;
}

CdfEnvelope monte_carlo_cdf(
    const std::function<double(std::uint64_t)>& stat_for_seed,
    int n_realizations, int n_repeats, std::uint64_t seed, int grid_size,
    Exec exec) {
  CdfEnvelope env;
  env.sorted_stats.assign(n_repeats, std::vector<double>(n_realizations));
  const long total = static_cast<long>(n_realizations) * n_repeats;
  std::vector<double> flat(total);
  auto one = [&](long idx) { flat[idx] = stat_for_seed(mix_seed(seed, idx)); };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (long i = 0; i < total; ++i) one(i);
  } else {
    for (long i = 0; i < total; ++i) one(i);
  }
  double lo = flat[0], hi = flat[0];
  for (double v : flat) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (int k = 0; k < n_repeats; ++k) {
    for (int r = 0; r < n_realizations; ++r)
      env.sorted_stats[k][r] = flat[static_cast<long>(k) * n_realizations + r];
    std::sort(env.sorted_stats[k].begin(), env.sorted_stats[k].end());
  }
  if (!(hi > lo)) hi = lo + 1.0;
  env.grid.resize(grid_size);
  env.lo.resize(grid_size);
  env.hi.resize(grid_size);
  for (int g = 0; g < grid_size; ++g) {
    double x = lo + (hi - lo) * g / (grid_size - 1);
    env.grid[g] = x;
    double fmin = 1.0, fmax = 0.0;
    for (int k = 0; k < n_repeats; ++k) {
      const auto& s = env.sorted_stats[k];
      double f = static_cast<double>(
                     std::upper_bound(s.begin(), s.end(), x) - s.begin()) /
                 s.size();
      fmin = std::min(fmin, f);
      fmax = std::max(fmax, f);
    }
    env.lo[g] = fmin;
    env.hi[g] = fmax;
  }
  return env;
}

double cdf_coverage(const CdfEnvelope& env, std::vector<double> data_stats) {
  std::sort(data_stats.begin(), data_stats.end());
  int inside = 0;
  for (int g = 0; g < env.grid.size(); ++g) {
    double f = static_cast<double>(std::upper_bound(data_stats.begin(),
                                                    data_stats.end(),
                                                    env.grid[g]) -
                                   data_stats.begin()) /
               data_stats.size();
    if (f >= env.lo[g] - 1e-12 && f <= env.hi[g] + 1e-12) ++inside;
  }
  return static_cast<double>(inside) / env.grid.size();
}

double baseline_T(BaselineT mode, double hs, double gamma, double mean_x,
                  double var_x, double mean_y, double var_y) {
  if (!(hs > 0)) throw DataError("baseline_T: Hs must be positive");
  if (mode == BaselineT::proxy) return 3.75 * std::sqrt(hs);
  double zx = (std::log(hs) - mean_x) / std::sqrt(var_x);
  return std::exp(mean_y + std::sqrt(var_y) * gamma * zx);
}

std::vector<double> directions_from_gradient(
    const std::vector<Eigen::Vector2d>& lattice, int nx, int ny,
    const std::vector<double>& hs_at_lattice,
    const std::vector<Eigen::Vector2d>& query_points) {
  if (static_cast<int>(lattice.size()) != nx * ny ||
      hs_at_lattice.size() != lattice.size())
    throw DataError("directions_from_gradient: lattice dimensions mismatch");
  // Lattice is row-major over (ix, iy): index = iy*nx + ix.
  auto at = [&](int ix, int iy) { return hs_at_lattice[iy * nx + ix]; };
  double dlon = nx > 1 ? (lattice[1].x() - lattice[0].x()) : 1.0;
  double dlat = ny > 1 ? (lattice[nx].y() - lattice[0].y()) : 1.0;
  std::vector<double> out;
  out.reserve(query_points.size());
  for (const auto& q : query_points) {
    // Nearest lattice node, central differences clamped at the edges.
    int ix = std::clamp(
        (int)std::lround((q.x() - lattice[0].x()) / dlon), 0, nx - 1);
    int iy = std::clamp(
        (int)std::lround((q.y() - lattice[0].y()) / dlat), 0, ny - 1);
    int ix0 = std::max(0, ix - 1), ix1 = std::min(nx - 1, ix + 1);
    int iy0 = std::max(0, iy - 1), iy1 = std::min(ny - 1, iy + 1);
    double coslat = std::cos(deg2rad(q.y()));
    double ge = (at(ix1, iy) - at(ix0, iy)) /
                ((ix1 - ix0) * dlon * coslat + 1e-300);
    double gn = (at(ix, iy1) - at(ix, iy0)) / ((iy1 - iy0) * dlat + 1e-300);
    // Waves propagate away from the storm peak: down-gradient.
    out.push_back(std::atan2(-gn, -ge));
  }
  return out;
}

}  // namespace seaspde
