// Route-level risk engines: fatigue-damage accumulation and broaching-to
// capsize intensity, plus the Monte Carlo CDF/envelope machinery used to
// compare model simulations against held-out data.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "seaspde/common.hpp"
#include "seaspde/seastate.hpp"

namespace seaspde {

struct Route {
  std::vector<Eigen::Vector2d> waypoints;  // chart coordinates (lon/lat deg)
  std::vector<double> heading_rad;  // travel direction, ccw from east
  double speed_mps = 10.0;
  double dt_hours = 0.0;  // total duration / waypoint count
  bool spherical = true;
};

// Great-circle route with n points evenly spaced in geodesic distance;
// waypoint headings are the mean of the adjacent leg bearings.
Route make_great_circle_route(const Eigen::Vector2d& from_lonlat,
                              const Eigen::Vector2d& to_lonlat, int n_points,
                              double speed_mps);
Route make_planar_route(const Eigen::Vector2d& from, const Eigen::Vector2d& to,
                        int n_points, double speed_mps);
// Route through explicit waypoints; duration from the summed leg lengths.
Route make_route_from_waypoints(const std::vector<Eigen::Vector2d>& waypoints,
                                double speed_mps, bool spherical);
Route reverse_route(const Route& r);

struct FatigueConfig {
  double c_ship = 20.0;
  double beta = 3.0;
  double gamma = 5.370317963702527e12;  // 10^12.73
  double g = kGravity;
};

struct BroachingConfig {
  double beta0 = -2.995732273553991;  // log(0.05)
  double beta_h = 7.5;
  double beta_t = -7.5;
  double slope_lo = -0.4, slope_hi = -0.2;  // dangerous slope interval
  double cutoff_angle_deg = 75.0;
  double time_scale = 1.0;  // multiplies the per-second rate
};

// Expected fatigue damage rate [1/s]; negative values (ship outrunning the
// waves) are clamped to zero and counted.
double fatigue_rate(double hs, double tz, double speed_mps, double angle_rad,
                    const FatigueConfig& cfg, int* clamped = nullptr);

// Riemann sum of the rate over the route with the route's dt (in seconds).
// hs/t1 hold per-waypoint values; wave_dir_rad is the propagation direction.
double accumulate_damage(const Route& route, const std::vector<double>& hs,
                         const std::vector<double>& t1,
                         const std::vector<double>& wave_dir_rad,
                         const FatigueConfig& cfg, int* clamped = nullptr);

// Rate of apparent waves overtaking the ship [1/s]; v_x is the ship speed
// component along the wave direction.
double overtake_intensity(const SpectralMoments& m, double v_x);

// CDF of the surface slope at the overtaking event; 1 for r > 0.
double slope_cdf(double r, const SpectralMoments& m, double v_x);

// mu thinned by the probability of a dangerously steep slope.
double dangerous_intensity(const SpectralMoments& m, double v_x,
                           double slope_lo, double slope_hi);

// Poisson regression on log Hs and log T.
double capsize_intensity(double hs, double t, double mu_d,
                         const BroachingConfig& cfg);

// Route total: waypoints with wave angle above the cutoff contribute 0.
double route_capsize_intensity(const Route& route,
                               const std::vector<double>& hs,
                               const std::vector<double>& t1,
                               const std::vector<double>& wave_dir_rad,
                               const BroachingConfig& cfg);

// Monte Carlo CDFs with pointwise envelopes: n_repeats independent batches
// of n_realizations route statistics each; stat_for_seed must be pure in its
// seed so execution order cannot change the result.
struct CdfEnvelope {
  std::vector<std::vector<double>> sorted_stats;  // per repeat
  Eigen::VectorXd grid;
  Eigen::VectorXd lo, hi;  // envelope CDF values on the grid
};

CdfEnvelope monte_carlo_cdf(
    const std::function<double(std::uint64_t)>& stat_for_seed,
    int n_realizations, int n_repeats, std::uint64_t seed, int grid_size = 201,
    Exec exec = Exec::parallel);

// Fraction of grid points where the empirical CDF of data_stats lies inside
// [lo, hi].
double cdf_coverage(const CdfEnvelope& env, std::vector<double> data_stats);

enum class BaselineT { proxy, conditional_mean };

// T baselines driven by Hs alone: the proxy Tz = 3.75 sqrt(Hs), or the
// log-scale conditional mean given Hs through the pointwise
// cross-correlation gamma. Conditional mean returns the period on its
// native data scale; the proxy returns a Tz.
double baseline_T(BaselineT mode, double hs, double gamma, double mean_x,
                  double var_x, double mean_y, double var_y);

// Wave propagation direction (ccw-from-east, radians) from the local
// down-gradient of an Hs field sampled on a lon/lat lattice.
std::vector<double> directions_from_gradient(
    const std::vector<Eigen::Vector2d>& lattice, int nx, int ny,
    const std::vector<double>& hs_at_lattice,
    const std::vector<Eigen::Vector2d>& query_points);

}  // namespace seaspde
