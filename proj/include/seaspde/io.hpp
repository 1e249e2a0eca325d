// File formats: the gridded series (CSV), the persisted model file, route
// and direction-field CSVs, and small CSV helpers shared by the CLI.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "seaspde/bivarmodel.hpp"
#include "seaspde/common.hpp"
#include "seaspde/estimation.hpp"

namespace seaspde {

// Lattice time series of (Hs, T1); missing cells are NaN.
struct GriddedSeries {
  std::vector<double> lons, lats;   // sorted axes, degrees
  std::vector<double> times_hours;  // record stamps
  std::vector<Eigen::VectorXd> hs;  // per time, iy*nx+ix layout
  std::vector<Eigen::VectorXd> t1;

  int nx() const { return static_cast<int>(lons.size()); }
  int ny() const { return static_cast<int>(lats.size()); }
  std::vector<Eigen::Vector2d> lattice() const;
};

// `time,lon,lat,hs,t1` rows; `#` lines ignored. Malformed or nonpositive
// rows raise DataError with the line number.
GriddedSeries read_series_csv(const std::string& path);
void write_series_csv(const GriddedSeries& s, const std::string& path,
                      const std::string& header_comment);

// Keeps the first record of each window of the given width (0 = passthrough).
GriddedSeries thin_series(const GriddedSeries& s, double hours);

// Alternating-day partition; the train set starts with the first day.
std::pair<GriddedSeries, GriddedSeries> split_alternate_days(
    const GriddedSeries& s);

// Locations observed at every retained time become Dataset columns.
Dataset to_dataset(const GriddedSeries& s);

struct ModelFile {
  int k = 4;
  int m_rational = 2;
  MarginalSpec spec_x, spec_y;
  CrossCorrField rho;
  std::string mesh_path;
  std::vector<Eigen::Vector2d> locations;
  int grid_nx = 0, grid_ny = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

void save_model(const ModelFile& m, const std::string& path);
ModelFile load_model(const std::string& path);

// `lon,lat` rows.
std::vector<Eigen::Vector2d> read_lonlat_csv(const std::string& path);
// `lon,lat,theta_deg` rows (wave travel direction, ccw from east).
struct DirectionField {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> theta_rad;
};
DirectionField read_direction_csv(const std::string& path);

int nearest_point(const std::vector<Eigen::Vector2d>& pts,
                  const Eigen::Vector2d& q);

}  // namespace seaspde
