#include "seaspde/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace seaspde {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

double parse_double(const std::string& s, int line_no, const char* what) {
  try {
    size_t pos;
    double v = std::stod(s, &pos);
    return v;
  } catch (...) {
    throw DataError(std::string("line ") + std::to_string(line_no) +
                    ": cannot parse " + what + " from '" + s + "'");
  }
}

int axis_index(const std::vector<double>& axis, double v) {
  auto it = std::lower_bound(axis.begin(), axis.end(), v - 1e-9);
  if (it == axis.end() || std::abs(*it - v) > 1e-6) return -1;
  return static_cast<int>(it - axis.begin());
}

void write_matrix_block(std::ofstream& f, const std::string& name,
                        const Eigen::MatrixXd& m) {
  f << "begin " << name << "\n";
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) f << (j ? "," : "") << m(i, j);
    f << "\n";
  }
  f << "end\n";
}

Eigen::MatrixXd read_matrix_block(std::istream& f, int rows, int cols,
                                  const std::string& name) {
  Eigen::MatrixXd m(rows, cols);
  std::string line;
  for (int i = 0; i < rows; ++i) {
    if (!std::getline(f, line))
      throw DataError("model file: truncated block " + name);
    auto tok = split_csv_line(line);
    if (static_cast<int>(tok.size()) != cols)
      throw DataError("model file: bad row width in block " + name);
    for (int j = 0; j < cols; ++j) m(i, j) = std::stod(tok[j]);
  }
  if (!std::getline(f, line) || line != "end")
    throw DataError("model file: missing end of block " + name);
  return m;
}

}  // namespace

std::vector<Eigen::Vector2d> GriddedSeries::lattice() const {
  std::vector<Eigen::Vector2d> out;
  out.reserve(nx() * ny());
  for (int iy = 0; iy < ny(); ++iy)
    for (int ix = 0; ix < nx(); ++ix) out.emplace_back(lons[ix], lats[iy]);
  return out;
}

GriddedSeries read_series_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open series file " + path);
  struct Rec {
    double t, lon, lat, hs, t1;
  };
  std::vector<Rec> recs;
  std::set<double> lon_set, lat_set;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {  // tolerate a column-name header once
      header_seen = true;
      if (line.find("time") != std::string::npos) continue;
    }
    auto tok = split_csv_line(line);
    if (tok.size() != 5)
      throw DataError("line " + std::to_string(line_no) +
                      ": expected 5 columns time,lon,lat,hs,t1");
    Rec r;
    r.t = parse_double(tok[0], line_no, "time");
    r.lon = parse_double(tok[1], line_no, "lon");
    r.lat = parse_double(tok[2], line_no, "lat");
    r.hs = parse_double(tok[3], line_no, "hs");
    r.t1 = parse_double(tok[4], line_no, "t1");
    if (!(r.hs > 0) || !(r.t1 > 0))
      throw DataError("line " + std::to_string(line_no) +
                      ": Hs and T1 must be positive");
    recs.push_back(r);
    lon_set.insert(r.lon);
    lat_set.insert(r.lat);
  }
  if (recs.empty()) throw DataError("series file " + path + " has no records");
  GriddedSeries s;
  s.lons.assign(lon_set.begin(), lon_set.end());
  s.lats.assign(lat_set.begin(), lat_set.end());
  std::map<double, int> time_of;
  for (const auto& r : recs)
    if (!time_of.count(r.t)) {
      time_of[r.t] = 0;
    }
  int ti = 0;
  for (auto& [t, idx] : time_of) {
    idx = ti++;
    s.times_hours.push_back(t);
  }
  const int cells = s.nx() * s.ny();
  s.hs.assign(s.times_hours.size(), Eigen::VectorXd::Constant(cells, kNaN));
  s.t1.assign(s.times_hours.size(), Eigen::VectorXd::Constant(cells, kNaN));
  for (const auto& r : recs) {
    int ix = axis_index(s.lons, r.lon);
    int iy = axis_index(s.lats, r.lat);
    int t = time_of[r.t];
    s.hs[t][iy * s.nx() + ix] = r.hs;
    s.t1[t][iy * s.nx() + ix] = r.t1;
  }
  return s;
}

void write_series_csv(const GriddedSeries& s, const std::string& path,
                      const std::string& header_comment) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open output file " + path);
  f.precision(17);
  if (!header_comment.empty()) f << "# " << header_comment << "\n";
  f << "time,lon,lat,hs,t1\n";
  for (size_t t = 0; t < s.times_hours.size(); ++t)
    for (int iy = 0; iy < s.ny(); ++iy)
      for (int ix = 0; ix < s.nx(); ++ix) {
        double hs = s.hs[t][iy * s.nx() + ix];
        double t1 = s.t1[t][iy * s.nx() + ix];
        if (std::isnan(hs) || std::isnan(t1)) continue;
        f << s.times_hours[t] << "," << s.lons[ix] << "," << s.lats[iy] << ","
          << hs << "," << t1 << "\n";
      }
}

GriddedSeries thin_series(const GriddedSeries& s, double hours) {
  if (hours <= 0) return s;
  GriddedSeries out;
  out.lons = s.lons;
  out.lats = s.lats;
  long last_window = -1;
  for (size_t t = 0; t < s.times_hours.size(); ++t) {
    long w = static_cast<long>(
        std::floor((s.times_hours[t] - s.times_hours[0]) / hours));
    if (w == last_window) continue;
    last_window = w;
    out.times_hours.push_back(s.times_hours[t]);
    out.hs.push_back(s.hs[t]);
    out.t1.push_back(s.t1[t]);
  }
  return out;
}

std::pair<GriddedSeries, GriddedSeries> split_alternate_days(
    const GriddedSeries& s) {
  std::vector<long> day(s.times_hours.size());
  std::set<long> days;
  for (size_t t = 0; t < s.times_hours.size(); ++t) {
    day[t] = static_cast<long>(
        std::floor((s.times_hours[t] - s.times_hours[0]) / 24.0));
    days.insert(day[t]);
  }
  if (days.size() < 2)
    throw DataError("split: need at least 2 distinct days");
  std::map<long, int> day_pos;
  int pos = 0;
  for (long d : days) day_pos[d] = pos++;
  GriddedSeries train, test;
  train.lons = test.lons = s.lons;
  train.lats = test.lats = s.lats;
  for (size_t t = 0; t < s.times_hours.size(); ++t) {
    GriddedSeries& dst = (day_pos[day[t]] % 2 == 0) ? train : test;
    dst.times_hours.push_back(s.times_hours[t]);
    dst.hs.push_back(s.hs[t]);
    dst.t1.push_back(s.t1[t]);
  }
  return {train, test};
}

Dataset to_dataset(const GriddedSeries& s) {
  const int cells = s.nx() * s.ny();
  const int n = static_cast<int>(s.times_hours.size());
  std::vector<int> keep;
  for (int c = 0; c < cells; ++c) {
    bool complete = true;
    for (int t = 0; t < n && complete; ++t)
      if (std::isnan(s.hs[t][c]) || std::isnan(s.t1[t][c])) complete = false;
    if (complete) keep.push_back(c);
  }
  if (keep.empty()) throw DataError("dataset: no completely observed location");
  Dataset d;
  d.grid_nx = s.nx();
  d.grid_ny = s.ny();
  d.log_hs.resize(n, keep.size());
  d.log_t.resize(n, keep.size());
  for (size_t j = 0; j < keep.size(); ++j) {
    int ix = keep[j] % s.nx(), iy = keep[j] / s.nx();
    d.locations.emplace_back(s.lons[ix], s.lats[iy]);
    d.grid_index.emplace_back(ix, iy);
    for (int t = 0; t < n; ++t) {
      d.log_hs(t, j) = std::log(s.hs[t][keep[j]]);
      d.log_t(t, j) = std::log(s.t1[t][keep[j]]);
    }
  }
  return d;
}

void save_model(const ModelFile& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open model file " + path);
  f.precision(17);
  f << "# seaspde model v1\n";
  f << "# config_hash=" << std::hex << m.config_hash << std::dec
    << " seed=" << m.seed << "\n";
  f << "k " << m.k << "\n";
  f << "m_rational " << m.m_rational << "\n";
  f << "alpha_x " << m.spec_x.alpha << "\n";
  f << "alpha_y " << m.spec_y.alpha << "\n";
  f << "nugget_x " << m.spec_x.nugget_variance << "\n";
  f << "nugget_y " << m.spec_y.nugget_variance << "\n";
  f << "grid " << m.grid_nx << " " << m.grid_ny << "\n";
  const BoundingBox& b = m.rho.rho.box;
  f << "box " << b.origin_s1 << " " << b.origin_s2 << " " << b.extent_s1
    << " " << b.extent_s2 << "\n";
  f << "mesh " << m.mesh_path << "\n";
  write_matrix_block(f, "h1_x", m.spec_x.deformation.h1.coefficients);
  write_matrix_block(f, "h2_x", m.spec_x.deformation.h2.coefficients);
  write_matrix_block(f, "h3_x", m.spec_x.deformation.h3.coefficients);
  write_matrix_block(f, "h1_y", m.spec_y.deformation.h1.coefficients);
  write_matrix_block(f, "h2_y", m.spec_y.deformation.h2.coefficients);
  write_matrix_block(f, "h3_y", m.spec_y.deformation.h3.coefficients);
  write_matrix_block(f, "rho", m.rho.rho.coefficients);
  f << "begin locstats\n";
  for (size_t j = 0; j < m.locations.size(); ++j)
    f << m.locations[j].x() << "," << m.locations[j].y() << ","
      << m.spec_x.mean_field[j] << "," << m.spec_x.var_field[j] << ","
      << m.spec_y.mean_field[j] << "," << m.spec_y.var_field[j] << "\n";
  f << "end\n";
}

ModelFile load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open model file " + path);
  ModelFile m;
  BoundingBox box;
  std::string line;
  std::vector<std::array<double, 6>> stats;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "k")
      ss >> m.k;
    else if (tag == "m_rational")
      ss >> m.m_rational;
    else if (tag == "alpha_x")
      ss >> m.spec_x.alpha;
    else if (tag == "alpha_y")
      ss >> m.spec_y.alpha;
    else if (tag == "nugget_x")
      ss >> m.spec_x.nugget_variance;
    else if (tag == "nugget_y")
      ss >> m.spec_y.nugget_variance;
    else if (tag == "grid")
      ss >> m.grid_nx >> m.grid_ny;
    else if (tag == "box")
      ss >> box.origin_s1 >> box.origin_s2 >> box.extent_s1 >> box.extent_s2;
    else if (tag == "mesh")
      ss >> m.mesh_path;
    else if (tag == "begin") {
      std::string name;
      ss >> name;
      if (name == "locstats") {
        while (std::getline(f, line) && line != "end") {
          auto tok = split_csv_line(line);
          if (tok.size() != 6)
            throw DataError("model file: bad locstats row");
          std::array<double, 6> a;
          for (int i = 0; i < 6; ++i) a[i] = std::stod(tok[i]);
          stats.push_back(a);
        }
      } else {
        Eigen::MatrixXd coef = read_matrix_block(f, m.k + 1, m.k + 1, name);
        CosineField field;
        field.coefficients = coef;
        if (name == "h1_x")
          m.spec_x.deformation.h1 = field;
        else if (name == "h2_x")
          m.spec_x.deformation.h2 = field;
        else if (name == "h3_x")
          m.spec_x.deformation.h3 = field;
        else if (name == "h1_y")
          m.spec_y.deformation.h1 = field;
        else if (name == "h2_y")
          m.spec_y.deformation.h2 = field;
        else if (name == "h3_y")
          m.spec_y.deformation.h3 = field;
        else if (name == "rho")
          m.rho.rho = field;
        else
          throw DataError("model file: unknown block " + name);
      }
    } else {
      throw DataError("model file: unknown tag '" + tag + "'");
    }
  }
  const size_t M = stats.size();
  m.spec_x.mean_field.resize(M);
  m.spec_x.var_field.resize(M);
  m.spec_y.mean_field.resize(M);
  m.spec_y.var_field.resize(M);
  for (size_t j = 0; j < M; ++j) {
    m.locations.emplace_back(stats[j][0], stats[j][1]);
    m.spec_x.mean_field[j] = stats[j][2];
    m.spec_x.var_field[j] = stats[j][3];
    m.spec_y.mean_field[j] = stats[j][4];
    m.spec_y.var_field[j] = stats[j][5];
  }
  // All cosine fields share the observation bounding box.
  for (CosineField* cf :
       {&m.spec_x.deformation.h1, &m.spec_x.deformation.h2,
        &m.spec_x.deformation.h3, &m.spec_y.deformation.h1,
        &m.spec_y.deformation.h2, &m.spec_y.deformation.h3, &m.rho.rho})
    cf->box = box;
  return m;
}

std::vector<Eigen::Vector2d> read_lonlat_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::vector<Eigen::Vector2d> out;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (line.find("lon") != std::string::npos) continue;
    auto tok = split_csv_line(line);
    if (tok.size() < 2)
      throw DataError("line " + std::to_string(line_no) + ": expected lon,lat");
    out.emplace_back(parse_double(tok[0], line_no, "lon"),
                     parse_double(tok[1], line_no, "lat"));
  }
  if (out.empty()) throw DataError(path + " has no points");
  return out;
}

DirectionField read_direction_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  DirectionField d;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (line.find("lon") != std::string::npos) continue;
    auto tok = split_csv_line(line);
    if (tok.size() < 3)
      throw DataError("line " + std::to_string(line_no) +
                      ": expected lon,lat,theta_deg");
    d.points.emplace_back(parse_double(tok[0], line_no, "lon"),
                          parse_double(tok[1], line_no, "lat"));
    d.theta_rad.push_back(deg2rad(parse_double(tok[2], line_no, "theta")));
  }
  if (d.points.empty()) throw DataError(path + " has no directions");
  return d;
}

int nearest_point(const std::vector<Eigen::Vector2d>& pts,
                  const Eigen::Vector2d& q) {
  int best = -1;
  double bd = std::numeric_limits<double>::max();
  for (size_t i = 0; i < pts.size(); ++i) {
    double d = (pts[i] - q).squaredNorm();
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace seaspde
