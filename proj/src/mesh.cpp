#include "seaspde/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <Eigen/Geometry>

#include "delaunay.hpp"

namespace seaspde {
namespace {

// Andrew monotone chain; returns hull in ccw order.
std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> p) {
  std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  p.erase(std::unique(p.begin(), p.end(),
                      [](const auto& a, const auto& b) { return a == b; }),
          p.end());
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                  const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) -
           (a.y() - o.y()) * (b.x() - o.x());
  };
  int n = static_cast<int>(p.size());
  if (n < 3) return p;
  std::vector<Eigen::Vector2d> h(2 * n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (int i = n - 2, t = k + 1; i >= 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  return h;
}

bool in_hull(const std::vector<Eigen::Vector2d>& hull,
             const Eigen::Vector2d& q, double tol) {
  if (hull.size() < 3) return false;
  for (size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    double c = (b.x() - a.x()) * (q.y() - a.y()) -
               (b.y() - a.y()) * (q.x() - a.x());
    if (c < -tol) return false;
  }
  return true;
}

// Median nearest-neighbor spacing; sets the extension lattice pitch.
double typical_spacing(const std::vector<Eigen::Vector2d>& pts) {
  std::vector<double> nn(pts.size(), std::numeric_limits<double>::max());
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = 0; j < pts.size(); ++j)
      if (i != j) nn[i] = std::min(nn[i], (pts[i] - pts[j]).norm());
  std::nth_element(nn.begin(), nn.begin() + nn.size() / 2, nn.end());
  return nn[nn.size() / 2];
}

std::vector<Eigen::Vector2d> extension_points(
    const std::vector<Eigen::Vector2d>& pts, double width) {
  std::vector<Eigen::Vector2d> out;
  if (width <= 0) return out;
  double h = typical_spacing(pts);
  double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& p : pts) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  int n_rings = std::max(1, (int)std::ceil(width / h));
  double step = width / n_rings;
  for (int r = 1; r <= n_rings; ++r) {
    double off = r * step;
    double x0 = xmin - off, x1 = xmax + off;
    double y0 = ymin - off, y1 = ymax + off;
    int nx = std::max(2, (int)std::round((x1 - x0) / h) + 1);
    int ny = std::max(2, (int)std::round((y1 - y0) / h) + 1);
    for (int i = 0; i < nx; ++i) {
      double x = x0 + (x1 - x0) * i / (nx - 1);
      out.emplace_back(x, y0);
      out.emplace_back(x, y1);
    }
    for (int j = 1; j + 1 < ny; ++j) {
      double y = y0 + (y1 - y0) * j / (ny - 1);
      out.emplace_back(x0, y);
      out.emplace_back(x1, y);
    }
  }
  return out;
}

Mesh build_from_chart(const std::vector<Eigen::Vector2d>& grid,
                      double extension_width, bool spherical) {
  if (grid.size() < 3)
    throw DataError("mesh: need at least 3 grid points");
  if (extension_width < 0)
    throw DataError("mesh: extension width must be nonnegative");

  std::vector<Eigen::Vector2d> chart(grid);
  auto ext = extension_points(grid, extension_width);
  chart.insert(chart.end(), ext.begin(), ext.end());

  auto tri = detail::delaunay(chart);
  auto hull = convex_hull(grid);
  double hull_tol = 1e-9 * (1.0 + typical_spacing(grid));

  Mesh m;
  m.spherical = spherical;
  m.vertices.resize(chart.size());
  for (size_t i = 0; i < chart.size(); ++i) {
    m.vertices[i].index = static_cast<int>(i);
    m.vertices[i].position =
        spherical ? lonlat_to_xyz(chart[i])
                  : Eigen::Vector3d(chart[i].x(), chart[i].y(), 0.0);
  }
  m.triangles.reserve(tri.size());
  for (const auto& t : tri) {
    Triangle T;
    T.v = t;
    Eigen::Vector2d c = (chart[t[0]] + chart[t[1]] + chart[t[2]]) / 3.0;
    T.flag = in_hull(hull, c, hull_tol) ? Region::interior : Region::extension;
    m.triangles.push_back(T);
  }

  // Outer boundary = vertices of edges with a single incident triangle.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) {
      auto key = std::minmax(t.v[e], t.v[(e + 1) % 3]);
      edge_count[{key.first, key.second}]++;
    }
  for (const auto& [edge, cnt] : edge_count)
    if (cnt > 2)
      throw DataError("mesh: non-conforming triangulation (edge shared by " +
                      std::to_string(cnt) + " triangles)");
  m.on_boundary.assign(m.vertices.size(), 0);
  for (const auto& [edge, cnt] : edge_count)
    if (cnt == 1) {
      m.on_boundary[edge.first] = 1;
      m.on_boundary[edge.second] = 1;
    }
  m.active_index.assign(m.vertices.size(), -1);
  m.n_active = 0;
  for (size_t i = 0; i < m.vertices.size(); ++i)
    if (!m.on_boundary[i]) m.active_index[i] = m.n_active++;

  for (int t = 0; t < m.n_triangles(); ++t)
    if (m.triangle_area(t) <= 0)
      throw DataError("mesh: zero-area triangle " + std::to_string(t));
  return m;
}

}  // namespace

Eigen::Vector3d lonlat_to_xyz(const Eigen::Vector2d& lonlat_deg) {
  double lon = deg2rad(lonlat_deg.x());
  double lat = deg2rad(lonlat_deg.y());
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon),
          std::sin(lat)};
}

Eigen::Vector2d Mesh::chart_of_point(const Eigen::Vector3d& p) const {
  if (!spherical) return {p.x(), p.y()};
  return {rad2deg(std::atan2(p.y(), p.x())),
          rad2deg(std::asin(std::clamp(p.z() / p.norm(), -1.0, 1.0)))};
}

Eigen::Vector2d Mesh::chart_of(int vertex) const {
  return chart_of_point(vertices[vertex].position);
}

double Mesh::triangle_area(int t) const {
  const auto& T = triangles[t];
  Eigen::Vector3d e1 = vertices[T.v[1]].position - vertices[T.v[0]].position;
  Eigen::Vector3d e2 = vertices[T.v[2]].position - vertices[T.v[0]].position;
  return 0.5 * e1.cross(e2).norm();
}

Eigen::Vector3d Mesh::triangle_centroid(int t) const {
  const auto& T = triangles[t];
  return (vertices[T.v[0]].position + vertices[T.v[1]].position +
          vertices[T.v[2]].position) /
         3.0;
}

Eigen::Vector2d Mesh::triangle_chart_centroid(int t) const {
  const auto& T = triangles[t];
  return (chart_of(T.v[0]) + chart_of(T.v[1]) + chart_of(T.v[2])) / 3.0;
}

double Mesh::interior_area() const {
  double a = 0;
  for (int t = 0; t < n_triangles(); ++t)
    if (triangles[t].flag == Region::interior) a += triangle_area(t);
  return a;
}

double Mesh::total_area() const {
  double a = 0;
  for (int t = 0; t < n_triangles(); ++t) a += triangle_area(t);
  return a;
}

int Mesh::locate(const Eigen::Vector2d& q, Eigen::Vector3d* bary,
                 double tol) const {
  int best = -1;
  double best_min = -std::numeric_limits<double>::max();
  Eigen::Vector3d best_b = Eigen::Vector3d::Zero();
  for (int t = 0; t < n_triangles(); ++t) {
    const auto& T = triangles[t];
    Eigen::Vector2d a = chart_of(T.v[0]);
    Eigen::Vector2d b = chart_of(T.v[1]);
    Eigen::Vector2d c = chart_of(T.v[2]);
    double det = (b.x() - a.x()) * (c.y() - a.y()) -
                 (c.x() - a.x()) * (b.y() - a.y());
    if (det == 0) continue;
    double l1 = ((q.x() - a.x()) * (c.y() - a.y()) -
                 (c.x() - a.x()) * (q.y() - a.y())) /
                det;
    double l2 = ((b.x() - a.x()) * (q.y() - a.y()) -
                 (q.x() - a.x()) * (b.y() - a.y())) /
                det;
    double l0 = 1.0 - l1 - l2;
    double mn = std::min({l0, l1, l2});
    if (mn > best_min) {
      best_min = mn;
      best = t;
      best_b = {l0, l1, l2};
    }
  }
  double scaled_tol = tol > 1e-12 ? tol : 1e-12;
  if (best < 0 || best_min < -scaled_tol) return -1;
  if (bary) {
    // Clamp tiny negatives from edge hits and renormalize.
    Eigen::Vector3d b = best_b.cwiseMax(0.0);
    *bary = b / b.sum();
  }
  return best;
}

Mesh build_lonlat_mesh(const std::vector<Eigen::Vector2d>& lonlat_deg,
                       double extension_width_deg) {
  return build_from_chart(lonlat_deg, extension_width_deg, true);
}

Mesh build_planar_mesh(const std::vector<Eigen::Vector2d>& xy,
                       double extension_width) {
  return build_from_chart(xy, extension_width, false);
}

SpMat observation_matrix(const Mesh& mesh,
                         const std::vector<Eigen::Vector2d>& locations) {
  std::vector<Triplet> trip;
  trip.reserve(locations.size() * 3);
  for (size_t i = 0; i < locations.size(); ++i) {
    Eigen::Vector3d bary;
    int t = mesh.locate(locations[i], &bary);
    if (t < 0)
      throw DataError("observation_matrix: location " + std::to_string(i) +
                      " lies outside the mesh");
    for (int k = 0; k < 3; ++k)
      if (bary[k] != 0.0)
        trip.emplace_back(static_cast<int>(i), mesh.triangles[t].v[k],
                          bary[k]);
  }
  SpMat A(static_cast<int>(locations.size()), mesh.n_vertices());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("save_mesh: cannot open " + path);
  f << "# seaspde mesh spherical=" << (mesh.spherical ? 1 : 0) << "\n";
  f.precision(17);
  for (const auto& v : mesh.vertices)
    f << "v " << v.position.x() << " " << v.position.y() << " "
      << v.position.z() << "\n";
  for (const auto& t : mesh.triangles)
    f << "t " << t.v[0] << " " << t.v[1] << " " << t.v[2] << " "
      << (t.flag == Region::interior ? "interior" : "extension") << "\n";
}

Mesh load_mesh(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("load_mesh: cannot open " + path);
  Mesh m;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto pos = line.find("spherical=");
      if (pos != std::string::npos) m.spherical = line[pos + 10] == '1';
      continue;
    }
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vertex v;
      ss >> v.position.x() >> v.position.y() >> v.position.z();
      v.index = m.n_vertices();
      m.vertices.push_back(v);
    } else if (tag == "t") {
      Triangle t;
      std::string flag;
      ss >> t.v[0] >> t.v[1] >> t.v[2] >> flag;
      t.flag = flag == "extension" ? Region::extension : Region::interior;
      for (int k = 0; k < 3; ++k)
        if (t.v[k] < 0 || t.v[k] >= m.n_vertices())
          throw DataError("load_mesh: triangle index out of range");
      m.triangles.push_back(t);
    } else {
      throw DataError("load_mesh: unknown line tag '" + tag + "'");
    }
  }
  // Rebuild boundary/active bookkeeping.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) {
      auto key = std::minmax(t.v[e], t.v[(e + 1) % 3]);
      edge_count[{key.first, key.second}]++;
    }
  m.on_boundary.assign(m.vertices.size(), 0);
  for (const auto& [edge, cnt] : edge_count)
    if (cnt == 1) {
      m.on_boundary[edge.first] = 1;
      m.on_boundary[edge.second] = 1;
    }
  m.active_index.assign(m.vertices.size(), -1);
  m.n_active = 0;
  for (size_t i = 0; i < m.vertices.size(); ++i)
    if (!m.on_boundary[i]) m.active_index[i] = m.n_active++;
  return m;
}

}  // namespace seaspde
