#include "delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "seaspde/common.hpp"

namespace seaspde::detail {
namespace {

// Signed doubled area of (a,b,c); positive for counter-clockwise.
long double orient2d(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                     const Eigen::Vector2d& c) {
  long double abx = (long double)b.x() - a.x();
  long double aby = (long double)b.y() - a.y();
  long double acx = (long double)c.x() - a.x();
  long double acy = (long double)c.y() - a.y();
  return abx * acy - aby * acx;
}

// > 0 when p lies inside the circumcircle of ccw triangle (a,b,c).
long double incircle(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                     const Eigen::Vector2d& c, const Eigen::Vector2d& p) {
  long double ax = (long double)a.x() - p.x(), ay = (long double)a.y() - p.y();
  long double bx = (long double)b.x() - p.x(), by = (long double)b.y() - p.y();
  long double cx = (long double)c.x() - p.x(), cy = (long double)c.y() - p.y();
  long double a2 = ax * ax + ay * ay;
  long double b2 = bx * bx + by * by;
  long double c2 = cx * cx + cy * cy;
  return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) +
         a2 * (bx * cy - by * cx);
}

struct Tri {
  std::array<int, 3> v;
  bool alive = true;
};

}  // namespace

std::vector<std::array<int, 3>> delaunay(
    const std::vector<Eigen::Vector2d>& pts) {
  const int n = static_cast<int>(pts.size());
  if (n < 3) throw DataError("delaunay: need at least 3 points");

  // Reject duplicate points.
  {
    std::vector<std::pair<std::pair<double, double>, int>> keys(n);
    for (int i = 0; i < n; ++i) keys[i] = {{pts[i].x(), pts[i].y()}, i};
    std::sort(keys.begin(), keys.end());
    for (int i = 1; i < n; ++i)
      if (keys[i].first == keys[i - 1].first)
        throw DataError("delaunay: duplicate point at index " +
                        std::to_string(keys[i].second));
  }

  // Bounding super-triangle.
  double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& p : pts) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  double d = std::max(xmax - xmin, ymax - ymin);
  if (d <= 0) d = 1.0;
  Eigen::Vector2d mid(0.5 * (xmin + xmax), 0.5 * (ymin + ymax));
  std::vector<Eigen::Vector2d> v(pts);
  int s0 = n, s1 = n + 1, s2 = n + 2;
  v.push_back(mid + Eigen::Vector2d(-20 * d, -10 * d));
  v.push_back(mid + Eigen::Vector2d(20 * d, -10 * d));
  v.push_back(mid + Eigen::Vector2d(0, 20 * d));

  std::vector<Tri> tris;
  tris.push_back({{s0, s1, s2}, true});

  // Insert points one at a time; retriangulate the star of the cavity.
  for (int ip = 0; ip < n; ++ip) {
    const Eigen::Vector2d& p = v[ip];
    std::map<std::pair<int, int>, int> edge_count;
    std::vector<std::pair<int, int>> boundary;
    for (auto& t : tris) {
      if (!t.alive) continue;
      if (incircle(v[t.v[0]], v[t.v[1]], v[t.v[2]], p) > 0) {
        t.alive = false;
        for (int e = 0; e < 3; ++e) {
          int a = t.v[e], b = t.v[(e + 1) % 3];
          auto key = std::minmax(a, b);
          edge_count[{key.first, key.second}]++;
        }
      }
    }
    // Cavity boundary = edges seen exactly once among removed triangles.
    std::vector<Tri> kept;
    kept.reserve(tris.size());
    for (auto& t : tris)
      if (t.alive) kept.push_back(t);
    for (auto& t : tris) {
      if (t.alive) continue;
      for (int e = 0; e < 3; ++e) {
        int a = t.v[e], b = t.v[(e + 1) % 3];
        auto key = std::minmax(a, b);
        if (edge_count[{key.first, key.second}] == 1)
          boundary.push_back({a, b});
      }
    }
    for (auto [a, b] : boundary) {
      Tri nt{{a, b, ip}, true};
      if (orient2d(v[a], v[b], v[ip]) < 0) std::swap(nt.v[0], nt.v[1]);
      kept.push_back(nt);
    }
    tris = std::move(kept);
  }

  std::vector<std::array<int, 3>> out;
  for (const auto& t : tris) {
    if (!t.alive) continue;
    if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;  // super-tri
    if (std::abs((double)orient2d(v[t.v[0]], v[t.v[1]], v[t.v[2]])) <= 0)
      continue;
    out.push_back(t.v);
  }
  if (out.empty())
    throw DataError("delaunay: degenerate (collinear) point set");
  return out;
}

}  // namespace seaspde::detail
