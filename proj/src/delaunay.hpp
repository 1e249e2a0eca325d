// Internal 2D Delaunay triangulation (Bowyer-Watson).
#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

namespace seaspde::detail {

// Triangulates the given points; returns triangles as index triples with
// counter-clockwise orientation. Throws DataError on degenerate input
// (fewer than 3 distinct non-collinear points).
std::vector<std::array<int, 3>> delaunay(
    const std::vector<Eigen::Vector2d>& pts);

}  // namespace seaspde::detail
