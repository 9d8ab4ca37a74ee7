#pragma once

#include <array>
#include <span>
#include <vector>

#include "mlq/mesh.hpp"

namespace mlq::detail {

// Delaunay triangulation of a point set by incremental Bowyer-Watson
// insertion. Returns counter-clockwise triangles indexing into `points`.
std::vector<std::array<int, 3>> delaunay_triangulate(std::span<const Point2> points);

}  // namespace mlq::detail
