#pragma once

#include <vector>

#include "eitms/mesh.hpp"

namespace eitms::detail {

// sign of the orientation determinant of (a, b, c); exact
int orient(const Point& a, const Point& b, const Point& c);
// > 0 if d is strictly inside the circle through counter-clockwise a, b, c; exact
int incircle(const Point& a, const Point& b, const Point& c, const Point& d);

// Delaunay triangulation of distinct points (counter-clockwise triangles).
std::vector<Triangle> delaunay(const std::vector<Point>& pts);

}  // namespace eitms::detail
