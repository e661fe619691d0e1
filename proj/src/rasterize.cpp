#include "deltaforge/rasterize.hpp"

#include <algorithm>
#include <limits>

namespace deltaforge {

ClassMap rasterize_oracle(std::span<const FeaturePolygon> polygons, int width, int height) {
  std::vector<int> table;
  for (const auto& p : polygons) table.push_back(p.class_id);
  ClassMap out(width, height, table);
  for (const auto& poly : polygons) {
    const Ring ext = to_ring(poly.exterior);
    std::vector<Ring> holes;
    for (const auto& h : poly.holes) holes.push_back(to_ring(h));
    int min_x = std::numeric_limits<int>::max(), min_y = min_x;
    int max_x = std::numeric_limits<int>::min(), max_y = max_x;
    for (const auto& v : poly.exterior) {
      min_x = std::min(min_x, v.x);
      min_y = std::min(min_y, v.y);
      max_x = std::max(max_x, v.x);
      max_y = std::max(max_y, v.y);
    }
    for (int r = std::max(0, min_y); r < std::min(height, max_y); ++r) {
      for (int c = std::max(0, min_x); c < std::min(width, max_x); ++c) {
        const Vec2 center{c + 0.5, r + 0.5};
        bool inside = point_in_ring(center, ext);
        for (const auto& h : holes) {
          if (point_in_ring(center, h)) inside = !inside;
        }
        if (inside && poly.class_id > out.at(r, c)) out.set(r, c, poly.class_id);
      }
    }
  }
  return out;
}

}  // namespace deltaforge
