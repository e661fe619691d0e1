#include "deltaforge/world.hpp"

#include <cmath>

#include "deltaforge/error.hpp"

namespace deltaforge {

Geometry georeference_geometry(const Geometry& geometry, const AffineTransform& affine,
                               const CrsId& crs, WorldFrame frame) {
  if (!(std::abs(affine.determinant()) > kSingularDeterminant)) {
    throw Error(ErrorCode::SingularTransform, "cannot georeference through a singular affine");
  }
  if (frame == WorldFrame::LonLat && crs.kind == CrsId::Kind::Unknown) {
    throw Error(ErrorCode::UnknownCrs, "lon/lat requested but the raster CRS is " + crs.describe());
  }

  auto map = [&](Vec2 p) -> Vec2 {
    auto [x, y] = apply_affine(affine, p.x, p.y);
    if (frame == WorldFrame::LonLat && crs.kind == CrsId::Kind::Utm) {
      auto [lon, lat] = utm_to_wgs84(x, y, crs.zone, crs.hemisphere);
      return {lon, lat};
    }
    return {x, y};
  };
  auto map_all = [&](const std::vector<Vec2>& pts) {
    std::vector<Vec2> out;
    out.reserve(pts.size());
    for (auto p : pts) out.push_back(map(p));
    return out;
  };

  return std::visit(
      [&](const auto& g) -> Geometry {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Vec2>) {
          return map(g);
        } else if constexpr (std::is_same_v<T, LineString>) {
          return map_all(g);
        } else if constexpr (std::is_same_v<T, Polygon>) {
          Polygon out;
          out.exterior = map_all(g.exterior);
          if (signed_area(out.exterior) < 0) reverse_ring(out.exterior);
          for (const auto& h : g.holes) {
            Ring ring = map_all(h);
            if (signed_area(ring) > 0) reverse_ring(ring);
            out.holes.push_back(std::move(ring));
          }
          return out;
        } else {
          MultiLineString out;
          for (const auto& line : g) out.push_back(map_all(line));
          return out;
        }
      },
      geometry);
}

WorldFeature to_world(const StoredFeature& feature, const AffineTransform& affine, const CrsId& crs,
                      WorldFrame frame) {
  WorldFeature out{feature, frame};
  out.feature.geometry = georeference_geometry(feature.geometry, affine, crs, frame);
  out.feature.bbox = bounds(out.feature.geometry);
  return out;
}

}  // namespace deltaforge
