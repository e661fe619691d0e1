#pragma once

#include "deltaforge/geometry.hpp"
#include "deltaforge/georef.hpp"
#include "deltaforge/store.hpp"

namespace deltaforge {

enum class WorldFrame {
  Native,  // the raster's CRS units
  LonLat,  // WGS84 degrees (x = lon, y = lat)
};

/// Maps pixel-corner geometry through the raster's affine, optionally on to
/// WGS84 lon/lat. Polygon rings are re-oriented afterwards so exteriors
/// have positive area (counter-clockwise with y pointing north) and holes
/// negative.
Geometry georeference_geometry(const Geometry& geometry, const AffineTransform& affine,
                               const CrsId& crs, WorldFrame frame = WorldFrame::Native);

/// A stored feature whose geometry has been mapped out of pixel space.
struct WorldFeature {
  StoredFeature feature;
  WorldFrame frame = WorldFrame::Native;
};

WorldFeature to_world(const StoredFeature& feature, const AffineTransform& affine, const CrsId& crs,
                      WorldFrame frame);

}  // namespace deltaforge
