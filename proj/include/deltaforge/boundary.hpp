#pragma once

#include <vector>

#include "deltaforge/components.hpp"
#include "deltaforge/geometry.hpp"

namespace deltaforge {

/// Closed boundary loops of one component in pixel-corner coordinates.
///
/// Rings run along unit pixel edges with collinear runs merged. Each ring
/// starts at its lexicographically smallest (x, y) vertex. The exterior has
/// positive shoelace area in (col, row) coordinates, holes negative. At a
/// corner where two component pixels touch only diagonally the boundary
/// turns so the two background pixels are cut apart; each ring is then
/// free of repeated vertices, and a hole may touch the exterior at a
/// single vertex.
struct TracedBoundary {
  IntRing exterior;
  std::vector<IntRing> holes;  // sorted by first vertex
  bool operator==(const TracedBoundary&) const = default;
};

TracedBoundary trace_boundaries(const ComponentLabeling& labeling, int component_id);

struct FeaturePolygon {
  int component_id = 0;
  int class_id = 0;
  std::size_t pixel_count = 0;
  IntRing exterior;
  std::vector<IntRing> holes;
  bool operator==(const FeaturePolygon&) const = default;
};

Polygon to_polygon(const FeaturePolygon& p);

/// One polygon per component, ordered by component id. Components are
/// traced in parallel over OpenMP threads (`threads` <= 0: runtime default).
std::vector<FeaturePolygon> polygonize(const ComponentLabeling& labeling, int threads = 0);

/// Single-threaded reference for polygonize.
std::vector<FeaturePolygon> polygonize_serial(const ComponentLabeling& labeling);

}  // namespace deltaforge
