#pragma once

#include "deltaforge/geometry.hpp"

namespace deltaforge {

inline constexpr double kDefaultSimplifyEpsilon = 0.75;

struct SimplifiedLine {
  LineString line;
  bool dropped_vertices = false;
};

/// Douglas-Peucker on an open polyline; endpoints are always kept. Every
/// dropped vertex lies within `epsilon` of the segment that replaced it.
SimplifiedLine simplify_line(const LineString& line, double epsilon);

struct SimplifiedRing {
  Ring ring;
  bool dropped_vertices = false;
  /// Simplification broke simplicity; `ring` is the unmodified input.
  bool reverted = false;
};

/// Ring variant: the two farthest-apart vertices are pinned and each chain
/// between them is simplified separately. Keeps at least 3 distinct
/// vertices; falls back to the input if the result self-intersects.
SimplifiedRing simplify_ring(const Ring& ring, double epsilon);

struct SimplifiedPolygon {
  Polygon polygon;
  bool dropped_vertices = false;
  bool reverted = false;
};

/// Simplifies every ring; if any simplified ring is non-simple or rings
/// start crossing each other, the whole polygon is returned unchanged.
SimplifiedPolygon simplify_polygon(const Polygon& polygon, double epsilon);

}  // namespace deltaforge
