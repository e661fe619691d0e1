#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace deltaforge {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
  auto operator<=>(const Vec2&) const = default;
};

/// Integer pixel-corner vertex: x = column edge, y = row edge.
struct Corner {
  std::int32_t x = 0;
  std::int32_t y = 0;
  bool operator==(const Corner&) const = default;
  auto operator<=>(const Corner&) const = default;
};

using IntRing = std::vector<Corner>;  // closed: front() == back()
using Ring = std::vector<Vec2>;       // closed: front() == back()
using LineString = std::vector<Vec2>;

struct Polygon {
  Ring exterior;
  std::vector<Ring> holes;
  bool operator==(const Polygon&) const = default;
};

using MultiLineString = std::vector<LineString>;

/// Point | LineString | Polygon | MultiLineString.
using Geometry = std::variant<Vec2, LineString, Polygon, MultiLineString>;

struct BBox {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
  bool intersects(const BBox& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
  }
  bool operator==(const BBox&) const = default;
};

BBox bounds(const Geometry& g);

Ring to_ring(const IntRing& ring);

/// Twice the signed shoelace area; exact for integer rings.
std::int64_t twice_area(const IntRing& ring);
double signed_area(std::span<const Vec2> ring);

/// True when no two non-adjacent edges touch and no adjacent edges fold
/// back onto each other. Ring must be closed.
bool ring_is_simple(std::span<const Vec2> ring);

/// Closed, >= 4 vertices, finite, no repeated intermediate vertex, simple.
bool ring_is_valid(std::span<const Vec2> ring);

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);
bool rings_intersect(std::span<const Vec2> a, std::span<const Vec2> b);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// Even-odd crossing test; points exactly on an edge are unspecified.
bool point_in_ring(Vec2 p, std::span<const Vec2> ring);

/// Reverses a closed ring in place, keeping its first vertex.
void reverse_ring(Ring& ring);

}  // namespace deltaforge
