#include "deltaforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace deltaforge {

namespace {

void extend(BBox& box, Vec2 p, bool& first) {
  if (first) {
    box = {p.x, p.y, p.x, p.y};
    first = false;
    return;
  }
  box.min_x = std::min(box.min_x, p.x);
  box.min_y = std::min(box.min_y, p.y);
  box.max_x = std::max(box.max_x, p.x);
  box.max_y = std::max(box.max_y, p.y);
}

double cross(Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

int sign(double v) { return (v > 0) - (v < 0); }

bool on_segment(Vec2 p, Vec2 a, Vec2 b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

}  // namespace

BBox bounds(const Geometry& g) {
  BBox box;
  bool first = true;
  std::visit(
      [&](const auto& geom) {
        using T = std::decay_t<decltype(geom)>;
        if constexpr (std::is_same_v<T, Vec2>) {
          extend(box, geom, first);
        } else if constexpr (std::is_same_v<T, LineString>) {
          for (auto p : geom) extend(box, p, first);
        } else if constexpr (std::is_same_v<T, Polygon>) {
          for (auto p : geom.exterior) extend(box, p, first);
          for (const auto& h : geom.holes) {
            for (auto p : h) extend(box, p, first);
          }
        } else {
          for (const auto& line : geom) {
            for (auto p : line) extend(box, p, first);
          }
        }
      },
      g);
  return box;
}

Ring to_ring(const IntRing& ring) {
  Ring out;
  out.reserve(ring.size());
  for (auto c : ring) out.push_back({static_cast<double>(c.x), static_cast<double>(c.y)});
  return out;
}

std::int64_t twice_area(const IntRing& ring) {
  std::int64_t s = 0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    s += static_cast<std::int64_t>(ring[i].x) * ring[i + 1].y -
         static_cast<std::int64_t>(ring[i + 1].x) * ring[i].y;
  }
  return s;
}

double signed_area(std::span<const Vec2> ring) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    s += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
  }
  return 0.5 * s;
}

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int d1 = sign(cross(c, d, a));
  const int d2 = sign(cross(c, d, b));
  const int d3 = sign(cross(a, b, c));
  const int d4 = sign(cross(a, b, d));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(a, c, d)) return true;
  if (d2 == 0 && on_segment(b, c, d)) return true;
  if (d3 == 0 && on_segment(c, a, b)) return true;
  if (d4 == 0 && on_segment(d, a, b)) return true;
  return false;
}

bool ring_is_simple(std::span<const Vec2> ring) {
  const std::size_t m = ring.size() < 2 ? 0 : ring.size() - 1;  // edge count
  if (m < 3) return false;
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2 a = ring[i], b = ring[i + 1];
    if (a == b) return false;
    for (std::size_t j = i + 1; j < m; ++j) {
      const Vec2 c = ring[j], d = ring[j + 1];
      const bool next = j == i + 1;
      const bool wrap = i == 0 && j == m - 1;
      if (next || wrap) {
        // Shared vertex is fine; folding back along the same line is not.
        const Vec2 shared = next ? b : a;
        const Vec2 p = next ? a : b;
        const Vec2 q = next ? d : c;
        if (cross(shared, p, q) == 0.0 &&
            (p.x - shared.x) * (q.x - shared.x) + (p.y - shared.y) * (q.y - shared.y) > 0.0) {
          return false;
        }
        continue;
      }
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

bool ring_is_valid(std::span<const Vec2> ring) {
  if (ring.size() < 4 || ring.front() != ring.back()) return false;
  for (auto p : ring) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  }
  std::set<Vec2> seen(ring.begin(), ring.end() - 1);
  if (seen.size() != ring.size() - 1) return false;
  return ring_is_simple(ring);
}

bool rings_intersect(std::span<const Vec2> a, std::span<const Vec2> b) {
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    for (std::size_t j = 0; j + 1 < b.size(); ++j) {
      if (segments_intersect(a[i], a[i + 1], b[j], b[j + 1])) return true;
    }
  }
  return false;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

bool point_in_ring(Vec2 p, std::span<const Vec2> ring) {
  bool inside = false;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const Vec2 a = ring[i], b = ring[i + 1];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

void reverse_ring(Ring& ring) {
  if (ring.size() > 2) std::reverse(ring.begin() + 1, ring.end() - 1);
}

}  // namespace deltaforge
