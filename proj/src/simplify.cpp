#include "deltaforge/simplify.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace deltaforge {

namespace {

// Marks kept vertices in [first, last] of `pts` (inclusive endpoints).
void dp_mark(std::span<const Vec2> pts, std::size_t first, std::size_t last, double epsilon,
             std::vector<char>& keep) {
  // Explicit stack: staircase rings can be thousands of vertices long.
  std::vector<std::pair<std::size_t, std::size_t>> stack{{first, last}};
  while (!stack.empty()) {
    const auto [a, b] = stack.back();
    stack.pop_back();
    if (b <= a + 1) continue;
    double worst = -1.0;
    std::size_t at = a;
    for (std::size_t i = a + 1; i < b; ++i) {
      const double d = point_segment_distance(pts[i], pts[a], pts[b]);
      if (d > worst) {
        worst = d;
        at = i;
      }
    }
    if (worst > epsilon) {
      keep[at] = 1;
      stack.emplace_back(a, at);
      stack.emplace_back(at, b);
    }
  }
}

// Rings from the tracer may touch at a shared vertex; anything beyond that
// counts as crossing.
bool rings_cross(std::span<const Vec2> a, std::span<const Vec2> b) {
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    for (std::size_t j = 0; j + 1 < b.size(); ++j) {
      const Vec2 p = a[i], q = a[i + 1], r = b[j], s = b[j + 1];
      if (!segments_intersect(p, q, r, s)) continue;
      const bool shared = p == r || p == s || q == r || q == s;
      if (!shared) return true;
      const Vec2 other_a = (p == r || p == s) ? q : p;
      const Vec2 other_b = (r == p || r == q) ? s : r;
      if (point_segment_distance(other_a, r, s) == 0.0 ||
          point_segment_distance(other_b, p, q) == 0.0) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace

SimplifiedLine simplify_line(const LineString& line, double epsilon) {
  if (epsilon <= 0.0 || line.size() < 3) return {line, false};
  std::vector<char> keep(line.size(), 0);
  keep.front() = keep.back() = 1;
  dp_mark(line, 0, line.size() - 1, epsilon, keep);
  SimplifiedLine out;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (keep[i]) out.line.push_back(line[i]);
  }
  out.dropped_vertices = out.line.size() != line.size();
  return out;
}

SimplifiedRing simplify_ring(const Ring& ring, double epsilon) {
  const std::size_t n = ring.size() < 1 ? 0 : ring.size() - 1;  // distinct vertices
  if (epsilon <= 0.0 || n <= 3) return {ring, false, false};

  // Anchors: farthest-apart pair, smallest indices on ties.
  std::size_t ia = 0, ib = 1;
  double best = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = ring[i].x - ring[j].x, dy = ring[i].y - ring[j].y;
      const double d = dx * dx + dy * dy;
      if (d > best) {
        best = d;
        ia = i;
        ib = j;
      }
    }
  }

  // Unrolled copy of the ring starting at anchor A, so both chains are
  // contiguous: [0, k] is A..B and [k, n] is B..A.
  std::vector<Vec2> pts;
  pts.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) pts.push_back(ring[(ia + i) % n]);
  const std::size_t k = ib - ia;

  std::vector<char> keep(n + 1, 0);
  keep[0] = keep[k] = keep[n] = 1;
  dp_mark(pts, 0, k, epsilon, keep);
  dp_mark(pts, k, n, epsilon, keep);

  std::size_t kept = 0;
  for (std::size_t i = 0; i < n; ++i) kept += keep[i] ? 1 : 0;
  if (kept < 3) {
    // Both chains collapsed onto the anchor segment: keep the vertex
    // farthest from it.
    double far = -1.0;
    std::size_t at = 1;
    for (std::size_t i = 1; i < n; ++i) {
      if (i == k) continue;
      const double d = point_segment_distance(pts[i], pts[0], pts[k]);
      if (d > far) {
        far = d;
        at = i;
      }
    }
    keep[at] = 1;
  }

  Ring out;
  for (std::size_t i = 0; i <= n; ++i) {
    if (keep[i]) out.push_back(pts[i]);
  }
  // Restore the original starting vertex when it survived.
  const auto start = std::find(out.begin(), out.end() - 1, ring.front());
  if (start != out.end() - 1 && start != out.begin()) {
    out.pop_back();
    std::rotate(out.begin(), start, out.end());
    out.push_back(out.front());
  }

  if (!ring_is_valid(out) || std::abs(signed_area(out)) == 0.0) return {ring, false, true};
  return {std::move(out), out.size() != ring.size(), false};
}

SimplifiedPolygon simplify_polygon(const Polygon& polygon, double epsilon) {
  SimplifiedPolygon out;
  out.polygon = polygon;
  if (epsilon <= 0.0) return out;

  std::vector<Ring> rings;
  rings.push_back(polygon.exterior);
  rings.insert(rings.end(), polygon.holes.begin(), polygon.holes.end());
  std::vector<Ring> simplified;
  bool dropped = false;
  for (const auto& r : rings) {
    auto s = simplify_ring(r, epsilon);
    if (s.reverted) {
      out.reverted = true;
      return out;
    }
    // Orientation must survive: exterior positive, holes negative.
    const bool want_positive = simplified.empty();
    if ((signed_area(s.ring) > 0) != want_positive) {
      out.reverted = true;
      return out;
    }
    dropped = dropped || s.dropped_vertices;
    simplified.push_back(std::move(s.ring));
  }
  for (std::size_t i = 0; i < simplified.size(); ++i) {
    for (std::size_t j = i + 1; j < simplified.size(); ++j) {
      if (rings_cross(simplified[i], simplified[j])) {
        out.reverted = true;
        return out;
      }
    }
  }
  out.polygon.exterior = std::move(simplified.front());
  out.polygon.holes.assign(simplified.begin() + 1, simplified.end());
  out.dropped_vertices = dropped;
  return out;
}

}  // namespace deltaforge
