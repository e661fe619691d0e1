#include "deltaforge/boundary.hpp"

#include <omp.h>

#include <algorithm>

#include "deltaforge/error.hpp"

namespace deltaforge {

namespace {

// Edge directions in (x = col, y = row): 0 +x, 1 +y, 2 -x, 3 -y.
constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};

struct Edge {
  Corner from;
  int dir = 0;

  Corner to() const { return {from.x + kDx[dir], from.y + kDy[dir]}; }
};

bool edge_less(const Edge& a, const Edge& b) {
  if (a.from.y != b.from.y) return a.from.y < b.from.y;
  if (a.from.x != b.from.x) return a.from.x < b.from.x;
  return a.dir < b.dir;
}

// Unit edges of pixel (r, c) that face away from the component, oriented
// so the pixel lies to the left in a y-up frame (positive shoelace area).
void pixel_edges(const ComponentLabeling& lab, int id, int r, int c, std::vector<Edge>& out) {
  auto outside = [&](int rr, int cc) {
    return rr < 0 || cc < 0 || rr >= lab.height || cc >= lab.width || lab.at(rr, cc) != id;
  };
  if (outside(r - 1, c)) out.push_back({{c, r}, 0});
  if (outside(r, c + 1)) out.push_back({{c + 1, r}, 1});
  if (outside(r + 1, c)) out.push_back({{c + 1, r + 1}, 2});
  if (outside(r, c - 1)) out.push_back({{c, r + 1}, 3});
}

IntRing canonical_ring(const std::vector<Corner>& verts, const std::vector<int>& dirs) {
  // Drop vertices where the direction does not change.
  IntRing corners;
  const std::size_t n = verts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const int in = dirs[(i + n - 1) % n];
    if (in != dirs[i]) corners.push_back(verts[i]);
  }
  const auto start = std::min_element(corners.begin(), corners.end());
  std::rotate(corners.begin(), start, corners.end());
  corners.push_back(corners.front());
  return corners;
}

TracedBoundary trace_edges(std::vector<Edge> edges) {
  std::sort(edges.begin(), edges.end(), edge_less);
  std::vector<char> used(edges.size(), 0);

  auto outgoing = [&](Corner v) {
    const Edge key{v, 0};
    auto lo = std::lower_bound(edges.begin(), edges.end(), key, edge_less);
    auto hi = lo;
    while (hi != edges.end() && hi->from == v) ++hi;
    return std::pair{lo, hi};
  };

  TracedBoundary out;
  bool first = true;
  for (std::size_t start = 0; start < edges.size(); ++start) {
    if (used[start]) continue;
    std::vector<Corner> verts;
    std::vector<int> dirs;
    std::size_t cur = start;
    do {
      used[cur] = 1;
      verts.push_back(edges[cur].from);
      dirs.push_back(edges[cur].dir);
      auto [lo, hi] = outgoing(edges[cur].to());
      std::size_t next = static_cast<std::size_t>(lo - edges.begin());
      if (hi - lo == 2) {
        // Diagonal touch: take the turn that keeps the two background
        // pixels on separate loops.
        const int want = (edges[cur].dir + 3) % 4;
        if (edges[next].dir != want) ++next;
      }
      cur = next;
    } while (cur != start);

    IntRing ring = canonical_ring(verts, dirs);
    // Edges are sorted by (y, x): the first loop holds the top-left corner.
    if (first) {
      out.exterior = std::move(ring);
      first = false;
    } else {
      out.holes.push_back(std::move(ring));
    }
  }
  std::sort(out.holes.begin(), out.holes.end(),
            [](const IntRing& a, const IntRing& b) { return a.front() < b.front(); });
  return out;
}

}  // namespace

TracedBoundary trace_boundaries(const ComponentLabeling& labeling, int component_id) {
  const ComponentInfo& info = labeling.component(component_id);
  std::vector<Edge> edges;
  for (int r = info.bbox.min_row; r <= info.bbox.max_row; ++r) {
    for (int c = info.bbox.min_col; c <= info.bbox.max_col; ++c) {
      if (labeling.at(r, c) == component_id) pixel_edges(labeling, component_id, r, c, edges);
    }
  }
  return trace_edges(std::move(edges));
}

Polygon to_polygon(const FeaturePolygon& p) {
  Polygon out;
  out.exterior = to_ring(p.exterior);
  for (const auto& h : p.holes) out.holes.push_back(to_ring(h));
  return out;
}

namespace {

std::vector<std::vector<Edge>> collect_edges(const ComponentLabeling& labeling) {
  std::vector<std::vector<Edge>> edges(labeling.components.size());
  for (int r = 0; r < labeling.height; ++r) {
    for (int c = 0; c < labeling.width; ++c) {
      const int id = labeling.at(r, c);
      if (id > 0) pixel_edges(labeling, id, r, c, edges[static_cast<std::size_t>(id - 1)]);
    }
  }
  return edges;
}

FeaturePolygon make_polygon(const ComponentInfo& info, std::vector<Edge> edges) {
  TracedBoundary traced = trace_edges(std::move(edges));
  return {info.id, info.class_id, info.pixel_count, std::move(traced.exterior),
          std::move(traced.holes)};
}

}  // namespace

std::vector<FeaturePolygon> polygonize_serial(const ComponentLabeling& labeling) {
  auto edges = collect_edges(labeling);
  std::vector<FeaturePolygon> out;
  out.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    out.push_back(make_polygon(labeling.components[i], std::move(edges[i])));
  }
  return out;
}

std::vector<FeaturePolygon> polygonize(const ComponentLabeling& labeling, int threads) {
  auto edges = collect_edges(labeling);
  std::vector<FeaturePolygon> out(edges.size());
  const auto n = static_cast<std::ptrdiff_t>(edges.size());
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for num_threads(nthreads) schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = make_polygon(labeling.components[k], std::move(edges[k]));
  }
  return out;
}

}  // namespace deltaforge
