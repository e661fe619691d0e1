#include "deltaforge/skeleton.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

namespace deltaforge {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

namespace {

// Zhang-Suen neighbour order P2..P9: N, NE, E, SE, S, SW, W, NW.
constexpr std::array<int, 8> kNr = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr std::array<int, 8> kNc = {0, 1, 1, 1, 0, -1, -1, -1};

std::array<int, 8> neighbourhood(const BinaryMask& m, int r, int c) {
  std::array<int, 8> p{};
  for (std::size_t i = 0; i < 8; ++i) p[i] = m.at(r + kNr[i], c + kNc[i]) ? 1 : 0;
  return p;
}

bool zs_candidate(const std::array<int, 8>& p, int step) {
  const int p2 = p[0], p4 = p[2], p6 = p[4], p8 = p[6];
  int b = 0, a = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    b += p[i];
    if (p[i] == 0 && p[(i + 1) % 8] == 1) ++a;
  }
  if (b < 2 || b > 6 || a != 1) return false;
  if (step == 0) return p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0;
  return p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0;
}

// Yokoi connectivity number for 8-connected foreground; the pixel is simple
// (deletable without changing topology) iff it equals 1.
bool is_simple(const BinaryMask& m, int r, int c) {
  const auto p = neighbourhood(m, r, c);
  // Yokoi order x1..x8 = E, NE, N, NW, W, SW, S, SE.
  const std::array<int, 9> x = {p[2], p[1], p[0], p[7], p[6], p[5], p[4], p[3], p[2]};
  int nc = 0;
  for (std::size_t k = 0; k < 8; k += 2) {
    const int a = 1 - x[k], b = 1 - x[k + 1], cc = 1 - x[(k + 2) % 8];
    nc += a - a * b * cc;
  }
  return nc == 1;
}

}  // namespace

BinaryMask thin_zhang_suen(const BinaryMask& mask) {
  BinaryMask m = mask;
  std::vector<Cell> candidates;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int step = 0; step < 2; ++step) {
      candidates.clear();
      for (int r = 0; r < m.height; ++r) {
        for (int c = 0; c < m.width; ++c) {
          if (m.at(r, c) && zs_candidate(neighbourhood(m, r, c), step)) candidates.push_back({r, c});
        }
      }
      for (const auto& cell : candidates) {
        if (is_simple(m, cell.row, cell.col)) {
          m.set(cell.row, cell.col, false);
          changed = true;
        }
      }
    }
  }

  // Zhang-Suen can stall on 2x2 blocks whose pixels all fail the
  // directional conditions.
  bool cleared = true;
  while (cleared) {
    cleared = false;
    for (int r = 0; r + 1 < m.height; ++r) {
      for (int c = 0; c + 1 < m.width; ++c) {
        if (!(m.at(r, c) && m.at(r, c + 1) && m.at(r + 1, c) && m.at(r + 1, c + 1))) continue;
        for (const Cell cell : {Cell{r, c}, Cell{r, c + 1}, Cell{r + 1, c}, Cell{r + 1, c + 1}}) {
          if (is_simple(m, cell.row, cell.col)) {
            m.set(cell.row, cell.col, false);
            cleared = true;
            break;
          }
        }
      }
    }
  }
  return m;
}

SkeletonGraph skeleton_graph(const BinaryMask& s) {
  SkeletonGraph g;
  for (int r = 0; r < s.height; ++r) {
    for (int c = 0; c < s.width; ++c) {
      if (s.at(r, c)) g.pixels.push_back({r, c});
    }
  }
  auto key = [&](Cell c) {
    return static_cast<std::uint64_t>(c.row) * static_cast<std::uint64_t>(s.width) +
           static_cast<std::uint64_t>(c.col);
  };
  auto link = [&](Cell a, Cell b) {
    const auto ka = key(a), kb = key(b);
    return std::min(ka, kb) * (static_cast<std::uint64_t>(s.width) * static_cast<std::uint64_t>(s.height)) +
           std::max(ka, kb);
  };
  auto neighbours = [&](Cell c) {
    std::vector<Cell> out;
    for (std::size_t i = 0; i < 8; ++i) {
      const Cell n{c.row + kNr[i], c.col + kNc[i]};
      if (s.at(n.row, n.col)) out.push_back(n);
    }
    return out;
  };

  std::vector<int> node_index(s.data.size(), -1);
  for (const auto& p : g.pixels) {
    if (neighbours(p).size() != 2) {
      node_index[key(p)] = static_cast<int>(g.nodes.size());
      g.nodes.push_back(p);
    }
  }

  std::unordered_set<std::uint64_t> visited;
  auto trace_from = [&](Cell start) {
    for (const Cell first : neighbours(start)) {
      if (visited.contains(link(start, first))) continue;
      visited.insert(link(start, first));
      SkeletonEdge e;
      e.from = node_index[key(start)];
      e.path = {start};
      Cell prev = start, cur = first;
      while (node_index[key(cur)] < 0) {
        e.path.push_back(cur);
        bool moved = false;
        for (const Cell next : neighbours(cur)) {
          if (next == prev || visited.contains(link(cur, next))) continue;
          visited.insert(link(cur, next));
          prev = cur;
          cur = next;
          moved = true;
          break;
        }
        if (!moved) break;
      }
      e.path.push_back(cur);
      e.to = node_index[key(cur)];
      g.edges.push_back(std::move(e));
    }
  };

  for (std::size_t i = 0; i < g.nodes.size(); ++i) trace_from(g.nodes[i]);
  // Anything left is a cycle of degree-2 pixels.
  for (const auto& p : g.pixels) {
    bool open = false;
    for (const Cell n : neighbours(p)) open = open || !visited.contains(link(p, n));
    if (!open || node_index[key(p)] >= 0) continue;
    node_index[key(p)] = static_cast<int>(g.nodes.size());
    g.nodes.push_back(p);
    trace_from(p);
  }
  return g;
}

SkeletonGraph skeletonize(const ComponentLabeling& labeling, int component_id) {
  const ComponentInfo& info = labeling.component(component_id);
  const int r0 = info.bbox.min_row - 1, c0 = info.bbox.min_col - 1;
  BinaryMask mask(info.bbox.max_col - info.bbox.min_col + 3, info.bbox.max_row - info.bbox.min_row + 3);
  for (int r = info.bbox.min_row; r <= info.bbox.max_row; ++r) {
    for (int c = info.bbox.min_col; c <= info.bbox.max_col; ++c) {
      if (labeling.at(r, c) == component_id) mask.set(r - r0, c - c0, true);
    }
  }
  SkeletonGraph g = skeleton_graph(thin_zhang_suen(mask));
  auto shift = [&](Cell& c) {
    c.row += r0;
    c.col += c0;
  };
  for (auto& p : g.pixels) shift(p);
  for (auto& p : g.nodes) shift(p);
  for (auto& e : g.edges) {
    for (auto& p : e.path) shift(p);
  }
  return g;
}

MultiLineString skeleton_lines(const SkeletonGraph& graph) {
  MultiLineString out;
  for (const auto& e : graph.edges) {
    LineString line;
    for (const auto& p : e.path) line.push_back({p.col + 0.5, p.row + 0.5});
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace deltaforge
