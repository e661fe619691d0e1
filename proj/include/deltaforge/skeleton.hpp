#pragma once

#include <cstdint>
#include <vector>

#include "deltaforge/components.hpp"
#include "deltaforge/geometry.hpp"

namespace deltaforge {

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
  auto operator<=>(const Cell&) const = default;
};

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 0/1, row-major

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {}
  bool at(int row, int col) const {
    return row >= 0 && col >= 0 && row < height && col < width &&
           data[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)] != 0;
  }
  void set(int row, int col, bool v) {
    data[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)] = v ? 1 : 0;
  }
  std::size_t count() const;
  bool operator==(const BinaryMask&) const = default;
};

/// Zhang-Suen thinning to a fixpoint. Each subiteration selects candidates
/// with the classic parallel conditions, then commits them in raster order,
/// skipping any that stopped being simple points (8-connected foreground)
/// after earlier deletions. A final pass clears remaining 2x2 blocks by
/// deleting simple pixels.
BinaryMask thin_zhang_suen(const BinaryMask& mask);

struct SkeletonEdge {
  int from = 0;  // index into SkeletonGraph::nodes
  int to = 0;
  std::vector<Cell> path;  // 8-connected pixel chain, both end nodes included
  bool operator==(const SkeletonEdge&) const = default;
};

/// Nodes are skeleton pixels whose 8-degree is not 2, plus one anchor per
/// pure cycle (its smallest (row, col) pixel). Edges are maximal chains of
/// degree-2 pixels between nodes.
struct SkeletonGraph {
  std::vector<Cell> pixels;  // row-major
  std::vector<Cell> nodes;
  std::vector<SkeletonEdge> edges;
  bool operator==(const SkeletonGraph&) const = default;
};

SkeletonGraph skeleton_graph(const BinaryMask& skeleton);

SkeletonGraph skeletonize(const ComponentLabeling& labeling, int component_id);

/// Edge paths as polylines through pixel centers (col + 0.5, row + 0.5).
MultiLineString skeleton_lines(const SkeletonGraph& graph);

}  // namespace deltaforge
