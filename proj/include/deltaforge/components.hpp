#pragma once

#include <vector>

#include "deltaforge/classify.hpp"

namespace deltaforge {

struct PixelPoint {
  int row = 0;
  int col = 0;
  int class_id = 0;
  bool operator==(const PixelPoint&) const = default;
};

/// Every classified pixel (class id >= 1) in row-major order.
std::vector<PixelPoint> to_points(const ClassMap& map);

struct PixelBox {
  int min_row = 0, min_col = 0, max_row = 0, max_col = 0;  // inclusive
  bool operator==(const PixelBox&) const = default;
};

struct ComponentInfo {
  int id = 0;
  int class_id = 0;
  std::size_t pixel_count = 0;
  PixelBox bbox;
  bool operator==(const ComponentInfo&) const = default;
};

/// Maximal 4-connected same-class regions. Label 0 is background; ids
/// run 1..K in order of each component's first row-major pixel.
struct ComponentLabeling {
  int width = 0;
  int height = 0;
  std::vector<int> labels;
  std::vector<ComponentInfo> components;  // components[id - 1]

  int at(int row, int col) const {
    return labels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }
  const ComponentInfo& component(int id) const;
  bool operator==(const ComponentLabeling&) const = default;
};

/// Two-pass union-find labeling.
ComponentLabeling label_components(const ClassMap& map);

}  // namespace deltaforge
