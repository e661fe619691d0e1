#include "deltaforge/components.hpp"

#include <algorithm>

#include "deltaforge/error.hpp"

namespace deltaforge {

std::vector<PixelPoint> to_points(const ClassMap& map) {
  std::vector<PixelPoint> out;
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      const int id = map.at(r, c);
      if (id >= 1) out.push_back({r, c, id});
    }
  }
  return out;
}

const ComponentInfo& ComponentLabeling::component(int id) const {
  if (id < 1 || static_cast<std::size_t>(id) > components.size()) {
    throw Error(ErrorCode::NoSuchComponent, "component " + std::to_string(id) + " does not exist", id);
  }
  return components[static_cast<std::size_t>(id - 1)];
}

namespace {

class DisjointSets {
 public:
  int make() {
    parent_.push_back(static_cast<int>(parent_.size()));
    return parent_.back();
  }
  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& p = parent_[static_cast<std::size_t>(x)];
      p = parent_[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent_[static_cast<std::size_t>(a)] = b;
  }

 private:
  std::vector<int> parent_;
};

}  // namespace

ComponentLabeling label_components(const ClassMap& map) {
  const int w = map.width(), h = map.height();
  ComponentLabeling out;
  out.width = w;
  out.height = h;
  out.labels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);

  // Pass 1: provisional labels, merging with the upper and left neighbours.
  DisjointSets sets;
  std::vector<int> provisional(out.labels.size(), -1);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int cls = map.at(r, c);
      if (cls < 1) continue;
      const std::size_t i = map.index(r, c);
      const bool up = r > 0 && map.at(r - 1, c) == cls;
      const bool left = c > 0 && map.at(r, c - 1) == cls;
      if (up && left) {
        provisional[i] = provisional[i - static_cast<std::size_t>(w)];
        sets.unite(provisional[i], provisional[i - 1]);
      } else if (up) {
        provisional[i] = provisional[i - static_cast<std::size_t>(w)];
      } else if (left) {
        provisional[i] = provisional[i - 1];
      } else {
        provisional[i] = sets.make();
      }
    }
  }

  // Pass 2: dense ids in first-encounter order.
  std::vector<int> final_id;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = map.index(r, c);
      if (provisional[i] < 0) continue;
      const auto root = static_cast<std::size_t>(sets.find(provisional[i]));
      if (root >= final_id.size()) final_id.resize(root + 1, 0);
      if (final_id[root] == 0) {
        final_id[root] = static_cast<int>(out.components.size()) + 1;
        out.components.push_back({final_id[root], map.at(r, c), 0, {r, c, r, c}});
      }
      const int id = final_id[root];
      out.labels[i] = id;
      auto& info = out.components[static_cast<std::size_t>(id - 1)];
      ++info.pixel_count;
      info.bbox.min_row = std::min(info.bbox.min_row, r);
      info.bbox.max_row = std::max(info.bbox.max_row, r);
      info.bbox.min_col = std::min(info.bbox.min_col, c);
      info.bbox.max_col = std::max(info.bbox.max_col, c);
    }
  }
  return out;
}

}  // namespace deltaforge
