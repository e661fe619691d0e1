#pragma once

#include <span>

#include "deltaforge/boundary.hpp"

namespace deltaforge {

/// Burns polygons back into a class map: pixel (r, c) takes the class of a
/// polygon containing its center (c + 0.5, r + 0.5) under the even-odd rule.
/// Where polygons overlap the larger class id wins.
ClassMap rasterize_oracle(std::span<const FeaturePolygon> polygons, int width, int height);

}  // namespace deltaforge
