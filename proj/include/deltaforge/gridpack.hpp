#pragma once

#include <filesystem>

#include "deltaforge/raster.hpp"

namespace deltaforge {

// Gridpack: header.json plus band_<i>.bin files of little-endian float64,
// row-major, in the same directory.
//
// header.json:
//   {"width":W, "height":H, "bands":B, "dtype":"f64", "nodata":v?,
//    "geotransform":[a,b,c,d,e,f], "epsg":code?, "band_names":[...]?}
//
// geotransform uses the (a..f) order of AffineTransform.

RasterImage read_gridpack(const std::filesystem::path& header_path);

/// Writes header.json and band files into `dir` (created if missing).
/// Returns the header path.
std::filesystem::path write_gridpack(const RasterImage& raster, const std::filesystem::path& dir);

}  // namespace deltaforge
