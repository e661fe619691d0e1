#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deltaforge/georef.hpp"

namespace deltaforge {

/// Multiband pixel grid. Samples are widened to double on load; each band is a
/// row-major grid of width*height values.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, std::vector<std::vector<double>> bands,
              std::optional<double> nodata = std::nullopt, AffineTransform geo = {},
              CrsId crs = {}, std::vector<std::string> band_names = {});

  int width() const { return width_; }
  int height() const { return height_; }
  int band_count() const { return static_cast<int>(bands_.size()); }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  std::span<const double> band(int b) const { return bands_.at(static_cast<std::size_t>(b)); }
  double at(int b, int row, int col) const {
    return bands_[static_cast<std::size_t>(b)][index(row, col)];
  }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }
  bool in_bounds(int row, int col) const {
    return row >= 0 && col >= 0 && row < height_ && col < width_;
  }

  const std::optional<double>& nodata() const { return nodata_; }
  /// A pixel is nodata when any of its bands holds the nodata sentinel.
  bool is_nodata(std::size_t pixel) const;
  bool is_nodata(int row, int col) const { return is_nodata(index(row, col)); }

  const AffineTransform& geo() const { return geo_; }
  const CrsId& crs() const { return crs_; }
  const std::vector<std::string>& band_names() const { return band_names_; }

  void set_georeference(const AffineTransform& geo, const CrsId& crs);

  bool operator==(const RasterImage& other) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::vector<double>> bands_;
  std::optional<double> nodata_;
  AffineTransform geo_;
  CrsId crs_;
  std::vector<std::string> band_names_;
};

struct BandSummary {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t valid_count = 0;
};

struct BandStats {
  std::vector<BandSummary> bands;
};

/// Per-band summary over samples that are not the nodata sentinel.
BandStats band_stats(const RasterImage& raster);

struct RgbaImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // RGBA, row-major
};

struct Stretch {
  double low = 2.0;
  double high = 98.0;
};

/// Linear percentile stretch of three bands into an RGBA buffer; nodata
/// pixels get alpha 0.
RgbaImage render_preview(const RasterImage& raster, std::array<int, 3> bands,
                         Stretch stretch = {});

std::vector<std::uint8_t> encode_png(const RgbaImage& image);

/// Value at percentile `p` (0..100) of `sorted` with linear interpolation
/// between closest ranks.
double percentile(std::span<const double> sorted, double p);

/// Reads a GeoTIFF or a gridpack header, dispatching on extension.
RasterImage load_raster(const std::filesystem::path& path);

/// SHA-256 hex digest over dimensions, nodata, and sample bytes.
std::string raster_digest(const RasterImage& raster);

}  // namespace deltaforge
