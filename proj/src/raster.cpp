#include "deltaforge/raster.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>

#include "deltaforge/error.hpp"
#include "deltaforge/geotiff.hpp"
#include "deltaforge/gridpack.hpp"

namespace deltaforge {

RasterImage::RasterImage(int width, int height, std::vector<std::vector<double>> bands,
                         std::optional<double> nodata, AffineTransform geo, CrsId crs,
                         std::vector<std::string> band_names)
    : width_(width),
      height_(height),
      bands_(std::move(bands)),
      nodata_(nodata),
      geo_(geo),
      crs_(std::move(crs)),
      band_names_(std::move(band_names)) {
  if (width_ <= 0 || height_ <= 0) {
    throw Error(ErrorCode::BadRaster, "raster dimensions must be positive");
  }
  if (bands_.empty()) {
    throw Error(ErrorCode::BadRaster, "raster needs at least one band");
  }
  if (!band_names_.empty() && band_names_.size() != bands_.size()) {
    throw Error(ErrorCode::BadRaster, "band_names length differs from band count");
  }
  if (nodata_ && !std::isfinite(*nodata_)) {
    throw Error(ErrorCode::BadRaster, "nodata sentinel must be finite");
  }
  for (const auto& band : bands_) {
    if (band.size() != pixel_count()) {
      throw Error(ErrorCode::BadRaster, "band size differs from width*height");
    }
    for (double v : band) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::BadRaster, "non-finite sample outside the nodata sentinel");
      }
    }
  }
  if (!(std::abs(geo_.determinant()) > kSingularDeterminant)) {
    throw Error(ErrorCode::SingularTransform, "raster geotransform is singular");
  }
}

bool RasterImage::is_nodata(std::size_t pixel) const {
  if (!nodata_) return false;
  for (const auto& band : bands_) {
    if (band[pixel] == *nodata_) return true;
  }
  return false;
}

void RasterImage::set_georeference(const AffineTransform& geo, const CrsId& crs) {
  if (!(std::abs(geo.determinant()) > kSingularDeterminant)) {
    throw Error(ErrorCode::SingularTransform, "raster geotransform is singular");
  }
  geo_ = geo;
  crs_ = crs;
}

bool RasterImage::operator==(const RasterImage& other) const {
  if (width_ != other.width_ || height_ != other.height_ || nodata_ != other.nodata_ ||
      !(geo_ == other.geo_) || !(crs_ == other.crs_) || band_names_ != other.band_names_ ||
      bands_.size() != other.bands_.size()) {
    return false;
  }
  for (std::size_t b = 0; b < bands_.size(); ++b) {
    if (std::memcmp(bands_[b].data(), other.bands_[b].data(), bands_[b].size() * sizeof(double)) !=
        0) {
      return false;
    }
  }
  return true;
}

BandStats band_stats(const RasterImage& raster) {
  BandStats stats;
  for (int b = 0; b < raster.band_count(); ++b) {
    const auto band = raster.band(b);
    BandSummary s;
    double sum = 0.0;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    for (double v : band) {
      if (raster.nodata() && v == *raster.nodata()) continue;
      ++s.valid_count;
      sum += v;
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    }
    if (s.valid_count == 0) {
      throw Error(ErrorCode::EmptyBand, "band " + std::to_string(b) + " has no valid pixels",
                  b);
    }
    s.mean = sum / static_cast<double>(s.valid_count);
    double sq = 0.0;
    for (double v : band) {
      if (raster.nodata() && v == *raster.nodata()) continue;
      sq += (v - s.mean) * (v - s.mean);
    }
    s.std = std::sqrt(sq / static_cast<double>(s.valid_count));
    // Rounding in the mean can push it a ulp outside [min, max].
    s.mean = std::clamp(s.mean, s.min, s.max);
    stats.bands.push_back(s);
  }
  return stats;
}

double percentile(std::span<const double> sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

RgbaImage render_preview(const RasterImage& raster, std::array<int, 3> bands, Stretch stretch) {
  for (int b : bands) {
    if (b < 0 || b >= raster.band_count()) {
      throw Error(ErrorCode::BadBandSelection,
                  "band " + std::to_string(b) + " not in 0.." +
                      std::to_string(raster.band_count() - 1),
                  b);
    }
  }
  if (!(stretch.low >= 0.0 && stretch.low < stretch.high && stretch.high <= 100.0)) {
    throw Error(ErrorCode::BadBandSelection, "stretch must satisfy 0 <= low < high <= 100");
  }

  const std::size_t n = raster.pixel_count();
  std::vector<char> valid(n);
  for (std::size_t i = 0; i < n; ++i) valid[i] = raster.is_nodata(i) ? 0 : 1;

  RgbaImage out;
  out.width = raster.width();
  out.height = raster.height();
  out.pixels.assign(n * 4, 0);

  for (int channel = 0; channel < 3; ++channel) {
    const auto band = raster.band(bands[static_cast<std::size_t>(channel)]);
    std::vector<double> values;
    values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (valid[i]) values.push_back(band[i]);
    }
    std::sort(values.begin(), values.end());
    const double lo = percentile(values, stretch.low);
    const double hi = percentile(values, stretch.high);
    for (std::size_t i = 0; i < n; ++i) {
      if (!valid[i]) continue;
      double g = 0.0;
      if (hi > lo) g = std::clamp((band[i] - lo) / (hi - lo) * 255.0, 0.0, 255.0);
      out.pixels[i * 4 + static_cast<std::size_t>(channel)] =
          static_cast<std::uint8_t>(std::lround(g));
    }
  }
  for (std::size_t i = 0; i < n; ++i) out.pixels[i * 4 + 3] = valid[i] ? 255 : 0;
  return out;
}

std::vector<std::uint8_t> encode_png(const RgbaImage& image) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGBA;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::Io, std::string("png sizing failed: ") + png.message);
  }
  std::vector<std::uint8_t> buffer(size);
  if (!png_image_write_to_memory(&png, buffer.data(), &size, 0, image.pixels.data(), 0,
                                 nullptr)) {
    throw Error(ErrorCode::Io, std::string("png encoding failed: ") + png.message);
  }
  buffer.resize(size);
  return buffer;
}

RasterImage load_raster(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".tif" || ext == ".tiff") return read_geotiff(path);
  if (std::filesystem::is_directory(path)) return read_gridpack(path / "header.json");
  return read_gridpack(path);
}

std::string raster_digest(const RasterImage& raster) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  const std::int64_t dims[3] = {raster.width(), raster.height(), raster.band_count()};
  EVP_DigestUpdate(ctx.get(), dims, sizeof(dims));
  const double nodata = raster.nodata().value_or(std::numeric_limits<double>::quiet_NaN());
  const std::uint8_t has_nodata = raster.nodata() ? 1 : 0;
  EVP_DigestUpdate(ctx.get(), &has_nodata, 1);
  EVP_DigestUpdate(ctx.get(), &nodata, sizeof(nodata));
  for (int b = 0; b < raster.band_count(); ++b) {
    const auto band = raster.band(b);
    EVP_DigestUpdate(ctx.get(), band.data(), band.size_bytes());
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[md[i] >> 4]);
    hex.push_back(kHex[md[i] & 15]);
  }
  return hex;
}

}  // namespace deltaforge
