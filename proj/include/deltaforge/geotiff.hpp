#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "deltaforge/raster.hpp"

namespace deltaforge {

/// Baseline TIFF 6.0 subset with GeoTIFF georeferencing: strips or tiles,
/// no compression or DEFLATE, 8/16/32-bit integers or 32-bit floats,
/// chunky or planar layout.
RasterImage read_geotiff(const std::filesystem::path& path);
RasterImage parse_geotiff(std::span<const std::uint8_t> bytes);

namespace tiff_tag {
inline constexpr std::uint16_t ImageWidth = 256;
inline constexpr std::uint16_t ImageLength = 257;
inline constexpr std::uint16_t BitsPerSample = 258;
inline constexpr std::uint16_t Compression = 259;
inline constexpr std::uint16_t StripOffsets = 273;
inline constexpr std::uint16_t SamplesPerPixel = 277;
inline constexpr std::uint16_t RowsPerStrip = 278;
inline constexpr std::uint16_t StripByteCounts = 279;
inline constexpr std::uint16_t PlanarConfiguration = 284;
inline constexpr std::uint16_t Predictor = 317;
inline constexpr std::uint16_t TileWidth = 322;
inline constexpr std::uint16_t TileLength = 323;
inline constexpr std::uint16_t TileOffsets = 324;
inline constexpr std::uint16_t TileByteCounts = 325;
inline constexpr std::uint16_t SampleFormat = 339;
inline constexpr std::uint16_t ModelPixelScale = 33550;
inline constexpr std::uint16_t ModelTiepoint = 33922;
inline constexpr std::uint16_t GeoKeyDirectory = 34735;
inline constexpr std::uint16_t GdalNodata = 42113;
}  // namespace tiff_tag

}  // namespace deltaforge
