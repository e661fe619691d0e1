#include "deltaforge/geotiff.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <string>

#include "deltaforge/error.hpp"

namespace deltaforge {

namespace {

enum class SampleKind { Unsigned = 1, Signed = 2, Float = 3 };

struct IfdEntry {
  std::uint16_t type = 0;
  std::uint32_t count = 0;
  std::uint64_t value_offset = 0;  // file offset of the value bytes
};

std::size_t type_size(std::uint16_t type) {
  switch (type) {
    case 1: case 2: case 6: case 7: return 1;
    case 3: case 8: return 2;
    case 4: case 9: case 11: return 4;
    case 5: case 10: case 12: return 8;
    default: return 0;
  }
}

class TiffReader {
 public:
  explicit TiffReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
    if (bytes_.size() < 8) throw Error(ErrorCode::CorruptTiff, "file shorter than header", 0);
    if (bytes_[0] == 'I' && bytes_[1] == 'I') {
      big_endian_ = false;
    } else if (bytes_[0] == 'M' && bytes_[1] == 'M') {
      big_endian_ = true;
    } else {
      throw Error(ErrorCode::CorruptTiff, "bad byte-order mark", 0);
    }
    const auto version = u16(2);
    if (version == 43) throw Error(ErrorCode::UnsupportedTiff, "BigTIFF is not supported", 0);
    if (version != 42) throw Error(ErrorCode::CorruptTiff, "bad TIFF magic", 2);
  }

  bool big_endian() const { return big_endian_; }
  std::size_t size() const { return bytes_.size(); }

  void require(std::uint64_t offset, std::uint64_t length) const {
    if (offset > bytes_.size() || length > bytes_.size() - offset) {
      throw Error(ErrorCode::CorruptTiff,
                  "read of " + std::to_string(length) + " bytes at offset " +
                      std::to_string(offset) + " runs past end of file",
                  static_cast<std::int64_t>(offset));
    }
  }

  std::uint64_t uint(std::uint64_t offset, std::size_t width) const {
    require(offset, width);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) {
      const std::uint64_t byte = bytes_[offset + i];
      v |= big_endian_ ? byte << (8 * (width - 1 - i)) : byte << (8 * i);
    }
    return v;
  }
  std::uint16_t u16(std::uint64_t offset) const { return static_cast<std::uint16_t>(uint(offset, 2)); }
  std::uint32_t u32(std::uint64_t offset) const { return static_cast<std::uint32_t>(uint(offset, 4)); }

  std::span<const std::uint8_t> slice(std::uint64_t offset, std::uint64_t length) const {
    require(offset, length);
    return bytes_.subspan(offset, length);
  }

  double value(const IfdEntry& e, std::size_t i) const {
    const std::size_t sz = type_size(e.type);
    const std::uint64_t at = e.value_offset + i * sz;
    switch (e.type) {
      case 1: case 7: return static_cast<double>(uint(at, 1));
      case 3: return static_cast<double>(uint(at, 2));
      case 4: return static_cast<double>(uint(at, 4));
      case 6: return static_cast<double>(static_cast<std::int8_t>(uint(at, 1)));
      case 8: return static_cast<double>(static_cast<std::int16_t>(uint(at, 2)));
      case 9: return static_cast<double>(static_cast<std::int32_t>(uint(at, 4)));
      case 5: return static_cast<double>(uint(at, 4)) / static_cast<double>(uint(at + 4, 4));
      case 10:
        return static_cast<double>(static_cast<std::int32_t>(uint(at, 4))) /
               static_cast<double>(static_cast<std::int32_t>(uint(at + 4, 4)));
      case 11: return static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(uint(at, 4))));
      case 12: return std::bit_cast<double>(uint(at, 8));
      default: break;
    }
    throw Error(ErrorCode::CorruptTiff, "unknown field type " + std::to_string(e.type),
                static_cast<std::int64_t>(e.value_offset));
  }

 private:
  std::span<const std::uint8_t> bytes_;
  bool big_endian_ = false;
};

struct Ifd {
  std::map<std::uint16_t, IfdEntry> entries;

  bool has(std::uint16_t tag) const { return entries.contains(tag); }
};

Ifd read_ifd(const TiffReader& r) {
  const std::uint64_t ifd_offset = r.u32(4);
  const std::uint16_t n = r.u16(ifd_offset);
  r.require(ifd_offset + 2, static_cast<std::uint64_t>(n) * 12);
  Ifd ifd;
  for (std::uint16_t i = 0; i < n; ++i) {
    const std::uint64_t at = ifd_offset + 2 + static_cast<std::uint64_t>(i) * 12;
    IfdEntry e;
    const std::uint16_t tag = r.u16(at);
    e.type = r.u16(at + 2);
    e.count = r.u32(at + 4);
    const std::size_t sz = type_size(e.type);
    if (sz == 0) continue;  // unknown types are skippable per TIFF 6.0
    const std::uint64_t total = sz * e.count;
    e.value_offset = total <= 4 ? at + 8 : r.u32(at + 8);
    r.require(e.value_offset, total);
    ifd.entries[tag] = e;
  }
  return ifd;
}

std::vector<double> values(const TiffReader& r, const Ifd& ifd, std::uint16_t tag) {
  const auto& e = ifd.entries.at(tag);
  std::vector<double> out(e.count);
  for (std::size_t i = 0; i < e.count; ++i) out[i] = r.value(e, i);
  return out;
}

std::uint64_t scalar(const TiffReader& r, const Ifd& ifd, std::uint16_t tag, std::uint64_t fallback) {
  if (!ifd.has(tag)) return fallback;
  return static_cast<std::uint64_t>(r.value(ifd.entries.at(tag), 0));
}

std::uint64_t required(const TiffReader& r, const Ifd& ifd, std::uint16_t tag) {
  if (!ifd.has(tag)) {
    throw Error(ErrorCode::CorruptTiff, "required tag " + std::to_string(tag) + " missing", tag);
  }
  return static_cast<std::uint64_t>(r.value(ifd.entries.at(tag), 0));
}

std::vector<std::uint8_t> inflate_chunk(std::span<const std::uint8_t> in, std::size_t expected,
                                        std::uint64_t offset) {
  std::vector<std::uint8_t> out(expected);
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw Error(ErrorCode::CorruptTiff, "zlib init failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const std::size_t produced = out.size() - zs.avail_out;
  inflateEnd(&zs);
  if ((rc != Z_STREAM_END && rc != Z_BUF_ERROR && rc != Z_OK) || produced < expected) {
    throw Error(ErrorCode::CorruptTiff,
                "DEFLATE chunk at offset " + std::to_string(offset) + " is truncated or corrupt",
                static_cast<std::int64_t>(offset));
  }
  return out;
}

double decode_sample(const std::uint8_t* p, int bits, SampleKind kind, bool big_endian) {
  const std::size_t width = static_cast<std::size_t>(bits / 8);
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) {
    const std::uint64_t byte = p[i];
    v |= big_endian ? byte << (8 * (width - 1 - i)) : byte << (8 * i);
  }
  switch (kind) {
    case SampleKind::Unsigned: return static_cast<double>(v);
    case SampleKind::Signed:
      if (bits == 8) return static_cast<std::int8_t>(v);
      if (bits == 16) return static_cast<std::int16_t>(v);
      return static_cast<std::int32_t>(v);
    case SampleKind::Float: return std::bit_cast<float>(static_cast<std::uint32_t>(v));
  }
  return 0.0;
}

}  // namespace

RasterImage parse_geotiff(std::span<const std::uint8_t> bytes) {
  using namespace tiff_tag;
  const TiffReader r(bytes);
  const Ifd ifd = read_ifd(r);

  const auto width = required(r, ifd, ImageWidth);
  const auto height = required(r, ifd, ImageLength);
  const auto spp = scalar(r, ifd, SamplesPerPixel, 1);
  if (width == 0 || height == 0 || spp == 0 || width > (1u << 20) || height > (1u << 20)) {
    throw Error(ErrorCode::CorruptTiff, "bad image dimensions", ImageWidth);
  }

  const auto compression = scalar(r, ifd, Compression, 1);
  if (compression != 1 && compression != 8) {
    throw Error(ErrorCode::UnsupportedTiff,
                "compression " + std::to_string(compression) + " is not supported", Compression);
  }
  if (scalar(r, ifd, Predictor, 1) != 1) {
    throw Error(ErrorCode::UnsupportedTiff, "predictors are not supported", Predictor);
  }
  const auto planar = scalar(r, ifd, PlanarConfiguration, 1);
  if (planar != 1 && planar != 2) {
    throw Error(ErrorCode::UnsupportedTiff, "bad planar configuration", PlanarConfiguration);
  }

  int bits = 1;
  if (ifd.has(BitsPerSample)) {
    const auto all = values(r, ifd, BitsPerSample);
    bits = static_cast<int>(all.front());
    for (double b : all) {
      if (static_cast<int>(b) != bits) {
        throw Error(ErrorCode::UnsupportedTiff, "mixed bit depths", BitsPerSample);
      }
    }
  }
  if (bits != 8 && bits != 16 && bits != 32) {
    throw Error(ErrorCode::UnsupportedTiff, std::to_string(bits) + "-bit samples are not supported",
                BitsPerSample);
  }
  auto kind = SampleKind::Unsigned;
  if (ifd.has(SampleFormat)) {
    const auto fmt = static_cast<int>(values(r, ifd, SampleFormat).front());
    if (fmt < 1 || fmt > 3) {
      throw Error(ErrorCode::UnsupportedTiff, "sample format " + std::to_string(fmt), SampleFormat);
    }
    kind = static_cast<SampleKind>(fmt);
  }
  if (kind == SampleKind::Float && bits != 32) {
    throw Error(ErrorCode::UnsupportedTiff, "only 32-bit floats are supported", BitsPerSample);
  }

  const bool tiled = ifd.has(TileOffsets);
  std::uint64_t chunk_w = width, chunk_h = 0;
  std::vector<double> offsets, counts;
  if (tiled) {
    chunk_w = required(r, ifd, TileWidth);
    chunk_h = required(r, ifd, TileLength);
    offsets = values(r, ifd, TileOffsets);
    if (!ifd.has(TileByteCounts)) throw Error(ErrorCode::CorruptTiff, "missing tile byte counts", TileByteCounts);
    counts = values(r, ifd, TileByteCounts);
  } else {
    if (!ifd.has(StripOffsets)) throw Error(ErrorCode::CorruptTiff, "missing strip offsets", StripOffsets);
    chunk_h = std::min<std::uint64_t>(scalar(r, ifd, RowsPerStrip, height), height);
    offsets = values(r, ifd, StripOffsets);
    if (!ifd.has(StripByteCounts)) throw Error(ErrorCode::CorruptTiff, "missing strip byte counts", StripByteCounts);
    counts = values(r, ifd, StripByteCounts);
  }
  if (chunk_w == 0 || chunk_h == 0) throw Error(ErrorCode::CorruptTiff, "zero chunk size", TileWidth);

  const std::uint64_t across = (width + chunk_w - 1) / chunk_w;
  const std::uint64_t down = (height + chunk_h - 1) / chunk_h;
  const std::uint64_t planes = planar == 2 ? spp : 1;
  const std::uint64_t samples_per_chunk_pixel = planar == 2 ? 1 : spp;
  const std::size_t bytes_per_sample = static_cast<std::size_t>(bits / 8);
  if (offsets.size() < across * down * planes || counts.size() < offsets.size()) {
    throw Error(ErrorCode::CorruptTiff, "chunk table shorter than image layout",
                tiled ? TileOffsets : StripOffsets);
  }

  const std::size_t pixels = static_cast<std::size_t>(width * height);
  std::vector<std::vector<double>> bands(spp, std::vector<double>(pixels));

  for (std::uint64_t plane = 0; plane < planes; ++plane) {
    for (std::uint64_t cy = 0; cy < down; ++cy) {
      for (std::uint64_t cx = 0; cx < across; ++cx) {
        const std::uint64_t idx = plane * across * down + cy * across + cx;
        const auto offset = static_cast<std::uint64_t>(offsets[idx]);
        const auto count = static_cast<std::uint64_t>(counts[idx]);
        // Strips may be short at the bottom; tiles are always full size.
        const std::uint64_t rows = tiled ? chunk_h : std::min(chunk_h, height - cy * chunk_h);
        const std::size_t expected =
            static_cast<std::size_t>(chunk_w * rows * samples_per_chunk_pixel) * bytes_per_sample;

        std::vector<std::uint8_t> inflated;
        const std::uint8_t* data = nullptr;
        if (compression == 8) {
          inflated = inflate_chunk(r.slice(offset, count), expected, offset);
          data = inflated.data();
        } else {
          if (count < expected) {
            throw Error(ErrorCode::CorruptTiff,
                        "chunk at offset " + std::to_string(offset) + " holds " +
                            std::to_string(count) + " bytes, expected " + std::to_string(expected),
                        static_cast<std::int64_t>(offset));
          }
          data = r.slice(offset, expected).data();
        }

        for (std::uint64_t y = 0; y < rows; ++y) {
          const std::uint64_t row = cy * chunk_h + y;
          if (row >= height) break;
          for (std::uint64_t x = 0; x < chunk_w; ++x) {
            const std::uint64_t col = cx * chunk_w + x;
            if (col >= width) break;
            const std::size_t pix = static_cast<std::size_t>(row * width + col);
            for (std::uint64_t s = 0; s < samples_per_chunk_pixel; ++s) {
              const std::size_t at =
                  static_cast<std::size_t>((y * chunk_w + x) * samples_per_chunk_pixel + s) *
                  bytes_per_sample;
              const std::uint64_t band = planar == 2 ? plane : s;
              bands[band][pix] = decode_sample(data + at, bits, kind, r.big_endian());
            }
          }
        }
      }
    }
  }

  if (!ifd.has(ModelPixelScale) || !ifd.has(ModelTiepoint)) {
    throw Error(ErrorCode::MissingGeoreference, "ModelPixelScale and ModelTiepoint are required");
  }
  const auto scale = values(r, ifd, ModelPixelScale);
  const auto tie = values(r, ifd, ModelTiepoint);
  if (scale.size() < 2 || tie.size() < 6) {
    throw Error(ErrorCode::MissingGeoreference, "short ModelPixelScale or ModelTiepoint");
  }
  AffineTransform geo;
  geo.a = scale[0];
  geo.b = 0.0;
  geo.c = tie[3] - tie[0] * scale[0];
  geo.d = 0.0;
  geo.e = -scale[1];
  geo.f = tie[4] + tie[1] * scale[1];

  CrsId crs;
  if (ifd.has(GeoKeyDirectory)) {
    const auto keys = values(r, ifd, GeoKeyDirectory);
    if (keys.size() >= 4) {
      const auto n = static_cast<std::size_t>(keys[3]);
      std::optional<int> projected, geographic;
      for (std::size_t k = 0; k < n && 4 + 4 * k + 3 < keys.size(); ++k) {
        const auto id = static_cast<int>(keys[4 + 4 * k]);
        const auto location = static_cast<int>(keys[4 + 4 * k + 1]);
        const auto value = static_cast<int>(keys[4 + 4 * k + 3]);
        if (location != 0 || value == 32767) continue;
        if (id == 3072) projected = value;
        if (id == 2048) geographic = value;
      }
      if (projected) {
        crs = CrsId::from_epsg(*projected);
      } else if (geographic) {
        crs = CrsId::from_epsg(*geographic);
      }
    }
  }

  std::optional<double> nodata;
  if (ifd.has(GdalNodata)) {
    const auto& e = ifd.entries.at(GdalNodata);
    const auto text = r.slice(e.value_offset, e.count);
    const std::string s(text.begin(), text.end());
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || !std::isfinite(v)) {
      throw Error(ErrorCode::UnsupportedTiff, "GDAL_NODATA '" + s + "' is not a finite number",
                  GdalNodata);
    }
    nodata = v;
  }

  return RasterImage(static_cast<int>(width), static_cast<int>(height), std::move(bands), nodata,
                     geo, crs);
}

RasterImage read_geotiff(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return parse_geotiff(bytes);
}

}  // namespace deltaforge
