#include "deltaforge/gridpack.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "deltaforge/error.hpp"

namespace deltaforge {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "gridpack payloads are read by memcpy on little-endian hosts");

namespace {

std::string band_file(int b) { return "band_" + std::to_string(b) + ".bin"; }

}  // namespace

RasterImage read_gridpack(const fs::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + header_path.string());
  json header;
  try {
    header = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptGridpack, header_path.string() + ": " + e.what());
  }

  int width = 0, height = 0, bands = 0;
  std::string dtype;
  std::vector<double> gt;
  try {
    width = header.at("width").get<int>();
    height = header.at("height").get<int>();
    bands = header.at("bands").get<int>();
    dtype = header.at("dtype").get<std::string>();
    gt = header.at("geotransform").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptGridpack, header_path.string() + ": " + e.what());
  }
  if (dtype != "f64") {
    throw Error(ErrorCode::UnsupportedGridpack, "dtype '" + dtype + "' is not supported");
  }
  if (width <= 0 || height <= 0 || bands <= 0 || gt.size() != 6) {
    throw Error(ErrorCode::CorruptGridpack, "bad dimensions or geotransform in header");
  }

  std::optional<double> nodata;
  if (header.contains("nodata") && !header["nodata"].is_null()) {
    nodata = header["nodata"].get<double>();
  }
  CrsId crs;
  if (header.contains("epsg") && !header["epsg"].is_null()) {
    crs = CrsId::from_epsg(header["epsg"].get<int>());
  }
  std::vector<std::string> names;
  if (header.contains("band_names")) names = header["band_names"].get<std::vector<std::string>>();

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const fs::path dir = header_path.parent_path();
  std::vector<std::vector<double>> data;
  for (int b = 0; b < bands; ++b) {
    const fs::path p = dir / band_file(b);
    std::ifstream bin(p, std::ios::binary);
    if (!bin) throw Error(ErrorCode::CorruptGridpack, "missing payload " + p.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    if (bytes.size() != count * sizeof(double)) {
      throw Error(ErrorCode::CorruptGridpack,
                  p.string() + " holds " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(count * sizeof(double)),
                  static_cast<std::int64_t>(bytes.size()));
    }
    std::vector<double> band(count);
    std::memcpy(band.data(), bytes.data(), bytes.size());
    data.push_back(std::move(band));
  }

  AffineTransform geo{gt[0], gt[1], gt[2], gt[3], gt[4], gt[5]};
  return RasterImage(width, height, std::move(data), nodata, geo, crs, std::move(names));
}

fs::path write_gridpack(const RasterImage& raster, const fs::path& dir) {
  fs::create_directories(dir);
  json header = {
      {"width", raster.width()},
      {"height", raster.height()},
      {"bands", raster.band_count()},
      {"dtype", "f64"},
  };
  if (raster.nodata()) header["nodata"] = *raster.nodata();
  const auto& g = raster.geo();
  header["geotransform"] = {g.a, g.b, g.c, g.d, g.e, g.f};
  if (raster.crs().epsg) header["epsg"] = *raster.crs().epsg;
  if (!raster.band_names().empty()) header["band_names"] = raster.band_names();

  const fs::path header_path = dir / "header.json";
  {
    std::ofstream out(header_path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + header_path.string());
    out << header.dump(2) << '\n';
  }
  for (int b = 0; b < raster.band_count(); ++b) {
    const fs::path p = dir / band_file(b);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
    const auto band = raster.band(b);
    out.write(reinterpret_cast<const char*>(band.data()),
              static_cast<std::streamsize>(band.size_bytes()));
  }
  return header_path;
}

}  // namespace deltaforge
