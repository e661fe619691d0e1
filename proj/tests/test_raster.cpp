#include <doctest.h>

#include <cmath>
#include <fstream>

#include "deltaforge/error.hpp"
#include "deltaforge/gridpack.hpp"
#include "deltaforge/raster.hpp"
#include "support.hpp"

using namespace deltaforge;
using testsupport::TempDir;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

RasterImage random_raster(int w, int h, int b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  std::vector<std::vector<double>> bands(static_cast<std::size_t>(b), std::vector<double>(static_cast<std::size_t>(w * h)));
  for (auto& band : bands) {
    for (auto& v : band) v = u(rng);
  }
  return RasterImage(w, h, std::move(bands), -9999.0, {30, 0, 600000, 0, -30, 3300000}, CrsId::utm(15, Hemisphere::North),
                     {"b1", "b2", "b3"});
}

}  // namespace

TEST_CASE("raster constructor validates shape") {
  CHECK(code_of([] { RasterImage(2, 2, {{1, 2, 3}}); }) == ErrorCode::BadRaster);
  CHECK(code_of([] { RasterImage(0, 2, {{}}); }) == ErrorCode::BadRaster);
  CHECK(code_of([] { RasterImage(1, 1, {{NAN}}); }) == ErrorCode::BadRaster);
  CHECK(code_of([] { RasterImage(1, 1, {{1}}, std::nullopt, AffineTransform{0, 0, 0, 0, 0, 0}); }) == ErrorCode::SingularTransform);
}

TEST_CASE("gridpack round trip is bit exact") {
  TempDir dir;
  const RasterImage r = random_raster(16, 16, 3, 7);
  const auto header = write_gridpack(r, dir.path());
  const RasterImage back = read_gridpack(header);
  CHECK(back == r);
  CHECK(back.geo() == r.geo());
  CHECK(back.crs() == r.crs());
  CHECK(back.band_names() == r.band_names());
  CHECK(back.nodata() == r.nodata());
}

TEST_CASE("gridpack rejects size mismatch and unknown dtype") {
  TempDir dir;
  const RasterImage r(4, 4, {std::vector<double>(16, 1.0)});
  const auto header = write_gridpack(r, dir.path());
  {
    std::ofstream band(dir / "band_0.bin", std::ios::binary);
    std::vector<double> v(15, 1.0);
    band.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
  }
  CHECK(code_of([&] { read_gridpack(header); }) == ErrorCode::CorruptGridpack);

  write_gridpack(r, dir.path());
  auto text = testsupport::read_file(header);
  const auto at = text.find("\"f64\"");
  REQUIRE(at != std::string::npos);
  text.replace(at, 5, "\"f32\"");
  testsupport::write_file(header, text);
  CHECK(code_of([&] { read_gridpack(header); }) == ErrorCode::UnsupportedGridpack);
}

TEST_CASE("gridpack without epsg has unknown crs") {
  TempDir dir;
  testsupport::write_file(dir / "header.json",
                          R"({"width":1,"height":1,"bands":1,"dtype":"f64","geotransform":[1,0,0,0,1,0]})");
  const double v = 3.5;
  std::ofstream(dir / "band_0.bin", std::ios::binary).write(reinterpret_cast<const char*>(&v), 8);
  const RasterImage r = read_gridpack(dir / "header.json");
  CHECK_FALSE(r.crs().is_known());
  CHECK(r.at(0, 0, 0) == 3.5);
}

TEST_CASE("band stats") {
  SUBCASE("constant band") {
    const auto s = band_stats(RasterImage(2, 2, {{5, 5, 5, 5}}));
    CHECK(s.bands[0].min == 5.0);
    CHECK(s.bands[0].max == 5.0);
    CHECK(s.bands[0].mean == 5.0);
    CHECK(s.bands[0].std == 0.0);
  }
  SUBCASE("population std") {
    const auto s = band_stats(RasterImage(2, 1, {{0, 10}}));
    CHECK(s.bands[0].mean == 5.0);
    CHECK(s.bands[0].std == 5.0);
  }
  SUBCASE("all nodata") {
    CHECK(code_of([] { band_stats(RasterImage(2, 1, {{-1, -1}}, -1.0)); }) == ErrorCode::EmptyBand);
  }
  SUBCASE("matches a single pass recomputation") {
    const RasterImage r = random_raster(23, 17, 3, 11);
    const auto s = band_stats(r);
    for (int b = 0; b < 3; ++b) {
      double sum = 0, sq = 0, lo = INFINITY, hi = -INFINITY;
      for (double v : r.band(b)) {
        sum += v;
        sq += v * v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      const double n = static_cast<double>(r.pixel_count());
      const double mean = sum / n;
      const double sd = std::sqrt(std::max(0.0, sq / n - mean * mean));
      CHECK(s.bands[static_cast<std::size_t>(b)].mean == doctest::Approx(mean).epsilon(1e-12));
      CHECK(s.bands[static_cast<std::size_t>(b)].std == doctest::Approx(sd).epsilon(1e-9));
      CHECK(s.bands[static_cast<std::size_t>(b)].min == lo);
      CHECK(s.bands[static_cast<std::size_t>(b)].max == hi);
      CHECK(s.bands[static_cast<std::size_t>(b)].valid_count == r.pixel_count());
    }
  }
}

TEST_CASE("percentile interpolates between ranks") {
  const std::vector<double> v{0, 10, 20, 30};
  CHECK(percentile(v, 0) == 0.0);
  CHECK(percentile(v, 100) == 30.0);
  CHECK(percentile(v, 50) == doctest::Approx(15.0));
}

TEST_CASE("render preview") {
  SUBCASE("single pixel is opaque") {
    const auto img = render_preview(RasterImage(1, 1, {{7}}), {0, 0, 0}, {0, 100});
    REQUIRE(img.pixels.size() == 4);
    CHECK(img.pixels[3] == 255);
  }
  SUBCASE("two-pixel stretch") {
    const auto img = render_preview(RasterImage(2, 1, {{0, 100}}), {0, 0, 0}, {0, 100});
    CHECK(img.pixels[0] == 0);
    CHECK(img.pixels[4] == 255);
    CHECK(img.pixels[5] == 255);
  }
  SUBCASE("nodata is transparent") {
    const auto img = render_preview(RasterImage(2, 1, {{-1, 5}}, -1.0), {0, 0, 0}, {0, 100});
    CHECK(img.pixels[3] == 0);
    CHECK(img.pixels[7] == 255);
  }
  SUBCASE("bad band") {
    CHECK(code_of([] { render_preview(RasterImage(1, 1, {{1}}), {0, 1, 0}); }) == ErrorCode::BadBandSelection);
  }
  SUBCASE("deterministic and PNG encoded") {
    const RasterImage r = random_raster(9, 5, 3, 3);
    const auto a = encode_png(render_preview(r, {2, 1, 0}));
    const auto b = encode_png(render_preview(r, {2, 1, 0}));
    CHECK(a == b);
    REQUIRE(a.size() > 8);
    CHECK(a[1] == 'P');
    CHECK(a[2] == 'N');
    CHECK(a[3] == 'G');
  }
}

TEST_CASE("nodata when any band holds the sentinel") {
  const RasterImage r(2, 1, {{0, 1}, {1, 0}}, 0.0);
  CHECK(r.is_nodata(0, 0));
  CHECK(r.is_nodata(0, 1));
}

TEST_CASE("raster digest tracks content") {
  const RasterImage a = random_raster(4, 4, 3, 1);
  const RasterImage b = random_raster(4, 4, 3, 2);
  CHECK(raster_digest(a) == raster_digest(a));
  CHECK(raster_digest(a) != raster_digest(b));
  CHECK(raster_digest(a).size() == 64);
}

TEST_CASE("load_raster dispatches on path") {
  TempDir dir;
  const RasterImage r = random_raster(3, 2, 3, 5);
  const auto header = write_gridpack(r, dir / "pack");
  CHECK(load_raster(header) == r);
  CHECK(load_raster(dir / "pack") == r);
}
