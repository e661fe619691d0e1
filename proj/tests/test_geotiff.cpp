#include <doctest.h>

#include "deltaforge/error.hpp"
#include "deltaforge/geotiff.hpp"
#include "support.hpp"

using namespace deltaforge;
using testsupport::TiffSpec;
using testsupport::write_tiff;

namespace {

Error error_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an error");
  return Error(ErrorCode::Io, "");
}

}  // namespace

TEST_CASE("hand-built 2x2 fixtures in both byte orders") {
  // Assembled explicitly: header(8) + IFD(2 + 9*12 + 4 = 114) = 122,
  // scale doubles at 122 (24 bytes), tiepoint at 146 (48 bytes), pixels at 194.
  auto le16 = [](std::vector<std::uint8_t>& v, unsigned x) { v.push_back(x & 0xff); v.push_back((x >> 8) & 0xff); };
  auto le32 = [&](std::vector<std::uint8_t>& v, unsigned x) { le16(v, x & 0xffff); le16(v, x >> 16); };
  auto be16 = [](std::vector<std::uint8_t>& v, unsigned x) { v.push_back((x >> 8) & 0xff); v.push_back(x & 0xff); };
  auto be32 = [&](std::vector<std::uint8_t>& v, unsigned x) { be16(v, x >> 16); be16(v, x & 0xffff); };
  // IEEE-754 big-endian bytes of 30.0, 100.0, 200.0
  const std::uint8_t d30[8] = {0x40, 0x3e, 0, 0, 0, 0, 0, 0};
  const std::uint8_t d100[8] = {0x40, 0x59, 0, 0, 0, 0, 0, 0};
  const std::uint8_t d200[8] = {0x40, 0x69, 0, 0, 0, 0, 0, 0};
  const std::uint8_t d0[8] = {0, 0, 0, 0, 0, 0, 0, 0};

  auto build = [&](bool big) {
    std::vector<std::uint8_t> v;
    auto u16 = [&](unsigned x) { big ? be16(v, x) : le16(v, x); };
    auto u32 = [&](unsigned x) { big ? be32(v, x) : le32(v, x); };
    auto short_entry = [&](unsigned tag, unsigned value) {
      u16(tag); u16(3); u32(1); u16(value); u16(0);
    };
    auto dbl = [&](const std::uint8_t* b) {
      for (int i = 0; i < 8; ++i) v.push_back(big ? b[i] : b[7 - i]);
    };
    v.push_back(big ? 'M' : 'I');
    v.push_back(big ? 'M' : 'I');
    u16(42);
    u32(8);
    u16(9);
    short_entry(256, 2);
    short_entry(257, 2);
    short_entry(258, 8);
    short_entry(259, 1);
    u16(273); u16(4); u32(1); u32(194);
    short_entry(277, 1);
    u16(279); u16(4); u32(1); u32(4);
    u16(33550); u16(12); u32(3); u32(122);
    u16(33922); u16(12); u32(6); u32(146);
    u32(0);
    REQUIRE(v.size() == 122);
    dbl(d30); dbl(d30); dbl(d0);
    dbl(d0); dbl(d0); dbl(d0); dbl(d100); dbl(d200); dbl(d0);
    REQUIRE(v.size() == 194);
    for (std::uint8_t p : {1, 2, 3, 4}) v.push_back(p);
    return v;
  };

  const RasterImage le = parse_geotiff(build(false));
  const RasterImage be = parse_geotiff(build(true));
  CHECK(le.width() == 2);
  CHECK(le.height() == 2);
  CHECK(le.at(0, 0, 0) == 1);
  CHECK(le.at(0, 0, 1) == 2);
  CHECK(le.at(0, 1, 0) == 3);
  CHECK(le.at(0, 1, 1) == 4);
  CHECK(be == le);
  CHECK(le.geo() == AffineTransform{30, 0, 100, 0, -30, 200});
  CHECK_FALSE(le.crs().is_known());
}

TEST_CASE("writer fixtures decode to the source samples") {
  std::mt19937_64 rng(99);
  struct Variant {
    int bits, fmt;
  };
  for (Variant v : {Variant{8, 1}, Variant{8, 2}, Variant{16, 1}, Variant{16, 2}, Variant{32, 1}, Variant{32, 2},
                    Variant{32, 3}}) {
    for (bool big : {false, true}) {
      for (int compression : {1, 8}) {
        for (int layout = 0; layout < 3; ++layout) {
          for (bool planar : {false, true}) {
            TiffSpec s;
            s.big_endian = big;
            s.width = 37;
            s.height = 21;
            s.bands = 3;
            s.bits = v.bits;
            s.sample_format = v.fmt;
            s.compression = compression;
            s.planar = planar;
            s.tiled = layout == 2;
            s.rows_per_strip = layout == 1 ? 4 : 0;
            s.samples = testsupport::random_samples(rng, 37 * 21 * 3, v.bits, v.fmt);
            const RasterImage r = parse_geotiff(write_tiff(s));
            CAPTURE(v.bits);
            CAPTURE(v.fmt);
            CAPTURE(big);
            CAPTURE(compression);
            CAPTURE(layout);
            CAPTURE(planar);
            REQUIRE(r.band_count() == 3);
            bool same = true;
            for (int b = 0; b < 3; ++b) {
              for (std::size_t i = 0; i < r.pixel_count(); ++i) {
                same = same && r.band(b)[i] == s.samples[static_cast<std::size_t>(b) * r.pixel_count() + i];
              }
            }
            CHECK(same);
          }
        }
      }
    }
  }
}

TEST_CASE("uncompressed and DEFLATE fixtures agree in both byte orders") {
  std::mt19937_64 rng(5);
  TiffSpec s;
  s.width = 64;
  s.height = 48;
  s.bands = 3;
  s.bits = 16;
  s.samples = testsupport::random_samples(rng, 64 * 48 * 3, 16, 1);
  std::vector<RasterImage> decoded;
  for (bool big : {false, true}) {
    for (int compression : {1, 8}) {
      s.big_endian = big;
      s.compression = compression;
      decoded.push_back(parse_geotiff(write_tiff(s)));
    }
  }
  for (const auto& r : decoded) CHECK(r == decoded.front());
}

TEST_CASE("unsupported features name the offending tag") {
  TiffSpec s;
  s.width = s.height = 2;
  s.samples = {1, 2, 3, 4};
  SUBCASE("LZW") {
    s.compression = 5;
    const Error e = error_of([&] { parse_geotiff(write_tiff(s)); });
    CHECK(e.code() == ErrorCode::UnsupportedTiff);
    CHECK(e.detail() == 259);
  }
  SUBCASE("bit depth") {
    s.bits = 8;
    auto bytes = write_tiff(s);
    // Patch BitsPerSample (third entry) to 12 in place.
    const std::size_t entry = 8 + 2 + 2 * 12;
    REQUIRE(bytes[entry] == 0x02);
    bytes[entry + 8] = 12;
    const Error e = error_of([&] { parse_geotiff(bytes); });
    CHECK(e.code() == ErrorCode::UnsupportedTiff);
    CHECK(e.detail() == 258);
  }
  SUBCASE("predictor") {
    s.predictor = 2;
    const Error e = error_of([&] { parse_geotiff(write_tiff(s)); });
    CHECK(e.code() == ErrorCode::UnsupportedTiff);
    CHECK(e.detail() == 317);
  }
}

TEST_CASE("truncated strip reports its byte offset") {
  TiffSpec s;
  s.width = 8;
  s.height = 8;
  s.samples.assign(64, 7);
  const auto whole = write_tiff(s);
  const std::size_t strip_offset = whole.size() - 64;
  s.truncate_bytes = 10;
  const Error e = error_of([&] { parse_geotiff(write_tiff(s)); });
  CHECK(e.code() == ErrorCode::CorruptTiff);
  CHECK(e.detail() == static_cast<std::int64_t>(strip_offset));

  s.truncate_bytes = 10;
  s.compression = 8;
  CHECK(error_of([&] { parse_geotiff(write_tiff(s)); }).code() == ErrorCode::CorruptTiff);
}

TEST_CASE("missing georeference") {
  TiffSpec s;
  s.samples = {1};
  s.tiepoint.reset();
  CHECK(error_of([&] { parse_geotiff(write_tiff(s)); }).code() == ErrorCode::MissingGeoreference);
}

TEST_CASE("geokeys and nodata") {
  TiffSpec s;
  s.width = 2;
  s.height = 1;
  s.samples = {0, 9};
  s.epsg = 32615;
  s.nodata = "0";
  s.pixel_scale = std::array<double, 3>{30, 30, 0};
  s.tiepoint = std::array<double, 6>{0, 0, 0, 650000, 3290000, 0};
  RasterImage r = parse_geotiff(write_tiff(s));
  CHECK(r.crs() == CrsId::utm(15, Hemisphere::North));
  REQUIRE(r.nodata());
  CHECK(*r.nodata() == 0.0);
  CHECK(r.is_nodata(0, 0));
  CHECK(r.geo() == AffineTransform{30, 0, 650000, 0, -30, 3290000});

  s.epsg = 4326;
  s.geographic = true;
  s.nodata.reset();
  s.pixel_scale = std::array<double, 3>{0.5, 0.25, 0};
  s.tiepoint = std::array<double, 6>{1, 2, 0, -91.0, 30.0, 0};
  r = parse_geotiff(write_tiff(s));
  CHECK(r.crs() == CrsId::wgs84());
  // Tiepoint at pixel (1,2) -> origin shifted back by one column and two rows.
  CHECK(r.geo() == AffineTransform{0.5, 0, -91.5, 0, -0.25, 30.5});
}

TEST_CASE("bad magic is corrupt") {
  std::vector<std::uint8_t> junk{'X', 'Y', 0, 0, 0, 0, 0, 0};
  CHECK(error_of([&] { parse_geotiff(junk); }).code() == ErrorCode::CorruptTiff);
}
