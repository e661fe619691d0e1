#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "deltaforge/error.hpp"
#include "deltaforge/georef.hpp"

using namespace deltaforge;

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

}  // namespace

TEST_CASE("apply and invert affine") {
  const AffineTransform t{30, 0, 650000, 0, -30, 3290000};
  const auto [x, y] = apply_affine(t, 10, 20);
  CHECK(x == 650300.0);
  CHECK(y == 3289400.0);
  const auto inv = invert_affine(t);
  const auto [col, row] = apply_affine(inv, x, y);
  CHECK(col == doctest::Approx(10.0));
  CHECK(row == doctest::Approx(20.0));
  CHECK(code_of([] { invert_affine(AffineTransform{1, 2, 0, 2, 4, 0}); }) == ErrorCode::SingularTransform);
}

TEST_CASE("exact affine fit recovers random transforms") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coef(-50, 50), px(0, 1000);
  for (int trial = 0; trial < 1000; ++trial) {
    AffineTransform t{coef(rng), coef(rng), coef(rng) * 1e4, coef(rng), coef(rng), coef(rng) * 1e4};
    if (std::abs(t.determinant()) < 1.0) continue;
    std::vector<GroundControlPoint> gcps;
    for (int i = 0; i < 4; ++i) {
      const double c = px(rng), r = px(rng);
      const auto [x, y] = apply_affine(t, c, r);
      gcps.push_back({c, r, x, y});
    }
    const auto fit = fit_affine(gcps);
    CHECK(fit.transform.a == doctest::Approx(t.a).epsilon(1e-7));
    CHECK(fit.transform.e == doctest::Approx(t.e).epsilon(1e-7));
    CHECK(fit.transform.c == doctest::Approx(t.c).epsilon(1e-7));
    CHECK(fit.rms_residual < 1e-5);
  }
}

TEST_CASE("noisy affine fit stays within the noise") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0, 0.5);
  std::uniform_real_distribution<double> px(0, 2000);
  const AffineTransform t{30, 0.5, 650000, -0.4, -30, 3290000};
  std::vector<GroundControlPoint> gcps;
  for (int i = 0; i < 50; ++i) {
    const double c = px(rng), r = px(rng);
    const auto [x, y] = apply_affine(t, c, r);
    gcps.push_back({c, r, x + noise(rng), y + noise(rng)});
  }
  const auto fit = fit_affine(gcps);
  CHECK(fit.rms_residual <= 1.0);
  CHECK(fit.transform.a == doctest::Approx(30).epsilon(1e-3));
}

TEST_CASE("degenerate control points") {
  CHECK(code_of([] {
          std::vector<GroundControlPoint> g{{0, 0, 0, 0}, {1, 1, 1, 1}};
          fit_affine(g);
        }) == ErrorCode::DegenerateGcps);
  CHECK(code_of([] {
          std::vector<GroundControlPoint> g{{0, 0, 0, 0}, {1, 1, 1, 1}, {2, 2, 5, 3}};
          fit_affine(g);
        }) == ErrorCode::DegenerateGcps);
  CHECK(code_of([] {
          std::vector<GroundControlPoint> g{{0, 0, 0, 0}, {1, 0, 1, 1}, {0, 1, NAN, 3}};
          fit_affine(g);
        }) == ErrorCode::DegenerateGcps);
}

TEST_CASE("CRS identifiers") {
  CHECK(CrsId::from_epsg(4326) == CrsId::wgs84());
  CHECK(CrsId::from_epsg(32615) == CrsId::utm(15, Hemisphere::North));
  CHECK(CrsId::from_epsg(32721) == CrsId::utm(21, Hemisphere::South));
  CHECK_FALSE(CrsId::from_epsg(3857).is_known());
  CHECK(CrsId::from_epsg(3857).epsg == 3857);
  CHECK(utm_central_meridian(15) == -93.0);
  CHECK(code_of([] { utm_to_wgs84(0, 0, 61, Hemisphere::North); }) == ErrorCode::BadZone);
  CHECK(code_of([] { wgs84_to_utm(0, 0, 0); }) == ErrorCode::BadZone);
}

// Reference values computed independently with pyproj (EPSG:326xx/327xx -> 4326).
TEST_CASE("UTM conversions match reference values") {
  {
    const auto [lon, lat] = utm_to_wgs84(660000, 3290000, 15, Hemisphere::North);
    CHECK(lon == doctest::Approx(-91.345649551969).epsilon(1e-11));
    CHECK(lat == doctest::Approx(29.729878248727).epsilon(1e-11));
  }
  {
    const auto [x, y] = wgs84_to_utm(-93, 0, 15);
    CHECK(x == doctest::Approx(500000.0));
    CHECK(std::abs(y) < 1e-6);
  }
  {
    const auto [x, y] = wgs84_to_utm(-91.4, 29.5, 15);
    CHECK(std::abs(x - 655094.457396500) < 1e-3);
    CHECK(std::abs(y - 3264449.933202960) < 1e-3);
  }
  {
    const auto [lon, lat] = utm_to_wgs84(420000, 6500000, 15, Hemisphere::South);
    CHECK(lon == doctest::Approx(-93.843598869213).epsilon(1e-11));
    CHECK(lat == doctest::Approx(-31.632399263510).epsilon(1e-11));
  }
}

TEST_CASE("UTM round trip over a zone grid") {
  double worst = 0;
  for (int zone : {1, 15, 33, 60}) {
    for (auto hemi : {Hemisphere::North, Hemisphere::South}) {
      for (double x = 200000; x <= 800000; x += 100000) {
        for (double y = 100000; y <= 9000000; y += 800000) {
          const auto [lon, lat] = utm_to_wgs84(x, y, zone, hemi);
          const auto [x2, y2] = wgs84_to_utm(lon, lat, zone, hemi);
          worst = std::max({worst, std::abs(x2 - x), std::abs(y2 - y)});
        }
      }
    }
  }
  CHECK(worst < 1e-6);
}
