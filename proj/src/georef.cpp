#include "deltaforge/georef.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "deltaforge/error.hpp"

namespace deltaforge {

std::pair<double, double> apply_affine(const AffineTransform& t, double col, double row) {
  return {t.c + t.a * col + t.b * row, t.f + t.d * col + t.e * row};
}

AffineTransform invert_affine(const AffineTransform& t) {
  const double det = t.determinant();
  if (!(std::abs(det) > kSingularDeterminant)) {
    throw Error(ErrorCode::SingularTransform, "affine determinant is zero");
  }
  AffineTransform inv;
  inv.a = t.e / det;
  inv.b = -t.b / det;
  inv.d = -t.d / det;
  inv.e = t.a / det;
  inv.c = -(inv.a * t.c + inv.b * t.f);
  inv.f = -(inv.d * t.c + inv.e * t.f);
  return inv;
}

AffineFit fit_affine(std::span<const GroundControlPoint> gcps) {
  if (gcps.size() < 3) {
    throw Error(ErrorCode::DegenerateGcps, "at least 3 control points are required");
  }
  for (const auto& g : gcps) {
    if (!std::isfinite(g.col) || !std::isfinite(g.row) || !std::isfinite(g.x) ||
        !std::isfinite(g.y)) {
      throw Error(ErrorCode::DegenerateGcps, "control point is not finite");
    }
  }

  // Centering the pixel coordinates makes the 3x3 normal matrix block
  // diagonal: the constant term decouples and the rest is a 2x2 solve.
  const double n = static_cast<double>(gcps.size());
  double mc = 0, mr = 0, mx = 0, my = 0;
  for (const auto& g : gcps) {
    mc += g.col;
    mr += g.row;
    mx += g.x;
    my += g.y;
  }
  mc /= n;
  mr /= n;
  mx /= n;
  my /= n;

  double scc = 0, scr = 0, srr = 0, scx = 0, srx = 0, scy = 0, sry = 0;
  for (const auto& g : gcps) {
    const double dc = g.col - mc, dr = g.row - mr;
    const double dx = g.x - mx, dy = g.y - my;
    scc += dc * dc;
    scr += dc * dr;
    srr += dr * dr;
    scx += dc * dx;
    srx += dr * dx;
    scy += dc * dy;
    sry += dr * dy;
  }
  const double det = scc * srr - scr * scr;
  const double scale = scc + srr;
  if (!(scale > 0.0) || !(det > 1e-12 * scale * scale)) {
    throw Error(ErrorCode::DegenerateGcps, "control point pixels are collinear");
  }

  AffineTransform t;
  t.a = (srr * scx - scr * srx) / det;
  t.b = (scc * srx - scr * scx) / det;
  t.d = (srr * scy - scr * sry) / det;
  t.e = (scc * sry - scr * scy) / det;
  t.c = mx - t.a * mc - t.b * mr;
  t.f = my - t.d * mc - t.e * mr;

  double sq = 0.0;
  for (const auto& g : gcps) {
    const auto [x, y] = apply_affine(t, g.col, g.row);
    sq += (x - g.x) * (x - g.x) + (y - g.y) * (y - g.y);
  }
  return {t, std::sqrt(sq / n)};
}

CrsId CrsId::wgs84() {
  CrsId id;
  id.kind = Kind::Wgs84Geographic;
  id.epsg = 4326;
  return id;
}

CrsId CrsId::utm(int zone, Hemisphere hemisphere) {
  if (zone < 1 || zone > 60) {
    throw Error(ErrorCode::BadZone, "UTM zone " + std::to_string(zone) + " out of 1..60");
  }
  CrsId id;
  id.kind = Kind::Utm;
  id.zone = zone;
  id.hemisphere = hemisphere;
  id.epsg = (hemisphere == Hemisphere::North ? 32600 : 32700) + zone;
  return id;
}

CrsId CrsId::from_epsg(int code) {
  if (code == 4326) return wgs84();
  if (code > 32600 && code <= 32660) return utm(code - 32600, Hemisphere::North);
  if (code > 32700 && code <= 32760) return utm(code - 32700, Hemisphere::South);
  CrsId id;
  id.epsg = code;
  return id;
}

std::string CrsId::describe() const {
  switch (kind) {
    case Kind::Wgs84Geographic: return "EPSG:4326";
    case Kind::Utm:
      return "UTM " + std::to_string(zone) + (hemisphere == Hemisphere::North ? "N" : "S");
    case Kind::Unknown: break;
  }
  return epsg ? "unknown (EPSG:" + std::to_string(*epsg) + ")" : "unknown";
}

double utm_central_meridian(int zone) {
  if (zone < 1 || zone > 60) {
    throw Error(ErrorCode::BadZone, "UTM zone " + std::to_string(zone) + " out of 1..60");
  }
  return -183.0 + 6.0 * zone;
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct KruegerSeries {
  double e;         // first eccentricity
  double rectify;   // A: rectifying radius
  std::array<double, 6> alpha;
  std::array<double, 6> beta;
};

const KruegerSeries& series() {
  static const KruegerSeries s = [] {
    const double f = kWgs84F;
    const double n = f / (2.0 - f);
    const double n2 = n * n, n3 = n2 * n, n4 = n3 * n, n5 = n4 * n, n6 = n5 * n;
    KruegerSeries k{};
    k.e = std::sqrt(f * (2.0 - f));
    k.rectify = kWgs84A / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
    k.alpha = {
        n / 2 - 2 * n2 / 3 + 5 * n3 / 16 + 41 * n4 / 180 - 127 * n5 / 288 + 7891 * n6 / 37800,
        13 * n2 / 48 - 3 * n3 / 5 + 557 * n4 / 1440 + 281 * n5 / 630 - 1983433 * n6 / 1935360,
        61 * n3 / 240 - 103 * n4 / 140 + 15061 * n5 / 26880 + 167603 * n6 / 181440,
        49561 * n4 / 161280 - 179 * n5 / 168 + 6601661 * n6 / 7257600,
        34729 * n5 / 80640 - 3418889 * n6 / 1995840,
        212378941 * n6 / 319334400,
    };
    k.beta = {
        n / 2 - 2 * n2 / 3 + 37 * n3 / 96 - n4 / 360 - 81 * n5 / 512 + 96199 * n6 / 604800,
        n2 / 48 + n3 / 15 - 437 * n4 / 1440 + 46 * n5 / 105 - 1118711 * n6 / 3870720,
        17 * n3 / 480 - 37 * n4 / 840 - 209 * n5 / 4480 + 5569 * n6 / 90720,
        4397 * n4 / 161280 - 11 * n5 / 504 - 830251 * n6 / 7257600,
        4583 * n5 / 161280 - 108847 * n6 / 3991680,
        20648693 * n6 / 638668800,
    };
    return k;
  }();
  return s;
}

// tan of conformal latitude from tan of geodetic latitude.
double conformal_tan(double tau, double e) {
  const double tau1 = std::hypot(1.0, tau);
  const double sig = std::sinh(e * std::atanh(e * tau / tau1));
  return std::hypot(1.0, sig) * tau - sig * tau1;
}

// Newton inversion of conformal_tan.
double geodetic_tan(double taup, double e) {
  const double e2m = 1.0 - e * e;
  double tau = taup / e2m;
  const double tol = std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(taup));
  for (int i = 0; i < 10; ++i) {
    const double taupa = conformal_tan(tau, e);
    const double dtau = (taup - taupa) * (1.0 + e2m * tau * tau) /
                        (e2m * std::hypot(1.0, tau) * std::hypot(1.0, taupa));
    tau += dtau;
    if (std::abs(dtau) < tol) break;
  }
  return tau;
}

}  // namespace

std::pair<double, double> wgs84_to_utm(double lon, double lat, int zone, Hemisphere hemisphere) {
  const double lon0 = utm_central_meridian(zone);
  const auto& s = series();
  const double lam = (lon - lon0) * kDeg;
  const double phi = lat * kDeg;

  const double taup = conformal_tan(std::tan(phi), s.e);
  const double xip = std::atan2(taup, std::cos(lam));
  const double etap = std::asinh(std::sin(lam) / std::hypot(taup, std::cos(lam)));

  double xi = xip, eta = etap;
  for (int j = 1; j <= 6; ++j) {
    const double a = s.alpha[j - 1];
    xi += a * std::sin(2 * j * xip) * std::cosh(2 * j * etap);
    eta += a * std::cos(2 * j * xip) * std::sinh(2 * j * etap);
  }
  const double x = kUtmFalseEasting + kUtmScale * s.rectify * eta;
  double y = kUtmScale * s.rectify * xi;
  if (hemisphere == Hemisphere::South) y += kUtmFalseNorthingSouth;
  return {x, y};
}

std::pair<double, double> utm_to_wgs84(double x, double y, int zone, Hemisphere hemisphere) {
  const double lon0 = utm_central_meridian(zone);
  const auto& s = series();
  if (hemisphere == Hemisphere::South) y -= kUtmFalseNorthingSouth;
  const double xi = y / (kUtmScale * s.rectify);
  const double eta = (x - kUtmFalseEasting) / (kUtmScale * s.rectify);

  double xip = xi, etap = eta;
  for (int j = 1; j <= 6; ++j) {
    const double b = s.beta[j - 1];
    xip -= b * std::sin(2 * j * xi) * std::cosh(2 * j * eta);
    etap -= b * std::cos(2 * j * xi) * std::sinh(2 * j * eta);
  }
  const double taup = std::sin(xip) / std::hypot(std::sinh(etap), std::cos(xip));
  const double lam = std::atan2(std::sinh(etap), std::cos(xip));
  const double tau = geodetic_tan(taup, s.e);
  return {lon0 + lam / kDeg, std::atan(tau) / kDeg};
}

}  // namespace deltaforge
