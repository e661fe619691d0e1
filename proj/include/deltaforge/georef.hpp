#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>

namespace deltaforge {

/// Pixel-to-world mapping:
///   x = c + a*col + b*row
///   y = f + d*col + e*row
/// Same coefficient layout as a GDAL geotransform, reordered to (a..f).
struct AffineTransform {
  double a = 1.0, b = 0.0, c = 0.0;
  double d = 0.0, e = 1.0, f = 0.0;

  double determinant() const { return a * e - b * d; }
  bool operator==(const AffineTransform&) const = default;
};

inline constexpr double kSingularDeterminant = 1e-15;

struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
};

std::pair<double, double> apply_affine(const AffineTransform& t, double col, double row);
AffineTransform invert_affine(const AffineTransform& t);

struct GroundControlPoint {
  double col = 0.0;
  double row = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct AffineFit {
  AffineTransform transform;
  double rms_residual = 0.0;  // world units
};

/// Least-squares affine from >= 3 non-collinear control points.
AffineFit fit_affine(std::span<const GroundControlPoint> gcps);

enum class Hemisphere { North, South };

struct CrsId {
  enum class Kind { Unknown, Wgs84Geographic, Utm };
  Kind kind = Kind::Unknown;
  int zone = 0;
  Hemisphere hemisphere = Hemisphere::North;
  std::optional<int> epsg;

  static CrsId unknown() { return {}; }
  static CrsId wgs84();
  static CrsId utm(int zone, Hemisphere hemisphere);
  /// 4326 -> WGS84, 326zz/327zz -> UTM; anything else -> Unknown carrying the code.
  static CrsId from_epsg(int code);

  bool is_known() const { return kind != Kind::Unknown; }
  std::string describe() const;
  bool operator==(const CrsId&) const = default;
};

// WGS84 / UTM constants.
inline constexpr double kWgs84A = 6378137.0;
inline constexpr double kWgs84F = 1.0 / 298.257223563;
inline constexpr double kUtmScale = 0.9996;
inline constexpr double kUtmFalseEasting = 500000.0;
inline constexpr double kUtmFalseNorthingSouth = 10000000.0;

double utm_central_meridian(int zone);

/// Transverse Mercator via the 6th-order Krueger series in the third
/// flattening. Accurate to well under a millimetre within a UTM zone.
std::pair<double, double> utm_to_wgs84(double x, double y, int zone, Hemisphere hemisphere);
std::pair<double, double> wgs84_to_utm(double lon, double lat, int zone,
                                       Hemisphere hemisphere = Hemisphere::North);

}  // namespace deltaforge
