#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "deltaforge/classify.hpp"
#include "deltaforge/components.hpp"
#include "deltaforge/raster.hpp"

namespace testsupport {

using namespace deltaforge;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "df");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

// Minimal TIFF writer for fixtures.
struct TiffSpec {
  bool big_endian = false;
  int width = 1;
  int height = 1;
  int bands = 1;
  int bits = 8;
  int sample_format = 1;  // 1 uint, 2 int, 3 float
  int compression = 1;
  bool tiled = false;
  int tile_width = 16;
  int tile_height = 16;
  int rows_per_strip = 0;  // 0: whole image
  bool planar = false;
  std::vector<double> samples;  // band-major, each band row-major
  std::optional<std::array<double, 3>> pixel_scale = std::array<double, 3>{30.0, 30.0, 0.0};
  std::optional<std::array<double, 6>> tiepoint = std::array<double, 6>{0, 0, 0, 650000.0, 3290000.0, 0};
  std::optional<int> epsg;
  bool geographic = false;
  std::optional<std::string> nodata;
  std::optional<int> predictor;
  std::size_t truncate_bytes = 0;  // cut from the end of the file
};

std::vector<std::uint8_t> write_tiff(const TiffSpec& spec);

/// Random raster with values representable in `bits`/`sample_format`.
std::vector<double> random_samples(std::mt19937_64& rng, std::size_t n, int bits, int sample_format);

// Synthetic delta: three spectral classes over a channel network.
inline constexpr int kWater = 1;
inline constexpr int kVegetation = 2;
inline constexpr int kSoil = 3;

struct SpectralClass {
  int id;
  std::array<double, 3> mean;
};

/// Per-class band means (green, red, near-infrared, in DN).
const std::array<SpectralClass, 3>& delta_classes();
inline constexpr double kDeltaNoise = 400.0;

struct SyntheticDelta {
  RasterImage raster;
  ClassMap truth;
};

/// 3-band raster in UTM 15N with i.i.d. Gaussian noise around the class means.
SyntheticDelta make_delta(int size, std::uint64_t seed);

/// Classifies by nearest class mean (maximum likelihood under the
/// generator's isotropic noise); accuracy is a lower bound on Bayes accuracy.
double nearest_mean_accuracy(const SyntheticDelta& d);

Palette delta_palette();

/// `per_class` random truth pixels of each class.
std::vector<LabelSample> sample_labels(const ClassMap& truth, int per_class, std::mt19937_64& rng);

// Random class maps.
ClassMap random_blobs(int width, int height, int classes, double fill, std::mt19937_64& rng);
ClassMap random_noise(int width, int height, int classes, double fill, std::mt19937_64& rng);
ClassMap from_rows(const std::vector<std::string>& rows);

/// Recursive-style flood fill (explicit stack) with 4-connectivity; returns
/// labels renumbered by first row-major pixel.
std::vector<int> flood_fill_labels(const ClassMap& map);

/// True when `a` and `b` induce the same partition of pixels.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace testsupport
