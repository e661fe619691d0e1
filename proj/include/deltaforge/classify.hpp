#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "deltaforge/raster.hpp"

namespace deltaforge {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// One land-cover class. Class id 0 is reserved for "unclassified".
/// `parent_id` groups micro classes under a macro class; it is display
/// metadata only and does not affect training.
struct ClassDef {
  int id = 0;
  std::string name;
  Rgb color;
  std::optional<int> parent_id;
  bool operator==(const ClassDef&) const = default;
};

class Palette {
 public:
  Palette() = default;
  /// Throws BadPalette on duplicate/reserved ids, dangling parents or
  /// nesting deeper than macro -> micro.
  explicit Palette(std::vector<ClassDef> classes);

  const std::vector<ClassDef>& classes() const { return classes_; }
  const ClassDef* find(int id) const;
  const ClassDef* find(std::string_view name) const;
  std::vector<int> ids() const;
  bool operator==(const Palette&) const = default;

 private:
  std::vector<ClassDef> classes_;
};

Palette read_palette(const std::filesystem::path& path);
nlohmann::json palette_to_json(const Palette& palette);
Palette palette_from_json(const nlohmann::json& j);

struct LabelSample {
  int row = 0;
  int col = 0;
  int class_id = 0;
  bool operator==(const LabelSample&) const = default;
};

/// Training labels keyed by pixel, kept sorted row-major with at most one
/// label per pixel.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::string raster_digest) : digest_(std::move(raster_digest)) {}

  const std::string& raster_digest() const { return digest_; }
  const std::vector<LabelSample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  /// Inserts or overwrites the label at (row, col).
  void set(int row, int col, int class_id);
  std::optional<int> get(int row, int col) const;
  std::map<int, std::size_t> counts() const;

  bool operator==(const LabelSet&) const = default;

 private:
  std::string digest_;
  std::vector<LabelSample> samples_;
};

/// Pixel-keyed union; `additions` win on conflict.
LabelSet merge_labels(const LabelSet& base, const LabelSet& additions);

nlohmann::json labels_to_json(const LabelSet& labels);
LabelSet labels_from_json(const nlohmann::json& j);
LabelSet read_labels(const std::filesystem::path& path);
void write_labels(const LabelSet& labels, const std::filesystem::path& path);

/// Per-band z-score from training samples. Zero-variance bands keep std 1.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t bands() const { return mean.size(); }
  void apply(std::span<const double> raw, std::span<double> out) const;
  bool operator==(const Normalizer&) const = default;
};

Normalizer fit_normalizer(std::span<const double> features, std::size_t bands);

/// Row-major N x B feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * cols, cols);
  }
};

struct TrainingSet {
  FeatureMatrix features;  // normalized
  std::vector<int> targets;
  Normalizer normalizer;
  std::vector<std::string> warnings;
};

/// Extracts labeled pixels in row-major order and z-scores them. With a
/// palette, defined classes without samples produce a warning.
TrainingSet build_training_set(const RasterImage& raster, const LabelSet& labels,
                               const Palette* palette = nullptr);

/// Raw (un-normalized) spectral vector of one pixel.
std::vector<double> pixel_features(const RasterImage& raster, int row, int col);

class ClassMap {
 public:
  ClassMap() = default;
  ClassMap(int width, int height, std::vector<int> class_table);

  int width() const { return width_; }
  int height() const { return height_; }
  int at(int row, int col) const { return ids_[index(row, col)]; }
  void set(int row, int col, int id) { ids_[index(row, col)] = id; }
  std::span<const int> ids() const { return ids_; }
  std::span<int> ids() { return ids_; }
  const std::vector<int>& class_table() const { return table_; }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }
  bool operator==(const ClassMap&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<int> ids_;
  std::vector<int> table_;
};

void write_classmap(const ClassMap& map, const std::filesystem::path& path);
ClassMap read_classmap(const std::filesystem::path& path);

struct Evaluation {
  std::vector<int> classes;                        // row/column order of the matrix
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  double accuracy = 0.0;
  std::vector<std::optional<double>> recall;  // empty when a class has no truth pixels
  std::size_t valid = 0;
};

/// Compares predictions with truth labels. Truth pixels that the map left
/// unclassified (0) are excluded from the totals.
Evaluation evaluate(const ClassMap& map, const LabelSet& truth);

nlohmann::json evaluation_to_json(const Evaluation& e);

}  // namespace deltaforge
