#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "deltaforge/classify.hpp"
#include "deltaforge/models.hpp"
#include "deltaforge/store.hpp"

namespace deltaforge {

enum class ModelKind { Svm, Knn };
std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view s);

struct PipelineConfig {
  SvmParams svm;
  int knn_k = 5;
  double holdout_fraction = 0.2;
  double epsilon = 0.75;
  int min_pixels = 4;
  bool skeleton = false;
  std::vector<std::string> skeleton_classes{"water"};
  std::string tagmap;  // empty: built-in default
  bool export_points = false;
  int threads = 0;

  /// Throws BadRequest on out-of-range values.
  void validate() const;
  bool operator==(const PipelineConfig& o) const;
};

nlohmann::json config_to_json(const PipelineConfig& c);
/// Missing keys keep the values of `base`.
PipelineConfig config_from_json(const nlohmann::json& j, const PipelineConfig& base = {});

struct IterationRecord {
  int iteration = 0;
  std::string model;
  std::map<int, std::size_t> sample_counts;
  std::size_t train_size = 0;
  std::size_t holdout_size = 0;
  std::optional<double> holdout_accuracy;  // empty when the holdout is empty
  bool operator==(const IterationRecord&) const = default;
};

struct Session {
  std::string id;
  std::filesystem::path dir;
  std::filesystem::path raster_path;
  std::shared_ptr<const RasterImage> raster;
  std::string raster_digest;
  std::optional<AffineTransform> geo_override;  // from GCPs
  std::optional<int> epsg_override;
  Palette palette;
  LabelSet labels;
  std::optional<Model> model;
  std::optional<ClassMap> classmap;
  std::vector<IterationRecord> iterations;
  PrimitiveStore store;
  PipelineConfig config;

  std::map<int, std::string> class_names() const;
  /// Equality of persisted state (raster compared by digest).
  bool same_state(const Session& other) const;
};

struct CreateOptions {
  std::optional<std::filesystem::path> gcps;  // JSON list of {col,row,x,y}
  std::optional<int> epsg;
};

Session session_create(const std::filesystem::path& dir, const std::filesystem::path& raster_path,
                       const Palette& palette, const PipelineConfig& config = {},
                       const CreateOptions& options = {});
void session_save(const Session& session);
Session session_load(const std::filesystem::path& dir);
bool is_session_dir(const std::filesystem::path& dir);

std::vector<GroundControlPoint> read_gcps(const std::filesystem::path& path);

/// Rejects out-of-bounds, nodata and unknown-class samples with BadLabel.
/// A non-empty `digest` must match the session raster (StaleLabels).
std::map<int, std::size_t> add_labels(Session& session, const std::vector<LabelSample>& samples,
                                      const std::string& digest = {});

struct TrainOverrides {
  std::optional<double> c;
  std::optional<double> gamma;
  std::optional<int> k;
  std::optional<std::uint64_t> seed;
};

struct TrainSplit {
  std::vector<LabelSample> train;
  std::vector<LabelSample> holdout;
};

/// Per class, a seeded shuffle moves round(fraction * n) samples to the
/// holdout, always leaving at least one for training.
TrainSplit stratified_split(const LabelSet& labels, double fraction, std::uint64_t seed);

struct TrainResult {
  IterationRecord record;
  std::vector<std::string> warnings;
};

TrainResult run_train(Session& session, ModelKind kind, const TrainOverrides& overrides = {});

/// Palette colours at 60% alpha; unclassified pixels transparent.
RgbaImage render_overlay(const ClassMap& map, const Palette& palette);

struct ClassifyResult {
  std::map<int, std::size_t> pixel_counts;
  std::filesystem::path overlay;
};

ClassifyResult run_classify(Session& session);

struct VectorizeOptions {
  std::optional<double> epsilon;
  std::optional<bool> skeleton;
  std::optional<int> min_pixels;
};

struct VectorizeResult {
  std::size_t polygons = 0;
  std::size_t skeletons = 0;
  std::size_t skipped_small = 0;
  std::size_t simplification_reverted = 0;
};

/// Replaces the session store with freshly traced features (stage auto).
VectorizeResult run_vectorize(Session& session, const VectorizeOptions& options = {});

struct FeaturePatch {
  std::string id;
  std::optional<Geometry> geometry;
  std::optional<Stage> stage;
};

/// {"id", "geometry"?, "stage"?} or a list of them.
std::vector<FeaturePatch> patches_from_json(const nlohmann::json& j);
std::vector<int> apply_patches(Session& session, const std::vector<FeaturePatch>& patches);

enum class ExportFormat { Osm, GeoJson, Snapshot };
ExportFormat parse_export_format(std::string_view s);

struct ExportResult {
  std::string content;
  std::size_t feature_count = 0;
  std::vector<std::string> warnings;
};

/// Renders the export in memory. OSM and GeoJSON need a known CRS and by
/// default carry only validated features.
ExportResult export_session(const Session& session, ExportFormat format, bool include_unvalidated);
void write_export(const ExportResult& result, const std::filesystem::path& path);

nlohmann::json session_summary(const Session& session);
nlohmann::json iteration_to_json(const IterationRecord& r);
nlohmann::json feature_to_json(const StoredFeature& f);

}  // namespace deltaforge
