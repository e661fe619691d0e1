#pragma once

#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "deltaforge/geometry.hpp"
#include "deltaforge/georef.hpp"

namespace deltaforge {

enum class FeatureKind { Point, Line, Polygon, Skeleton };
enum class Stage { Auto, Edited, Validated };

std::string_view to_string(FeatureKind kind);
std::string_view to_string(Stage stage);
FeatureKind parse_kind(std::string_view s);
Stage parse_stage(std::string_view s);

/// One version of a stored primitive. Geometry is in pixel-corner coordinates.
struct StoredFeature {
  std::string id;
  FeatureKind kind = FeatureKind::Polygon;
  int class_id = 0;
  Geometry geometry;
  BBox bbox;
  Stage stage = Stage::Auto;
  int version = 1;
  std::optional<int> parent_version;
  std::string created_at;
  bool lossy_simplified = false;
  bool operator==(const StoredFeature&) const = default;
};

struct NewFeature {
  FeatureKind kind = FeatureKind::Polygon;
  int class_id = 0;
  Geometry geometry;
  Stage stage = Stage::Auto;
  bool lossy_simplified = false;
};

struct Query {
  std::optional<std::set<int>> classes;
  std::optional<BBox> bbox;  // intersects
  std::optional<std::set<FeatureKind>> kinds;
  std::optional<std::set<Stage>> stages;

  bool matches(const StoredFeature& f) const;
};

/// Throws RejectedGeometry when `geometry` does not fit `kind` or violates
/// the ring rules (closed, simple, exterior positive, holes negative and
/// inside the exterior).
void validate_geometry(FeatureKind kind, const Geometry& geometry);

/// Embedded store of image primitives with full version history.
///
/// Single writer, many readers: mutations take an exclusive lock, reads a
/// shared one, so a query observes one consistent state. Ids are UUID-shaped
/// and derived from `id_seed` plus an insertion counter, which makes them
/// reproducible for a given seed.
class PrimitiveStore {
 public:
  using Clock = std::function<std::string()>;

  explicit PrimitiveStore(std::string id_seed = {}, CrsId crs = {}, AffineTransform geo = {});
  PrimitiveStore(const PrimitiveStore& other);
  PrimitiveStore& operator=(const PrimitiveStore& other);

  void set_clock(Clock clock);

  std::string insert(const NewFeature& feature);
  int update_geometry(const std::string& id, const std::optional<Geometry>& geometry,
                      std::optional<Stage> stage);

  StoredFeature get(const std::string& id) const;
  std::vector<StoredFeature> history(const std::string& id) const;
  std::vector<StoredFeature> query(const Query& q) const;
  std::vector<StoredFeature> all() const { return query({}); }
  std::size_t size() const;

  const CrsId& crs() const { return crs_; }
  const AffineTransform& geotransform() const { return geo_; }

  /// JSON-Lines: a header line, then one line per feature holding its
  /// full version history.
  std::string snapshot_text() const;
  static PrimitiveStore snapshot_parse(std::istream& in, const std::string& source);
  void snapshot_save(const std::filesystem::path& path) const;
  static PrimitiveStore snapshot_load(const std::filesystem::path& path);

  bool operator==(const PrimitiveStore& other) const;

  static constexpr int kFormatVersion = 1;

 private:
  void index_insert(const std::string& id, const BBox& box);
  void index_erase(const std::string& id, const BBox& box);
  std::vector<std::pair<std::int64_t, std::int64_t>> cells(const BBox& box) const;

  mutable std::shared_mutex mutex_;
  std::string id_seed_;
  std::uint64_t next_sequence_ = 0;
  CrsId crs_;
  AffineTransform geo_;
  Clock clock_;
  std::map<std::string, std::vector<StoredFeature>> features_;  // id -> history
  std::unordered_map<std::int64_t, std::set<std::string>> grid_;
};

std::string utc_timestamp();

}  // namespace deltaforge
